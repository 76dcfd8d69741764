//! Myerson critical prices by breakpoint probing.
//!
//! With everyone else's reports fixed, whether a buyer ends up allocated is a
//! step function of its bid whose jumps can only sit at a finite set of
//! breakpoints (competitor scores rescaled by its multiplier). Evaluating the
//! allocation at every breakpoint and every midpoint between consecutive
//! breakpoints therefore recovers the whole function, and with it the
//! infimum winning bid.

use crate::coins::Coins;
use crate::error::{Error, Result};
use crate::market::ReportProfile;
use crate::scalar::Scalar;

use super::auction::ScoreAuction;
use super::MechanismKind;

/// A deterministic allocation rule, re-runnable on arbitrary reports.
pub trait Allocation<S: Scalar> {
    /// `item -> buyer` for items `0..num_items`.
    fn allocate(&self, reports: &ReportProfile<S>, num_items: usize) -> Vec<Option<usize>>;

    /// Bids of `buyer` at which its allocation may change.
    fn breakpoints(&self, reports: &ReportProfile<S>, buyer: usize) -> Vec<S>;

    fn is_allocated(&self, reports: &ReportProfile<S>, num_items: usize, buyer: usize) -> bool {
        self.allocate(reports, num_items).contains(&Some(buyer))
    }
}

/// The (perturbed) greedy allocation rule without any payments.
#[derive(Debug, Clone)]
pub struct GreedyAllocation<S> {
    pub weights: Option<Vec<S>>,
}

impl<S: Scalar> GreedyAllocation<S> {
    pub fn unweighted() -> Self {
        GreedyAllocation { weights: None }
    }

    pub fn weighted(weights: Vec<S>) -> Self {
        GreedyAllocation {
            weights: Some(weights),
        }
    }

    fn weight(&self, buyer: usize) -> S {
        self.weights.as_ref().map_or(S::one(), |w| w[buyer])
    }
}

impl<S: Scalar> Allocation<S> for GreedyAllocation<S> {
    fn allocate(&self, reports: &ReportProfile<S>, num_items: usize) -> Vec<Option<usize>> {
        let mut auction = ScoreAuction::new(reports.num_buyers(), self.weights.clone());
        reports
            .bids_by_item(num_items)
            .iter()
            .map(|bids| auction.round(bids).winner)
            .collect()
    }

    /// `b_j · y_j / y_i` over every `j` sharing a declared item with `i`.
    fn breakpoints(&self, reports: &ReportProfile<S>, buyer: usize) -> Vec<S> {
        let own = &reports.reports[buyer].items;
        let wi = self.weight(buyer);
        if wi == S::zero() {
            return Vec::new();
        }
        reports
            .reports
            .iter()
            .enumerate()
            .filter(|&(j, r)| j != buyer && !r.items.is_disjoint(own))
            .map(|(j, r)| r.value * self.weight(j) / wi)
            .collect()
    }
}

/// Any catalog mechanism viewed as an allocation rule under fixed coins.
#[derive(Debug, Clone)]
pub struct MechanismAllocation<'a> {
    pub kind: MechanismKind,
    pub coins: &'a Coins,
}

impl<S: Scalar> Allocation<S> for MechanismAllocation<'_> {
    fn allocate(&self, reports: &ReportProfile<S>, num_items: usize) -> Vec<Option<usize>> {
        match self.kind {
            // allocation only; skip the nested payment computation
            MechanismKind::HonestGreedy | MechanismKind::TardyGreedy => {
                GreedyAllocation::unweighted().allocate(reports, num_items)
            }
            MechanismKind::HonestPerturbedGreedy | MechanismKind::TardyPerturbedGreedy => {
                GreedyAllocation::weighted(super::weights_of(self.coins)).allocate(reports, num_items)
            }
            kind => kind
                .run_reports(reports, num_items, self.coins)
                .expect("catalog mechanisms accept validated reports")
                .matching(),
        }
    }

    fn breakpoints(&self, reports: &ReportProfile<S>, buyer: usize) -> Vec<S> {
        self.kind.breakpoints(reports, self.coins, buyer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGrid<S> {
    /// Sorted, deduplicated, always starting at zero.
    pub breakpoints: Vec<S>,
    /// Breakpoints, midpoints between neighbours, and one probe above the top.
    pub probes: Vec<S>,
}

pub fn probe_grid<S: Scalar>(raw: impl IntoIterator<Item = S>) -> ProbeGrid<S> {
    let mut bps: Vec<S> = raw
        .into_iter()
        .filter(|b| b.is_finite_value() && *b > S::zero())
        .collect();
    bps.push(S::zero());
    bps.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    bps.dedup_by(|a, b| a.eq_tol(*b));

    let mut probes = Vec::with_capacity(2 * bps.len());
    for (idx, &bp) in bps.iter().enumerate() {
        probes.push(bp);
        match bps.get(idx + 1) {
            Some(&next) => probes.push(bp.midpoint(next)),
            None => probes.push(if bp > S::zero() { bp + bp } else { S::one() }),
        }
    }
    ProbeGrid {
        breakpoints: bps,
        probes,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport<S> {
    pub buyer: usize,
    /// `(bid, allocated)` in increasing bid.
    pub probes: Vec<(S, bool)>,
    pub monotone: bool,
}

impl<S> MonotonicityReport<S> {
    pub fn pattern(&self) -> String {
        self.probes
            .iter()
            .map(|&(_, a)| if a { '1' } else { '0' })
            .collect()
    }
}

fn probe_allocation<S: Scalar>(
    alloc: &dyn Allocation<S>,
    reports: &ReportProfile<S>,
    num_items: usize,
    buyer: usize,
    probes: &[S],
) -> Vec<(S, bool)> {
    probes
        .iter()
        .map(|&z| {
            let probed = reports.with_value(buyer, z);
            (z, alloc.is_allocated(&probed, num_items, buyer))
        })
        .collect()
}

fn is_step_up(pattern: &[(impl Copy, bool)]) -> bool {
    pattern.windows(2).all(|w| !(w[0].1 && !w[1].1))
}

/// Probes the allocation over the breakpoint grid and checks it is a
/// nondecreasing 0/1 step in the bid.
pub fn check_monotonicity<S: Scalar>(
    alloc: &dyn Allocation<S>,
    reports: &ReportProfile<S>,
    num_items: usize,
    buyer: usize,
) -> MonotonicityReport<S> {
    let grid = probe_grid(alloc.breakpoints(reports, buyer));
    let probes = probe_allocation(alloc, reports, num_items, buyer, &grid.probes);
    MonotonicityReport {
        buyer,
        monotone: is_step_up(&probes),
        probes,
    }
}

/// Smallest bid at which `buyer` is still allocated, others fixed. Zero when
/// it is allocated at every probe (or at none).
pub fn critical_payment<S: Scalar>(
    alloc: &dyn Allocation<S>,
    reports: &ReportProfile<S>,
    num_items: usize,
    buyer: usize,
) -> Result<S> {
    let grid = probe_grid(alloc.breakpoints(reports, buyer));
    let probes = probe_allocation(alloc, reports, num_items, buyer, &grid.probes);
    if !is_step_up(&probes) {
        let report = MonotonicityReport {
            buyer,
            probes,
            monotone: false,
        };
        return Err(Error::NonMonotone {
            buyer,
            pattern: report.pattern(),
        });
    }
    let Some(&(lowest, _)) = probes.iter().find(|p| p.1) else {
        return Ok(S::zero());
    };
    Ok(grid
        .breakpoints
        .iter()
        .copied()
        .filter(|&b| b <= lowest)
        .last()
        .unwrap_or(S::zero()))
}
