//! Incentive audits by exhaustive deviation search.
//!
//! With coins fixed and everyone else truthful, a deviating buyer faces a
//! deterministic decision tree, so every adaptive strategy collapses to one
//! declared `(value, interest set)` pair. Enumerating those pairs over a
//! lossless value grid therefore decides ex-post truthfulness on an instance.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coins::Coins;
use crate::error::{Error, Result};
use crate::market::{Instance, Report, ReportProfile};
use crate::mechanisms::{self, critical_payment, GreedyAllocation, MechanismAllocation, MechanismKind, MonotonicityReport};
use crate::outcome::Outcome;
use crate::scalar::Scalar;
use crate::welfare::{round_utility, utility};

/// Private-edge audits enumerate `2^m` interest sets per value probe.
pub const MAX_AUDIT_ITEMS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    /// Per-round utility against a deviation in that round only.
    Myopic,
    /// Total utility; any value and any declared interest set.
    NonMyopic,
    /// Total utility; interest sets are public, only the value can lie.
    PublicEdges,
    IndividualRationality,
}

impl AuditMode {
    pub fn name(self) -> &'static str {
        match self {
            AuditMode::Myopic => "myopic",
            AuditMode::NonMyopic => "non-myopic",
            AuditMode::PublicEdges => "public-edges",
            AuditMode::IndividualRationality => "individual-rationality",
        }
    }
}

impl fmt::Display for AuditMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AuditMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "myopic" => Ok(AuditMode::Myopic),
            "non-myopic" | "private-edges" => Ok(AuditMode::NonMyopic),
            "public-edges" => Ok(AuditMode::PublicEdges),
            "individual-rationality" | "ir" => Ok(AuditMode::IndividualRationality),
            _ => Err(Error::UnknownId {
                kind: "audit mode",
                name: s.to_string(),
            }),
        }
    }
}

/// One candidate misreport. `round` is set for myopic deviations and names
/// the round whose utility is compared.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation<S> {
    pub buyer: usize,
    pub value: S,
    pub items: BTreeSet<usize>,
    pub round: Option<usize>,
}

impl<S: Scalar> Deviation<S> {
    pub fn report(&self) -> Report<S> {
        Report {
            value: self.value,
            items: self.items.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// A profitable deviation, with enough detail to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub buyer: usize,
    pub value: f64,
    pub items: Vec<usize>,
    pub truthful_u: f64,
    pub deviant_u: f64,
    pub gain: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mode: AuditMode,
    pub verdict: Verdict,
    pub violations: Vec<AuditViolation>,
    /// Deviations (or buyers, for rationality audits) examined.
    #[serde(default)]
    pub checked: usize,
}

impl AuditReport {
    fn from_violations(mode: AuditMode, violations: Vec<AuditViolation>, checked: usize) -> Self {
        AuditReport {
            mode,
            verdict: if violations.is_empty() {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            violations,
            checked,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn max_gain(&self) -> Option<f64> {
        self.violations.iter().map(|v| v.gain).reduce(f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Bids at which `buyer`'s treatment can change, each offset by `±ε`, plus
/// midpoints and one probe above the top. Never exceeds ten times the
/// largest value in the market.
pub fn value_probes<S: Scalar>(kind: MechanismKind, inst: &Instance<S>, coins: &Coins, buyer: usize) -> Vec<S> {
    let truthful = ReportProfile::truthful(inst);
    let zero = S::zero();
    let cap = match inst.max_value() {
        m if m > zero => m * S::from_count(10),
        _ => S::one(),
    };
    let mut points: Vec<S> = inst
        .buyers
        .iter()
        .map(|b| b.value)
        .chain(kind.breakpoints(&truthful, coins, buyer))
        .filter(|p| p.is_finite_value() && *p > zero && *p <= cap)
        .collect();
    points.push(zero);
    sort_dedup(&mut points);

    let gap = points
        .windows(2)
        .map(|w| w[1] - w[0])
        .reduce(S::min_of)
        .unwrap_or(S::one());
    let eps = (gap * S::from_f64_lossy(1e-6)).max_of(S::from_f64_lossy(1e-9));

    let mut probes = Vec::with_capacity(4 * points.len() + 1);
    for (idx, &p) in points.iter().enumerate() {
        if p > eps {
            probes.push(p - eps);
        }
        probes.push(p);
        if p + eps <= cap {
            probes.push(p + eps);
        }
        if let Some(&next) = points.get(idx + 1) {
            probes.push(p.midpoint(next));
        }
    }
    let top = *points.last().expect("zero is always present");
    let above = if top > zero { (top + top).min_of(cap) } else { cap };
    if above > top {
        probes.push(above);
    }
    sort_dedup(&mut probes);
    probes
}

fn sort_dedup<S: Scalar>(xs: &mut Vec<S>) {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    xs.dedup();
}

fn all_subsets(m: usize) -> impl Iterator<Item = BTreeSet<usize>> {
    (0u32..1 << m).map(move |mask| (0..m).filter(|j| mask >> j & 1 == 1).collect())
}

fn check_audit_size(inst_items: usize) -> Result<()> {
    if inst_items > MAX_AUDIT_ITEMS {
        return Err(Error::InstanceTooLarge {
            what: format!("{inst_items} items; private-edge audits allow at most {MAX_AUDIT_ITEMS}"),
        });
    }
    Ok(())
}

/// The deviation space of `buyer` over the given value probes.
///
/// Public edges keep the true interest set; private edges range over all
/// `2^m` subsets. Myopic deviations are per round `j`: the buyer reports
/// truthfully everywhere except on item `j`, which it may add or drop, and
/// may pick its value only if it declared nothing before `j`.
pub fn enumerate_deviations<S: Scalar>(
    inst: &Instance<S>,
    buyer: usize,
    mode: AuditMode,
    probes: &[S],
) -> Result<Vec<Deviation<S>>> {
    let truth = &inst.buyers.get(buyer).ok_or(Error::UnknownBuyer(buyer))?.items;
    let m = inst.num_items;
    let mut out = Vec::new();
    match mode {
        AuditMode::PublicEdges => {
            for &value in probes {
                out.push(Deviation {
                    buyer,
                    value,
                    items: truth.clone(),
                    round: None,
                });
            }
        }
        AuditMode::NonMyopic => {
            check_audit_size(m)?;
            for items in all_subsets(m) {
                for &value in probes {
                    out.push(Deviation {
                        buyer,
                        value,
                        items: items.clone(),
                        round: None,
                    });
                }
            }
        }
        AuditMode::Myopic => {
            let own = [inst.value(buyer)];
            for j in 0..m {
                let values = if truth.range(..j).next().is_some() {
                    &own[..]
                } else {
                    probes
                };
                for include in [false, true] {
                    let mut items = truth.clone();
                    if include {
                        items.insert(j);
                    } else {
                        items.remove(&j);
                    }
                    for &value in values {
                        out.push(Deviation {
                            buyer,
                            value,
                            items: items.clone(),
                            round: Some(j),
                        });
                    }
                }
            }
        }
        AuditMode::IndividualRationality => {}
    }
    Ok(out)
}

fn witness<S: Scalar>(d: &Deviation<S>, truthful_u: S, deviant_u: S) -> AuditViolation {
    AuditViolation {
        buyer: d.buyer,
        value: d.value.to_f64_lossy(),
        items: d.items.iter().copied().collect(),
        truthful_u: truthful_u.to_f64_lossy(),
        deviant_u: deviant_u.to_f64_lossy(),
        gain: (deviant_u - truthful_u).to_f64_lossy(),
        round: d.round,
    }
}

/// Re-runs `kind` under every deviation with the same coins and reports each
/// one that beats truthful reporting by more than the tolerance.
pub fn audit_expost_truthfulness<S: Scalar>(
    kind: MechanismKind,
    inst: &Instance<S>,
    coins: &Coins,
    mode: AuditMode,
) -> Result<AuditReport> {
    if mode == AuditMode::IndividualRationality {
        return audit_individual_rationality(kind, inst, coins);
    }
    let truthful = ReportProfile::truthful(inst);
    let base = kind.run(inst, &truthful, coins)?;

    let mut deviations = Vec::new();
    for buyer in 0..inst.num_buyers() {
        let probes = value_probes(kind, inst, coins, buyer);
        deviations.extend(enumerate_deviations(inst, buyer, mode, &probes)?);
    }

    let score = |out: &Outcome<S>, d: &Deviation<S>| -> Result<S> {
        match d.round {
            Some(j) => round_utility(inst, d.buyer, out, j),
            None => utility(inst, d.buyer, out),
        }
    };
    let found = deviations
        .par_iter()
        .map(|d| -> Result<Option<AuditViolation>> {
            let out = kind.run(inst, &truthful.with_report(d.buyer, d.report()), coins)?;
            let dev_u = score(&out, d)?;
            let truth_u = score(&base, d)?;
            Ok((dev_u - truth_u).gt_tol(S::zero()).then(|| witness(d, truth_u, dev_u)))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(AuditReport::from_violations(
        mode,
        found.into_iter().flatten().collect(),
        deviations.len(),
    ))
}

/// Replays a reported violation on an `f64` market and returns
/// `(truthful_u, deviant_u)`.
pub fn replay_violation(
    kind: MechanismKind,
    inst: &Instance<f64>,
    coins: &Coins,
    v: &AuditViolation,
) -> Result<(f64, f64)> {
    let truthful = ReportProfile::truthful(inst);
    let base = kind.run(inst, &truthful, coins)?;
    let report = Report {
        value: v.value,
        items: v.items.iter().copied().collect(),
    };
    let out = kind.run(inst, &truthful.with_report(v.buyer, report), coins)?;
    Ok(match v.round {
        Some(j) => (
            round_utility(inst, v.buyer, &base, j)?,
            round_utility(inst, v.buyer, &out, j)?,
        ),
        None => (utility(inst, v.buyer, &base)?, utility(inst, v.buyer, &out)?),
    })
}

/// Flags every buyer whose truthful utility is below `-tolerance`. For these
/// violations `gain` is the shortfall below zero.
pub fn check_individual_rationality<S: Scalar>(inst: &Instance<S>, outcome: &Outcome<S>) -> Result<AuditReport> {
    let mut violations = Vec::new();
    for (buyer, b) in inst.buyers.iter().enumerate() {
        let u = utility(inst, buyer, outcome)?;
        if (S::zero() - u).gt_tol(S::zero()) {
            violations.push(AuditViolation {
                buyer,
                value: b.value.to_f64_lossy(),
                items: b.items.iter().copied().collect(),
                truthful_u: u.to_f64_lossy(),
                deviant_u: u.to_f64_lossy(),
                gain: (S::zero() - u).to_f64_lossy(),
                round: None,
            });
        }
    }
    Ok(AuditReport::from_violations(
        AuditMode::IndividualRationality,
        violations,
        inst.num_buyers(),
    ))
}

pub fn audit_individual_rationality<S: Scalar>(
    kind: MechanismKind,
    inst: &Instance<S>,
    coins: &Coins,
) -> Result<AuditReport> {
    let out = kind.run(inst, &ReportProfile::truthful(inst), coins)?;
    check_individual_rationality(inst, &out)
}

/// Allocation monotonicity of `kind` in `buyer`'s bid, others fixed.
pub fn check_monotonicity<S: Scalar>(
    kind: MechanismKind,
    reports: &ReportProfile<S>,
    num_items: usize,
    coins: &Coins,
    buyer: usize,
) -> MonotonicityReport<S> {
    let alloc = MechanismAllocation { kind, coins };
    mechanisms::check_monotonicity(&alloc, reports, num_items, buyer)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalItemReport {
    pub buyer: usize,
    /// Distinct items the buyer received across all probed values.
    pub received: BTreeSet<usize>,
    /// Set when at most one distinct item was ever received.
    pub critical_item: Option<usize>,
    pub holds: bool,
    pub probes: usize,
}

/// Sweeps `buyer`'s reported value over the probe grid, true interest set
/// kept, and collects every item it ends up with. Bids exactly at a
/// breakpoint are skipped: there the tie rule decides, and the property only
/// constrains almost every bid.
pub fn check_critical_item_property<S: Scalar>(
    kind: MechanismKind,
    inst: &Instance<S>,
    coins: &Coins,
    buyer: usize,
) -> Result<CriticalItemReport> {
    if buyer >= inst.num_buyers() {
        return Err(Error::UnknownBuyer(buyer));
    }
    let truthful = ReportProfile::truthful(inst);
    let ties = kind.breakpoints(&truthful, coins, buyer);
    let probes: Vec<S> = value_probes(kind, inst, coins, buyer)
        .into_iter()
        .filter(|z| !ties.iter().any(|t| z.eq_tol(*t)))
        .collect();
    let mut received = BTreeSet::new();
    for &z in &probes {
        let out = kind.run(inst, &truthful.with_value(buyer, z), coins)?;
        received.extend(out.item_of(buyer));
    }
    let holds = received.len() <= 1;
    Ok(CriticalItemReport {
        buyer,
        critical_item: if holds { received.first().copied() } else { None },
        received,
        holds,
        probes: probes.len(),
    })
}

/// The property for every buyer; the instance passes iff all reports hold.
pub fn critical_item_reports<S: Scalar>(
    kind: MechanismKind,
    inst: &Instance<S>,
    coins: &Coins,
) -> Result<Vec<CriticalItemReport>> {
    (0..inst.num_buyers())
        .map(|b| check_critical_item_property(kind, inst, coins, b))
        .collect()
}

/// Critical payment of `buyer` computed from rounds `0..=round` only, as a
/// prompt mechanism would have to at that round. Greedy kinds only.
pub fn truncated_critical_payment<S: Scalar>(
    kind: MechanismKind,
    inst: &Instance<S>,
    coins: &Coins,
    buyer: usize,
    round: usize,
) -> Result<S> {
    let rule = match kind {
        MechanismKind::HonestGreedy | MechanismKind::TardyGreedy => GreedyAllocation::unweighted(),
        MechanismKind::HonestPerturbedGreedy | MechanismKind::TardyPerturbedGreedy => {
            GreedyAllocation::weighted(coins.weights().into_iter().map(S::from_f64_lossy).collect())
        }
        _ => {
            return Err(Error::Domain(format!(
                "{kind} has no greedy allocation rule"
            )))
        }
    };
    if round >= inst.num_items {
        return Err(Error::RoundOutOfRange {
            round,
            num_items: inst.num_items,
        });
    }
    let mut reports = ReportProfile::truthful(inst);
    for r in &mut reports.reports {
        r.items.retain(|&j| j <= round);
    }
    critical_payment(&rule, &reports, round + 1, buyer)
}
