//! The mechanism catalog behind one round-based online interface.
//!
//! A mechanism is constructed with its coins, then fed the bids on each item
//! in arrival order and must decide immediately. Tardy mechanisms return
//! their payments from [`OnlineMechanism::finalize`]; prompt ones price every
//! assignment on the spot.

mod auction;
pub mod critical;
mod explore_exploit;
mod highest_value;
pub mod replay;
mod tardy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coins::{Coins, Role};
use crate::error::{Error, Result};
use crate::market::{Bid, Instance, ReportProfile};
use crate::outcome::{Assignment, Decision, Outcome, RoundRecord};
use crate::scalar::Scalar;

pub use auction::HonestAuction;
pub use critical::{
    check_monotonicity, critical_payment, probe_grid, Allocation, GreedyAllocation,
    MechanismAllocation, MonotonicityReport, ProbeGrid,
};
pub use explore_exploit::ExploreExploit;
pub use highest_value::HighestValueSoFar;
pub use tardy::TardyAuction;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult<S> {
    pub decision: Decision<S>,
    pub posted_price: Option<S>,
    pub degenerate: bool,
}

pub trait OnlineMechanism<S: Scalar> {
    /// Decides item `item` given the bids of buyers declaring interest in it,
    /// listed in increasing buyer id.
    fn observe_bids(&mut self, item: usize, bids: &[Bid<S>]) -> RoundResult<S>;

    /// Deferred payments `(buyer, price)`; empty for prompt mechanisms.
    fn finalize(&mut self) -> Result<Vec<(usize, S)>> {
        Ok(Vec::new())
    }
}

/// Feeds `reports` to `mech` item by item and assembles the outcome.
pub fn run_online<S, M>(mech: &mut M, reports: &ReportProfile<S>, num_items: usize) -> Result<Outcome<S>>
where
    S: Scalar,
    M: OnlineMechanism<S> + ?Sized,
{
    let mut out = Outcome::empty(reports.num_buyers(), num_items);
    for (item, bids) in reports.bids_by_item(num_items).iter().enumerate() {
        let r = mech.observe_bids(item, bids);
        if let Decision::Assign { buyer, price } = r.decision {
            debug_assert!(bids.iter().any(|b| b.buyer == buyer));
            let price = price.unwrap_or(S::zero());
            out.matches[item] = Some(Assignment {
                buyer,
                price,
                priced_at: item,
            });
            out.payments[buyer] = price;
        }
        out.trace.push(RoundRecord {
            item,
            interested: bids.iter().map(|b| b.buyer).collect(),
            posted_price: r.posted_price,
            decision: r.decision,
            degenerate: r.degenerate,
        });
    }
    let last = num_items.saturating_sub(1);
    for (buyer, price) in mech.finalize()? {
        if let Some(a) = out.matches.iter_mut().flatten().find(|a| a.buyer == buyer) {
            a.price = price;
            a.priced_at = last;
            out.payments[buyer] = price;
        }
    }
    Ok(out)
}

pub(crate) fn weights_of<S: Scalar>(coins: &Coins) -> Vec<S> {
    coins.weights().into_iter().map(S::from_f64_lossy).collect()
}

fn check_profile<S: Scalar>(inst: &Instance<S>, reports: &ReportProfile<S>) -> Result<()> {
    if reports.num_buyers() != inst.num_buyers() {
        return Err(Error::Domain(format!(
            "{} reports for {} buyers",
            reports.num_buyers(),
            inst.num_buyers()
        )));
    }
    Ok(())
}

fn check_coins(num_buyers: usize, coins: &Coins) -> Result<()> {
    if coins.num_buyers() != num_buyers || coins.roles.len() != num_buyers {
        return Err(Error::Domain(format!(
            "coins drawn for {} buyers, market has {num_buyers}",
            coins.num_buyers()
        )));
    }
    Ok(())
}

pub fn run_honest_greedy<S: Scalar>(inst: &Instance<S>, reports: &ReportProfile<S>) -> Result<Outcome<S>> {
    check_profile(inst, reports)?;
    run_online(&mut HonestAuction::greedy(inst.num_buyers()), reports, inst.num_items)
}

pub fn run_honest_perturbed_greedy<S: Scalar>(
    inst: &Instance<S>,
    reports: &ReportProfile<S>,
    coins: &Coins,
) -> Result<Outcome<S>> {
    check_profile(inst, reports)?;
    check_coins(inst.num_buyers(), coins)?;
    run_online(&mut HonestAuction::perturbed(weights_of(coins)), reports, inst.num_items)
}

pub fn run_tardy_greedy<S: Scalar>(inst: &Instance<S>, reports: &ReportProfile<S>) -> Result<Outcome<S>> {
    check_profile(inst, reports)?;
    run_online(&mut TardyAuction::greedy(inst.num_buyers()), reports, inst.num_items)
}

pub fn run_tardy_perturbed_greedy<S: Scalar>(
    inst: &Instance<S>,
    reports: &ReportProfile<S>,
    coins: &Coins,
) -> Result<Outcome<S>> {
    check_profile(inst, reports)?;
    check_coins(inst.num_buyers(), coins)?;
    run_online(&mut TardyAuction::perturbed(weights_of(coins)), reports, inst.num_items)
}

pub fn run_highest_value_so_far<S: Scalar>(
    inst: &Instance<S>,
    reports: &ReportProfile<S>,
) -> Result<Outcome<S>> {
    check_profile(inst, reports)?;
    run_online(&mut HighestValueSoFar::new(inst.num_buyers()), reports, inst.num_items)
}

pub fn run_explore_exploit<S: Scalar>(
    inst: &Instance<S>,
    reports: &ReportProfile<S>,
    coins: &Coins,
) -> Result<Outcome<S>> {
    check_profile(inst, reports)?;
    if inst.num_buyers() == 0 {
        return Err(Error::NoBuyers);
    }
    check_coins(inst.num_buyers(), coins)?;
    run_online(
        &mut ExploreExploit::new(coins.bucket, coins.roles.clone()),
        reports,
        inst.num_items,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    HonestGreedy,
    HonestPerturbedGreedy,
    TardyGreedy,
    TardyPerturbedGreedy,
    HighestValue,
    ExploreExploit,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 6] = [
        MechanismKind::HonestGreedy,
        MechanismKind::HonestPerturbedGreedy,
        MechanismKind::TardyGreedy,
        MechanismKind::TardyPerturbedGreedy,
        MechanismKind::HighestValue,
        MechanismKind::ExploreExploit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::HonestGreedy => "honest-greedy",
            MechanismKind::HonestPerturbedGreedy => "honest-perturbed-greedy",
            MechanismKind::TardyGreedy => "tardy-greedy",
            MechanismKind::TardyPerturbedGreedy => "tardy-perturbed-greedy",
            MechanismKind::HighestValue => "highest-value",
            MechanismKind::ExploreExploit => "explore-exploit",
        }
    }

    /// Consumes coins.
    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            MechanismKind::HonestPerturbedGreedy
                | MechanismKind::TardyPerturbedGreedy
                | MechanismKind::ExploreExploit
        )
    }

    pub fn is_prompt(self) -> bool {
        !matches!(self, MechanismKind::TardyGreedy | MechanismKind::TardyPerturbedGreedy)
    }

    pub fn run<S: Scalar>(
        self,
        inst: &Instance<S>,
        reports: &ReportProfile<S>,
        coins: &Coins,
    ) -> Result<Outcome<S>> {
        match self {
            MechanismKind::HonestGreedy => run_honest_greedy(inst, reports),
            MechanismKind::HonestPerturbedGreedy => run_honest_perturbed_greedy(inst, reports, coins),
            MechanismKind::TardyGreedy => run_tardy_greedy(inst, reports),
            MechanismKind::TardyPerturbedGreedy => run_tardy_perturbed_greedy(inst, reports, coins),
            MechanismKind::HighestValue => run_highest_value_so_far(inst, reports),
            MechanismKind::ExploreExploit => run_explore_exploit(inst, reports, coins),
        }
    }

    /// Runs on reports alone; the true market is only needed for accounting.
    pub fn run_reports<S: Scalar>(
        self,
        reports: &ReportProfile<S>,
        num_items: usize,
        coins: &Coins,
    ) -> Result<Outcome<S>> {
        let n = reports.num_buyers();
        if self.is_randomized() {
            check_coins(n, coins)?;
        }
        match self {
            MechanismKind::HonestGreedy => run_online(&mut HonestAuction::greedy(n), reports, num_items),
            MechanismKind::HonestPerturbedGreedy => {
                run_online(&mut HonestAuction::perturbed(weights_of(coins)), reports, num_items)
            }
            MechanismKind::TardyGreedy => run_online(&mut TardyAuction::greedy(n), reports, num_items),
            MechanismKind::TardyPerturbedGreedy => {
                run_online(&mut TardyAuction::perturbed(weights_of(coins)), reports, num_items)
            }
            MechanismKind::HighestValue => {
                run_online(&mut HighestValueSoFar::new(n), reports, num_items)
            }
            MechanismKind::ExploreExploit => {
                if n == 0 {
                    return Err(Error::NoBuyers);
                }
                run_online(
                    &mut ExploreExploit::new(coins.bucket, coins.roles.clone()),
                    reports,
                    num_items,
                )
            }
        }
    }

    /// Bids of `buyer` at which this mechanism may treat it differently,
    /// whatever interest set it declares.
    pub fn breakpoints<S: Scalar>(self, reports: &ReportProfile<S>, coins: &Coins, buyer: usize) -> Vec<S> {
        let others = reports
            .reports
            .iter()
            .enumerate()
            .filter(move |&(j, _)| j != buyer);
        match self {
            MechanismKind::HonestPerturbedGreedy | MechanismKind::TardyPerturbedGreedy => {
                let w: Vec<S> = weights_of(coins);
                if w[buyer] == S::zero() {
                    return Vec::new();
                }
                others.map(|(j, r)| r.value * w[j] / w[buyer]).collect()
            }
            MechanismKind::ExploreExploit => {
                let scale = S::pow2(coins.bucket as i32);
                others
                    .filter(|&(j, _)| coins.roles.get(j) == Some(&Role::Explore))
                    .map(|(_, r)| r.value / scale)
                    .collect()
            }
            _ => others.map(|(_, r)| r.value).collect(),
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownId {
                kind: "mechanism",
                name: s.to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::welfare::{social_welfare, utility};

    fn truthful(inst: &Instance<f64>) -> ReportProfile<f64> {
        ReportProfile::truthful(inst)
    }

    /// b1 v=1 {i1,i2}; b2 v=0.9 {i1}.
    fn two_round_example() -> Instance<f64> {
        Instance::from_pairs(2, vec![(1.0, vec![0, 1]), (0.9, vec![0])]).unwrap()
    }

    #[test]
    fn honest_greedy_three_buyer_example() {
        let inst =
            Instance::from_pairs(2, vec![(10.0, vec![0, 1]), (9.0, vec![0]), (1.0, vec![1])]).unwrap();
        let out = run_honest_greedy(&inst, &truthful(&inst)).unwrap();
        assert_eq!(out.matching(), vec![Some(0), Some(2)]);
        assert_eq!(out.payments, vec![9.0, 0.0, 0.0]);
        assert_eq!(social_welfare(&inst, &out).unwrap(), 11.0);
    }

    #[test]
    fn honest_perturbed_greedy_ratio_price() {
        let inst = Instance::from_pairs(1, vec![(10.0, vec![0]), (6.0, vec![0])]).unwrap();
        let coins = Coins::with_weights(vec![0.5, 1.0]);
        let out = run_honest_perturbed_greedy(&inst, &truthful(&inst), &coins).unwrap();
        assert_eq!(out.buyer_of(0), Some(1));
        assert_eq!(out.payments[1], 5.0);
    }

    #[test]
    fn prompt_and_tardy_diverge_on_two_round_example() {
        let inst = two_round_example();
        let coins = Coins::with_weights(vec![1.0, 1.0]);
        let prompt = run_honest_perturbed_greedy(&inst, &truthful(&inst), &coins).unwrap();
        assert_eq!(prompt.matching(), vec![Some(0), None]);
        assert_eq!(prompt.payments[0], 0.9);
        let tardy = run_tardy_perturbed_greedy(&inst, &truthful(&inst), &coins).unwrap();
        assert_eq!(tardy.matching(), vec![Some(0), None]);
        assert_eq!(tardy.payments[0], 0.0);
        let tardy = run_tardy_greedy(&inst, &truthful(&inst)).unwrap();
        assert_eq!(tardy.payments[0], 0.0);
        assert_eq!(tardy.matches[0].as_ref().unwrap().priced_at, 1);
    }

    #[test]
    fn tardy_head_to_head() {
        let inst = Instance::from_pairs(1, vec![(10.0, vec![0]), (9.0, vec![0])]).unwrap();
        let out = run_tardy_greedy(&inst, &truthful(&inst)).unwrap();
        assert_eq!(out.payments, vec![9.0, 0.0]);
        let single = Instance::from_pairs(1, vec![(3.0, vec![0])]).unwrap();
        let out = run_tardy_greedy(&single, &truthful(&single)).unwrap();
        assert_eq!(out.payments, vec![0.0]);
    }

    #[test]
    fn tardy_perturbed_critical_payment() {
        let inst = Instance::from_pairs(1, vec![(10.0, vec![0]), (6.0, vec![0])]).unwrap();
        let coins = Coins::with_weights(vec![0.5, 1.0]);
        let out = run_tardy_perturbed_greedy(&inst, &truthful(&inst), &coins).unwrap();
        assert_eq!(out.buyer_of(0), Some(1));
        assert_eq!(out.payments[1], 5.0);
    }

    #[test]
    fn uncontested_tardy_winners_pay_zero() {
        let inst = Instance::from_pairs(3, vec![(2.0, vec![0]), (5.0, vec![1]), (1.0, vec![2])]).unwrap();
        let coins = Coins::draw(3, 3);
        let out = run_tardy_perturbed_greedy(&inst, &truthful(&inst), &coins).unwrap();
        assert_eq!(out.matched_count(), 3);
        assert!(out.payments.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn highest_value_examples() {
        let inst = Instance::from_pairs(2, vec![(5.0, vec![0]), (7.0, vec![1])]).unwrap();
        let out = run_highest_value_so_far(&inst, &truthful(&inst)).unwrap();
        assert_eq!(out.matching(), vec![Some(0), Some(1)]);
        assert_eq!(out.payments, vec![0.0, 5.0]);

        let single = Instance::from_pairs(1, vec![(4.0, vec![0])]).unwrap();
        let out = run_highest_value_so_far(&single, &truthful(&single)).unwrap();
        assert_eq!((out.buyer_of(0), out.payments[0]), (Some(0), 0.0));

        let inst =
            Instance::from_pairs(2, vec![(6.0, vec![1]), (10.0, vec![0]), (4.0, vec![1])]).unwrap();
        let out = run_highest_value_so_far(&inst, &truthful(&inst)).unwrap();
        assert_eq!(out.matching(), vec![Some(1), None]);
        assert_eq!(out.payments[1], 0.0);
    }

    #[test]
    fn explore_exploit_examples() {
        let lone = Instance::from_pairs(1, vec![(3.0, vec![0])]).unwrap();
        for k in 0..3 {
            let coins = Coins::draw(0, 1).with_bucket(k).with_roles(vec![Role::Exploit]);
            let out = run_explore_exploit(&lone, &truthful(&lone), &coins).unwrap();
            assert_eq!((out.buyer_of(0), out.payments[0]), (Some(0), 0.0));
        }

        let inst = Instance::from_pairs(1, vec![(4.0, vec![0]), (3.0, vec![0])]).unwrap();
        let roles = vec![Role::Explore, Role::Exploit];
        let coins = Coins::draw(0, 2).with_bucket(1).with_roles(roles.clone());
        let out = run_explore_exploit(&inst, &truthful(&inst), &coins).unwrap();
        assert_eq!((out.buyer_of(0), out.payments[1]), (Some(1), 2.0));
        assert_eq!(utility(&inst, 1, &out).unwrap(), 1.0);
        assert_eq!(out.trace[0].posted_price, Some(2.0));

        let coins = Coins::draw(0, 2).with_bucket(0).with_roles(roles);
        let out = run_explore_exploit(&inst, &truthful(&inst), &coins).unwrap();
        assert_eq!(out.buyer_of(0), None);
        assert_eq!(out.trace[0].posted_price, Some(4.0));
    }

    #[test]
    fn explore_exploit_rejects_empty_market() {
        let inst = Instance::<f64>::from_pairs(1, vec![]).unwrap();
        let coins = Coins::draw(0, 0);
        assert!(matches!(
            run_explore_exploit(&inst, &truthful(&inst), &coins),
            Err(Error::NoBuyers)
        ));
    }

    #[test]
    fn zero_multiplier_is_logged() {
        let inst = Instance::from_pairs(1, vec![(3.0, vec![0])]).unwrap();
        let coins = Coins::with_weights(vec![0.0]);
        let out = run_honest_perturbed_greedy(&inst, &truthful(&inst), &coins).unwrap();
        assert_eq!(out.payments[0], 0.0);
        assert!(out.trace[0].degenerate);
    }

    #[test]
    fn ids_round_trip() {
        for k in MechanismKind::ALL {
            assert_eq!(k.name().parse::<MechanismKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
        assert!("greedy".parse::<MechanismKind>().is_err());
    }
}
