use std::collections::BTreeSet;

use crate::error::Result;
use crate::market::{Bid, Report, ReportProfile};
use crate::outcome::Decision;
use crate::scalar::Scalar;

use super::auction::ScoreAuction;
use super::critical::{critical_payment, GreedyAllocation};
use super::{OnlineMechanism, RoundResult};

/// Greedy or perturbed-greedy allocation with payments deferred to the end:
/// every winner pays its critical bid against the whole recorded run.
#[derive(Debug, Clone)]
pub struct TardyAuction<S> {
    auction: ScoreAuction<S>,
    rule: GreedyAllocation<S>,
    history: ReportProfile<S>,
    rounds_seen: usize,
    winners: Vec<usize>,
}

impl<S: Scalar> TardyAuction<S> {
    pub fn greedy(num_buyers: usize) -> Self {
        Self::with_rule(num_buyers, GreedyAllocation::unweighted())
    }

    pub fn perturbed(weights: Vec<S>) -> Self {
        Self::with_rule(weights.len(), GreedyAllocation::weighted(weights))
    }

    fn with_rule(num_buyers: usize, rule: GreedyAllocation<S>) -> Self {
        let empty = Report {
            value: S::zero(),
            items: BTreeSet::new(),
        };
        TardyAuction {
            auction: ScoreAuction::new(num_buyers, rule.weights.clone()),
            rule,
            history: ReportProfile {
                reports: vec![empty; num_buyers],
            },
            rounds_seen: 0,
            winners: Vec::new(),
        }
    }
}

impl<S: Scalar> OnlineMechanism<S> for TardyAuction<S> {
    fn observe_bids(&mut self, item: usize, bids: &[Bid<S>]) -> RoundResult<S> {
        for bid in bids {
            let r = &mut self.history.reports[bid.buyer];
            r.value = bid.value;
            r.items.insert(item);
        }
        self.rounds_seen = item + 1;
        let r = self.auction.round(bids);
        if let Some(w) = r.winner {
            self.winners.push(w);
        }
        RoundResult {
            decision: match r.winner {
                Some(buyer) => Decision::Assign { buyer, price: None },
                None => Decision::Skip,
            },
            posted_price: None,
            degenerate: r.degenerate,
        }
    }

    fn finalize(&mut self) -> Result<Vec<(usize, S)>> {
        self.winners
            .iter()
            .map(|&w| {
                critical_payment(&self.rule, &self.history, self.rounds_seen, w).map(|p| (w, p))
            })
            .collect()
    }
}
