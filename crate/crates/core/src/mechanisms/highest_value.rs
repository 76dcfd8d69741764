use crate::market::Bid;
use crate::outcome::Decision;
use crate::scalar::Scalar;

use super::{OnlineMechanism, RoundResult};

/// Assigns an item only to the holder of the highest value seen so far,
/// charging the second highest value seen so far.
///
/// A buyer's value counts as seen from the first round it declares interest
/// in, whether or not it is later served. The leader is the seen buyer with
/// the largest value, ties to the lowest id.
#[derive(Debug, Clone)]
pub struct HighestValueSoFar<S> {
    seen: Vec<Option<S>>,
    served: Vec<bool>,
    leader: Option<usize>,
}

impl<S: Scalar> HighestValueSoFar<S> {
    pub fn new(num_buyers: usize) -> Self {
        HighestValueSoFar {
            seen: vec![None; num_buyers],
            served: vec![false; num_buyers],
            leader: None,
        }
    }

    fn beats(&self, challenger: usize, value: S, leader: usize) -> bool {
        let lead = self.seen[leader].expect("leader was seen");
        value.gt_tol(lead) || (value.eq_tol(lead) && challenger < leader)
    }
}

impl<S: Scalar> OnlineMechanism<S> for HighestValueSoFar<S> {
    fn observe_bids(&mut self, _item: usize, bids: &[Bid<S>]) -> RoundResult<S> {
        for bid in bids {
            if self.seen[bid.buyer].is_none() {
                self.seen[bid.buyer] = Some(bid.value);
                if self.leader.is_none_or(|l| self.beats(bid.buyer, bid.value, l)) {
                    self.leader = Some(bid.buyer);
                }
            }
        }

        let skip = RoundResult {
            decision: Decision::Skip,
            posted_price: None,
            degenerate: false,
        };
        let Some(leader) = self.leader else {
            return skip;
        };
        if self.served[leader] || !bids.iter().any(|b| b.buyer == leader) {
            return skip;
        }
        let price = self
            .seen
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != leader)
            .filter_map(|(_, v)| *v)
            .fold(S::zero(), S::max_of);
        self.served[leader] = true;
        RoundResult {
            decision: Decision::Assign {
                buyer: leader,
                price: Some(price),
            },
            posted_price: None,
            degenerate: false,
        }
    }
}
