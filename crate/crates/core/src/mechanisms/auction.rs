//! Per-round score auction shared by the greedy family.
//!
//! Each round the unserved bidder with the largest `bid · weight` wins (ties
//! to the lowest id). The Myerson price of that single round is the largest
//! competing score divided by the winner's weight.

use crate::market::Bid;
use crate::outcome::Decision;
use crate::scalar::Scalar;

use super::{OnlineMechanism, RoundResult};

#[derive(Debug, Clone)]
pub(crate) struct ScoreAuction<S> {
    weights: Option<Vec<S>>,
    served: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct AuctionRound<S> {
    pub winner: Option<usize>,
    pub price: S,
    pub degenerate: bool,
}

impl<S: Scalar> ScoreAuction<S> {
    pub fn new(num_buyers: usize, weights: Option<Vec<S>>) -> Self {
        ScoreAuction {
            weights,
            served: vec![false; num_buyers],
        }
    }

    fn weight(&self, buyer: usize) -> S {
        self.weights.as_ref().map_or(S::one(), |w| w[buyer])
    }

    pub fn round(&mut self, bids: &[Bid<S>]) -> AuctionRound<S> {
        let mut best: Option<(usize, S)> = None;
        for bid in bids.iter().filter(|b| !self.served[b.buyer]) {
            let score = bid.value * self.weight(bid.buyer);
            if best.is_none_or(|(_, s)| score.gt_tol(s)) {
                best = Some((bid.buyer, score));
            }
        }
        let Some((winner, _)) = best else {
            return AuctionRound {
                winner: None,
                price: S::zero(),
                degenerate: false,
            };
        };

        let competitor = bids
            .iter()
            .filter(|b| !self.served[b.buyer] && b.buyer != winner)
            .map(|b| b.value * self.weight(b.buyer))
            .fold(None, |acc: Option<S>, s| Some(acc.map_or(s, |a| a.max_of(s))));
        let w = self.weight(winner);
        let degenerate = w == S::zero();
        let price = match competitor {
            Some(score) if !degenerate => score / w,
            _ => S::zero(),
        };

        self.served[winner] = true;
        AuctionRound {
            winner: Some(winner),
            price,
            degenerate,
        }
    }
}

/// Prompt per-round second-price mechanism: `HonestGreedy` without weights,
/// `HonestPerturbedGreedy` with the public multipliers.
#[derive(Debug, Clone)]
pub struct HonestAuction<S> {
    auction: ScoreAuction<S>,
}

impl<S: Scalar> HonestAuction<S> {
    pub fn greedy(num_buyers: usize) -> Self {
        HonestAuction {
            auction: ScoreAuction::new(num_buyers, None),
        }
    }

    pub fn perturbed(weights: Vec<S>) -> Self {
        HonestAuction {
            auction: ScoreAuction::new(weights.len(), Some(weights)),
        }
    }
}

impl<S: Scalar> OnlineMechanism<S> for HonestAuction<S> {
    fn observe_bids(&mut self, _item: usize, bids: &[Bid<S>]) -> RoundResult<S> {
        let r = self.auction.round(bids);
        RoundResult {
            decision: match r.winner {
                Some(buyer) => Decision::Assign {
                    buyer,
                    price: Some(r.price),
                },
                None => Decision::Skip,
            },
            posted_price: None,
            degenerate: r.degenerate,
        }
    }
}
