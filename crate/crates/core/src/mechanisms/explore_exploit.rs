use crate::coins::Role;
use crate::market::Bid;
use crate::outcome::Decision;
use crate::scalar::Scalar;

use super::{OnlineMechanism, RoundResult};

/// Posted-price mechanism. Interested explorers push the price up to
/// `value / 2^k`; the item then goes at that price to the lowest-id unserved
/// exploiter who is interested and can afford it.
#[derive(Debug, Clone)]
pub struct ExploreExploit<S> {
    price: S,
    scale: S,
    roles: Vec<Role>,
    served: Vec<bool>,
}

impl<S: Scalar> ExploreExploit<S> {
    pub fn new(bucket: u32, roles: Vec<Role>) -> Self {
        let n = roles.len();
        ExploreExploit {
            price: S::zero(),
            scale: S::pow2(bucket as i32),
            roles,
            served: vec![false; n],
        }
    }

    pub fn price(&self) -> S {
        self.price
    }
}

impl<S: Scalar> OnlineMechanism<S> for ExploreExploit<S> {
    fn observe_bids(&mut self, _item: usize, bids: &[Bid<S>]) -> RoundResult<S> {
        for bid in bids.iter().filter(|b| self.roles[b.buyer] == Role::Explore) {
            self.price = self.price.max_of(bid.value / self.scale);
        }
        let buyer = bids
            .iter()
            .find(|b| {
                self.roles[b.buyer] == Role::Exploit
                    && !self.served[b.buyer]
                    && b.value.ge_tol(self.price)
            })
            .map(|b| b.buyer);
        if let Some(b) = buyer {
            self.served[b] = true;
        }
        RoundResult {
            decision: match buyer {
                Some(buyer) => Decision::Assign {
                    buyer,
                    price: Some(self.price),
                },
                None => Decision::Skip,
            },
            posted_price: Some(self.price),
            degenerate: false,
        }
    }
}
