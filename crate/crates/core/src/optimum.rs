//! Offline benchmark: maximum vertex-weighted matching over true edges.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::Instance;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult<S> {
    /// `item -> buyer`.
    pub matching: Vec<Option<usize>>,
    pub value: S,
}

/// Buyers are offered in decreasing value (ties to the lower id) and kept iff
/// an augmenting path exists. Matchable buyer sets form a transversal matroid,
/// so greedy by weight is optimal.
pub fn max_weight_matching<S: Scalar>(inst: &Instance<S>) -> OptResult<S> {
    let mut order: Vec<usize> = (0..inst.num_buyers()).collect();
    order.sort_by(|&a, &b| {
        inst.value(b)
            .partial_cmp(&inst.value(a))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let adjacency: Vec<Vec<usize>> = inst
        .buyers
        .iter()
        .map(|b| b.items.iter().copied().collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; inst.num_items];
    let mut visited = vec![false; inst.num_items];
    for buyer in order {
        visited.iter_mut().for_each(|v| *v = false);
        augment(buyer, &adjacency, &mut owner, &mut visited);
    }

    let value = owner
        .iter()
        .flatten()
        .fold(S::zero(), |acc, &b| acc + inst.value(b));
    OptResult {
        matching: owner,
        value,
    }
}

fn augment(
    buyer: usize,
    adjacency: &[Vec<usize>],
    owner: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for &item in &adjacency[buyer] {
        if visited[item] {
            continue;
        }
        visited[item] = true;
        let free = match owner[item] {
            None => true,
            Some(other) => augment(other, adjacency, owner, visited),
        };
        if free {
            owner[item] = Some(buyer);
            return true;
        }
    }
    false
}

pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Exhaustive enumeration of every matching. Test oracle for
/// [`max_weight_matching`].
pub fn brute_force_optimum<S: Scalar>(inst: &Instance<S>) -> Result<OptResult<S>> {
    if inst.num_buyers() > BRUTE_FORCE_LIMIT || inst.num_items > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            what: format!(
                "{} buyers x {} items exceeds {BRUTE_FORCE_LIMIT}",
                inst.num_buyers(),
                inst.num_items
            ),
        });
    }
    let mut search = Search {
        inst,
        used: vec![false; inst.num_buyers()],
        current: vec![None; inst.num_items],
        best: OptResult {
            matching: vec![None; inst.num_items],
            value: S::zero(),
        },
    };
    search.go(0, S::zero());
    Ok(search.best)
}

struct Search<'a, S> {
    inst: &'a Instance<S>,
    used: Vec<bool>,
    current: Vec<Option<usize>>,
    best: OptResult<S>,
}

impl<S: Scalar> Search<'_, S> {
    fn go(&mut self, item: usize, value: S) {
        if item == self.inst.num_items {
            if value > self.best.value {
                self.best.value = value;
                self.best.matching.clone_from(&self.current);
            }
            return;
        }
        self.go(item + 1, value);
        for buyer in 0..self.inst.num_buyers() {
            if self.used[buyer] || !self.inst.wants(buyer, item) {
                continue;
            }
            self.used[buyer] = true;
            self.current[item] = Some(buyer);
            self.go(item + 1, value + self.inst.value(buyer));
            self.current[item] = None;
            self.used[buyer] = false;
        }
    }
}
