use serde::{Deserialize, Serialize};

use crate::market::Instance;
use crate::optimum::max_weight_matching;
use crate::scalar::{ceil_log2, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketEdge {
    pub buyer: usize,
    pub item: usize,
    /// `⌈log2(x_j / v_i)⌉`.
    pub bucket: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketDiag<S> {
    /// `x_j`: largest value among buyers wanting some item `<= j`.
    pub x: Vec<S>,
    /// Edges of a maximum-weight matching with positive value.
    pub edges: Vec<BucketEdge>,
    /// `OPT_ℓ`, indexed by bucket.
    pub opt_by_bucket: Vec<S>,
    pub opt: S,
}

impl<S: Scalar> BucketDiag<S> {
    /// `Σ_{ℓ <= ⌈log2 n⌉} OPT_ℓ`.
    pub fn low_bucket_mass(&self, num_buyers: usize) -> S {
        let top = ceil_log2(num_buyers) as usize;
        self.opt_by_bucket
            .iter()
            .take(top + 1)
            .fold(S::zero(), |a, &b| a + b)
    }

    pub fn total(&self) -> S {
        self.opt_by_bucket.iter().fold(S::zero(), |a, &b| a + b)
    }
}

/// Smallest `ℓ >= 0` with `v · 2^ℓ >= x`.
fn bucket_of<S: Scalar>(x: S, v: S) -> u32 {
    let mut l = 0;
    let mut scaled = v;
    while !scaled.ge_tol(x) {
        scaled = scaled + scaled;
        l += 1;
    }
    l
}

pub fn bucket_diagnostics<S: Scalar>(inst: &Instance<S>) -> BucketDiag<S> {
    let mut first_item = vec![None; inst.num_buyers()];
    for (i, b) in inst.buyers.iter().enumerate() {
        first_item[i] = b.items.first().copied();
    }
    let mut x = Vec::with_capacity(inst.num_items);
    let mut running = S::zero();
    for j in 0..inst.num_items {
        for (i, b) in inst.buyers.iter().enumerate() {
            if first_item[i] == Some(j) {
                running = running.max_of(b.value);
            }
        }
        x.push(running);
    }

    let opt = max_weight_matching(inst);
    let mut edges = Vec::new();
    let mut opt_by_bucket: Vec<S> = Vec::new();
    for (item, buyer) in opt.matching.iter().enumerate() {
        let Some(buyer) = *buyer else { continue };
        let v = inst.value(buyer);
        if v <= S::zero() {
            continue;
        }
        let bucket = bucket_of(x[item], v);
        if opt_by_bucket.len() <= bucket as usize {
            opt_by_bucket.resize(bucket as usize + 1, S::zero());
        }
        opt_by_bucket[bucket as usize] = opt_by_bucket[bucket as usize] + v;
        edges.push(BucketEdge { buyer, item, bucket });
    }
    BucketDiag {
        x,
        edges,
        opt_by_bucket,
        opt: opt.value,
    }
}
