//! Instance families: the hard constructions behind the lower bounds, plus
//! seeded random markets for fuzzing. Items always arrive in index order.

use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coins::derive_seed;
use crate::error::{Error, Result};
use crate::market::{Buyer, Instance};
use crate::scalar::Scalar;

fn buyer<S>(id: usize, value: S, items: impl IntoIterator<Item = usize>) -> Buyer<S> {
    Buyer {
        id,
        value,
        items: items.into_iter().collect(),
    }
}

/// `n` unit buyers all wanting item 0 only; items `1..m` are unwanted.
pub fn gen_star<S: Scalar>(n: usize, m: usize) -> Result<Instance<S>> {
    if n == 0 || m == 0 {
        return Err(Error::Domain("star needs n, m >= 1".into()));
    }
    Instance::new(m, (0..n).map(|i| buyer(i, S::one(), [0])).collect())
}

/// Buyer `r` has value `values[r]` and wants items `0..=r`.
pub fn gen_triangular<S: Scalar>(n: usize, values: &[S]) -> Result<Instance<S>> {
    if values.len() != n {
        return Err(Error::Domain(format!("{} values for {n} buyers", values.len())));
    }
    Instance::new(n, (0..n).map(|r| buyer(r, values[r], 0..=r)).collect())
}

pub fn gen_triangular_unit<S: Scalar>(n: usize) -> Result<Instance<S>> {
    gen_triangular(n, &vec![S::one(); n])
}

/// `β_t = 2^{-t} / (1 - 2^{-k})` for `t = 1..=k`, returned 0-indexed.
pub fn lb_betas<S: Scalar>(k: u32) -> Vec<S> {
    let norm = S::one() - S::pow2(-(k as i32));
    (1..=k as i32).map(|t| S::pow2(-t) / norm).collect()
}

/// One draw from the hard distribution, with its latent structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LBSample {
    pub k: u32,
    /// Type `t(i) ∈ 1..=k` per buyer.
    pub types: Vec<u32>,
    /// Rank `σ(i) ∈ 1..=n` per buyer.
    pub ranks: Vec<usize>,
    /// Type of the buyer owning item `j` in the diagonal matching.
    pub item_types: Vec<u32>,
    pub betas: Vec<f64>,
}

impl LBSample {
    /// Buyer matched to item `j` by the rank diagonal.
    pub fn diagonal(&self) -> Vec<usize> {
        let mut by_rank = vec![0; self.ranks.len()];
        for (i, &r) in self.ranks.iter().enumerate() {
            by_rank[r - 1] = i;
        }
        by_rank
    }
}

/// `n = 1 + 2^k` buyers with i.i.d. types `t ~ β`, values `1/β_t`. Buyers
/// are ranked by decreasing type (ties by id) and the buyer of rank `r`
/// wants items `0..r`.
pub fn sample_lb_distribution<S: Scalar>(k: u32, seed: u64) -> Result<(Instance<S>, LBSample)> {
    if k == 0 || k > 30 {
        return Err(Error::Domain(format!("k = {k} outside 1..=30")));
    }
    let n = 1 + (1usize << k);
    let betas_f: Vec<f64> = lb_betas::<f64>(k);
    let dist = WeightedIndex::new(&betas_f).expect("positive weights");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types: Vec<u32> = (0..n).map(|_| dist.sample(&mut rng) as u32 + 1).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| types[b].cmp(&types[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    let item_types = order.iter().map(|&i| types[i]).collect();

    let betas: Vec<S> = lb_betas(k);
    let buyers = (0..n)
        .map(|i| buyer(i, S::one() / betas[types[i] as usize - 1], 0..ranks[i]))
        .collect();
    let inst = Instance::new(n, buyers)?;
    Ok((
        inst,
        LBSample {
            k,
            types,
            ranks,
            item_types,
            betas: betas_f,
        },
    ))
}

/// Item 0 is wanted by the buyers with `b1_values` (ids first); item `j`
/// for `j = 1..=n_prime` is wanted only by a singleton buyer of value `eps`.
pub fn gen_exante_lb<S: Scalar>(n_prime: usize, eps: S, b1_values: &[S]) -> Result<Instance<S>> {
    if n_prime == 0 || eps <= S::zero() {
        return Err(Error::Domain("exante family needs n' >= 1 and eps > 0".into()));
    }
    let head = b1_values.len();
    let buyers = b1_values
        .iter()
        .enumerate()
        .map(|(i, &v)| buyer(i, v, [0]))
        .chain((1..=n_prime).map(|j| buyer(head + j - 1, eps, [j])))
        .collect();
    Instance::new(n_prime + 1, buyers)
}

fn check_edge_prob(p_edge: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_edge) {
        return Err(Error::Domain(format!("p_edge {p_edge} not in [0, 1]")));
    }
    Ok(())
}

fn random_edges(rng: &mut ChaCha8Rng, n: usize, m: usize, p_edge: f64) -> Vec<BTreeSet<usize>> {
    (0..n)
        .map(|_| (0..m).filter(|_| rng.gen_bool(p_edge)).collect())
        .collect()
}

/// Independent edges with probability `p_edge`; integer values uniform on
/// `1..=value_max`.
pub fn gen_random<S: Scalar>(n: usize, m: usize, p_edge: f64, value_max: u32, seed: u64) -> Result<Instance<S>> {
    check_edge_prob(p_edge)?;
    if value_max == 0 {
        return Err(Error::Domain("value_max must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_edges(&mut rng, n, m, p_edge);
    let buyers = edges
        .into_iter()
        .enumerate()
        .map(|(i, items)| Buyer {
            id: i,
            value: S::from_count(rng.gen_range(1..=value_max) as usize),
            items,
        })
        .collect();
    Instance::new(m, buyers)
}

/// As [`gen_random`] with values uniform on `(0, value_max]`.
pub fn gen_random_continuous(n: usize, m: usize, p_edge: f64, value_max: f64, seed: u64) -> Result<Instance<f64>> {
    check_edge_prob(p_edge)?;
    if !(value_max > 0.0 && value_max.is_finite()) {
        return Err(Error::Domain(format!("value_max {value_max} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_edges(&mut rng, n, m, p_edge);
    let buyers = edges
        .into_iter()
        .enumerate()
        .map(|(i, items)| Buyer {
            id: i,
            value: value_max * (1.0 - rng.gen::<f64>()),
            items,
        })
        .collect();
    Instance::new(m, buyers)
}

/// `count` random markets with `n ∈ 1..=max_n`, `m ∈ 1..=max_m`, edge
/// density uniform on `[0.1, 0.9]` and integer values `1..=value_max`.
pub fn fuzz_corpus<S: Scalar>(count: usize, max_n: usize, max_m: usize, value_max: u32, seed: u64) -> Vec<Instance<S>> {
    (0..count)
        .map(|idx| {
            let s = derive_seed(seed, idx as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let n = rng.gen_range(1..=max_n);
            let m = rng.gen_range(1..=max_m);
            let p = rng.gen_range(0.1..=0.9);
            gen_random(n, m, p, value_max, rng.gen()).expect("parameters in range")
        })
        .collect()
}

/// Every market with `1..=max_n` buyers, `1..=max_m` items, integer values
/// in `1..=value_max` and any interest sets.
pub fn exhaustive_family<S: Scalar>(max_n: usize, max_m: usize, value_max: u32) -> impl Iterator<Item = Instance<S>> {
    (1..=max_n).flat_map(move |n| {
        (1..=max_m).flat_map(move |m| {
            let edge_masks = 1u64 << (n * m);
            let value_combos = (value_max as u64).pow(n as u32);
            (0..edge_masks).flat_map(move |mask| {
                (0..value_combos).map(move |mut vc| {
                    let buyers = (0..n)
                        .map(|i| {
                            let v = vc % value_max as u64 + 1;
                            vc /= value_max as u64;
                            let row = mask >> (i * m);
                            buyer(i, S::from_count(v as usize), (0..m).filter(|j| row >> j & 1 == 1))
                        })
                        .collect();
                    Instance::new(m, buyers).expect("well-formed by construction")
                })
            })
        })
    })
}
