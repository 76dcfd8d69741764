//! Fixed randomness of a mechanism run.
//!
//! Every field a randomized mechanism consumes is drawn up front from a
//! single seed and stored, so a run can be replayed bit for bit from the
//! `Coins` value alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::ceil_log2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Explore,
    Exploit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coins {
    pub seed: u64,
    /// `x_i`, uniform on `[0, 1]`.
    pub perturbations: Vec<f64>,
    /// Explicit multipliers `y_i` replacing `1 - e^{x_i - 1}`. Used to replay
    /// hand-specified examples whose multipliers are not in the image of the
    /// perturbation map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Explore-exploit price scale `k ∈ {0, …, ⌈log2 n⌉}`.
    pub bucket: u32,
    pub roles: Vec<Role>,
}

/// `y = 1 - e^{x - 1}` on `[0, 1]`.
pub fn perturbation(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("perturbation input {x} not in [0, 1]")));
    }
    Ok(1.0 - (x - 1.0).exp())
}

/// SplitMix64 finalizer over `(master, index)`; used for per-trial and
/// per-sample seeds so trials are order independent.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Coins {
    /// Draws every coin for a market with `num_buyers` buyers.
    pub fn draw(seed: u64, num_buyers: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perturbations = (0..num_buyers).map(|_| rng.gen::<f64>()).collect();
        let bucket = rng.gen_range(0..=ceil_log2(num_buyers.max(1)));
        let roles = (0..num_buyers)
            .map(|_| {
                if rng.gen::<bool>() {
                    Role::Explore
                } else {
                    Role::Exploit
                }
            })
            .collect();
        Coins {
            seed,
            perturbations,
            weights: None,
            bucket,
            roles,
        }
    }

    /// Coins whose multipliers are given directly.
    pub fn with_weights(weights: Vec<f64>) -> Self {
        let n = weights.len();
        Coins {
            weights: Some(weights),
            ..Coins::draw(0, n)
        }
    }

    pub fn with_bucket(mut self, bucket: u32) -> Self {
        self.bucket = bucket;
        self
    }

    pub fn with_roles(mut self, roles: Vec<Role>) -> Self {
        self.roles = roles;
        self
    }

    pub fn num_buyers(&self) -> usize {
        self.perturbations.len()
    }

    /// Multiplier `y_i` of buyer `i`.
    pub fn weight(&self, buyer: usize) -> f64 {
        match &self.weights {
            Some(w) => w[buyer],
            None => perturbation(self.perturbations[buyer]).expect("x drawn in [0, 1]"),
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.num_buyers()).map(|i| self.weight(i)).collect()
    }

    pub fn role(&self, buyer: usize) -> Role {
        self.roles[buyer]
    }
}
