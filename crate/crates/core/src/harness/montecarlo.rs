use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coins::{derive_seed, Coins};
use crate::error::{Error, Result};
use crate::generators::{
    gen_exante_lb, gen_random, gen_random_continuous, gen_star, gen_triangular, gen_triangular_unit,
    sample_lb_distribution,
};
use crate::market::{Instance, ReportProfile};
use crate::mechanisms::MechanismKind;
use crate::optimum::max_weight_matching;
use crate::outcome::Outcome;
use crate::welfare::social_welfare;

/// A named instance family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Star {
        n: usize,
        m: usize,
    },
    /// Unit values unless `values` is given.
    Triangular {
        n: usize,
        #[serde(default)]
        values: Option<Vec<f64>>,
    },
    LbDist {
        k: u32,
    },
    Exante {
        n_prime: usize,
        eps: f64,
        b1_values: Vec<f64>,
    },
    Random {
        n: usize,
        m: usize,
        p_edge: f64,
        value_max: u32,
        #[serde(default)]
        continuous: bool,
    },
}

impl Family {
    pub const NAMES: [&'static str; 5] = ["star", "triangular", "lb-dist", "exante", "random"];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Star { .. } => "star",
            Family::Triangular { .. } => "triangular",
            Family::LbDist { .. } => "lb-dist",
            Family::Exante { .. } => "exante",
            Family::Random { .. } => "random",
        }
    }

    /// Whether each seed gives a different market.
    pub fn is_distributional(&self) -> bool {
        matches!(self, Family::LbDist { .. } | Family::Random { .. })
    }

    pub fn sample(&self, seed: u64) -> Result<Instance<f64>> {
        match self {
            Family::Star { n, m } => gen_star(*n, *m),
            Family::Triangular { n, values: None } => gen_triangular_unit(*n),
            Family::Triangular { n, values: Some(v) } => gen_triangular(*n, v),
            Family::LbDist { k } => sample_lb_distribution(*k, seed).map(|(inst, _)| inst),
            Family::Exante {
                n_prime,
                eps,
                b1_values,
            } => gen_exante_lb(*n_prime, *eps, b1_values),
            Family::Random {
                n,
                m,
                p_edge,
                value_max,
                continuous: false,
            } => gen_random(*n, *m, *p_edge, *value_max, seed),
            Family::Random {
                n,
                m,
                p_edge,
                value_max,
                continuous: true,
            } => gen_random_continuous(*n, *m, *p_edge, *value_max as f64, seed),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Checks a family name; parameters are supplied separately.
impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(Family::Star { n: 1, m: 1 }),
            "triangular" => Ok(Family::Triangular { n: 1, values: None }),
            "lb-dist" => Ok(Family::LbDist { k: 1 }),
            "exante" => Ok(Family::Exante {
                n_prime: 1,
                eps: 0.01,
                b1_values: vec![1.0],
            }),
            "random" => Ok(Family::Random {
                n: 1,
                m: 1,
                p_edge: 0.5,
                value_max: 10,
                continuous: false,
            }),
            _ => Err(Error::UnknownId {
                kind: "family",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Fixed(Instance<f64>),
    Family(Family),
}

impl InstanceSource {
    /// A distributional family is resampled every trial; anything else is
    /// built once.
    fn fixed(&self, master_seed: u64) -> Result<Option<Instance<f64>>> {
        match self {
            InstanceSource::Fixed(inst) => Ok(Some(inst.clone())),
            InstanceSource::Family(f) if !f.is_distributional() => f.sample(master_seed).map(Some),
            InstanceSource::Family(_) => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    pub sw: f64,
    pub opt: f64,
    /// `opt / sw`; 1 when both vanish, infinite when only `sw` does.
    pub ratio: f64,
    #[serde(skip)]
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub trials: u64,
    pub mean_sw: f64,
    pub sw_std_err: f64,
    pub mean_opt: f64,
    pub opt_std_err: f64,
    /// `mean_opt / mean_sw`.
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub ratio_std_err: f64,
    pub ratio_ci_low: f64,
    pub ratio_ci_high: f64,
    pub mean_matched: f64,
}

impl RatioStats {
    /// Aggregates rows in order; no randomness, so equal rows give equal
    /// stats bit for bit.
    pub fn from_rows(rows: &[TrialRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Domain("no trials".into()));
        }
        let t = rows.len() as f64;
        let mean = |f: &dyn Fn(&TrialRow) -> f64| rows.iter().map(f).sum::<f64>() / t;
        let mean_sw = mean(&|r| r.sw);
        let mean_opt = mean(&|r| r.opt);
        let mean_matched = mean(&|r| r.matched as f64);
        let denom = (t - 1.0).max(1.0);
        let var_sw = rows.iter().map(|r| (r.sw - mean_sw).powi(2)).sum::<f64>() / denom;
        let var_opt = rows.iter().map(|r| (r.opt - mean_opt).powi(2)).sum::<f64>() / denom;
        let cov = rows
            .iter()
            .map(|r| (r.sw - mean_sw) * (r.opt - mean_opt))
            .sum::<f64>()
            / denom;
        let ratio = mean_opt / mean_sw;
        let ratio_var = (var_opt + ratio * ratio * var_sw - 2.0 * ratio * cov) / (mean_sw * mean_sw * t);
        let ratio_std_err = ratio_var.max(0.0).sqrt();
        Ok(RatioStats {
            trials: rows.len() as u64,
            mean_sw,
            sw_std_err: (var_sw / t).sqrt(),
            mean_opt,
            opt_std_err: (var_opt / t).sqrt(),
            ratio,
            ratio_std_err,
            ratio_ci_low: ratio - 1.96 * ratio_std_err,
            ratio_ci_high: ratio + 1.96 * ratio_std_err,
            mean_matched,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRun {
    pub stats: RatioStats,
    pub rows: Vec<TrialRow>,
}

/// Everything one trial saw, handed to observers.
#[derive(Debug, Clone, Copy)]
pub struct TrialView<'a> {
    pub trial: u64,
    pub instance: &'a Instance<f64>,
    pub coins: &'a Coins,
    pub outcome: &'a Outcome<f64>,
}

pub fn monte_carlo(kind: MechanismKind, source: &InstanceSource, trials: u64, master_seed: u64) -> Result<MonteCarloRun> {
    monte_carlo_with(kind, source, trials, master_seed, |_| {})
}

/// Trial `t` draws its coins (and, for distributional families, its market)
/// from a seed derived from `(master_seed, t)`, so results do not depend on
/// scheduling.
pub fn monte_carlo_with<F>(
    kind: MechanismKind,
    source: &InstanceSource,
    trials: u64,
    master_seed: u64,
    observe: F,
) -> Result<MonteCarloRun>
where
    F: Fn(TrialView<'_>) + Sync,
{
    if trials == 0 {
        return Err(Error::Domain("trials must be >= 1".into()));
    }
    let fixed = source.fixed(master_seed)?;
    let fixed_opt = fixed.as_ref().map(|inst| max_weight_matching(inst).value);

    let run_trial = |trial: u64| -> Result<TrialRow> {
        let seed = derive_seed(master_seed, trial);
        let sampled;
        let (inst, opt) = match (&fixed, fixed_opt) {
            (Some(inst), Some(opt)) => (inst, opt),
            _ => {
                let InstanceSource::Family(f) = source else {
                    unreachable!("fixed sources are prebuilt")
                };
                sampled = f.sample(derive_seed(seed, 0))?;
                let opt = max_weight_matching(&sampled).value;
                (&sampled, opt)
            }
        };
        let coins = Coins::draw(derive_seed(seed, 1), inst.num_buyers());
        let outcome = kind.run(inst, &ReportProfile::truthful(inst), &coins)?;
        let sw = social_welfare(inst, &outcome)?;
        observe(TrialView {
            trial,
            instance: inst,
            coins: &coins,
            outcome: &outcome,
        });
        let ratio = if sw > 0.0 {
            opt / sw
        } else if opt > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        Ok(TrialRow {
            trial,
            sw,
            opt,
            ratio,
            matched: outcome.matched_count(),
        })
    };

    let rows = (0..trials)
        .into_par_iter()
        .map(run_trial)
        .collect::<Result<Vec<_>>>()?;
    let stats = RatioStats::from_rows(&rows)?;
    Ok(MonteCarloRun { stats, rows })
}
