//! The type-assignment LP pair behind the prompt randomized lower bound.
//!
//! Indices are 1-based in the documentation and 0-based in storage:
//! `u[s-1][t-1]` holds `u_{s,t}` for `1 <= t <= s <= k`.
//!
//! Primal (P): maximize `Σ_{t<=s} x_{s,t}` subject to `x_{s,t} <= y_s`,
//! `Σ_{t<=s} β_t x_{s,t} <= β_s`, `Σ_s y_s <= α`, all nonnegative.
//!
//! Dual (D): minimize `α w + Σ_s β_s v_s` subject to
//! `u_{s,t} + β_t v_s >= 1`, `w >= Σ_{t<=s} u_{s,t}`, all nonnegative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::lb_betas;
use crate::scalar::{ceil_log2, Scalar};

pub fn betas<S: Scalar>(k: u32) -> Vec<S> {
    lb_betas(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution<S> {
    pub k: usize,
    pub delta: usize,
    pub w: S,
    /// `v[s-1] = v_s`.
    pub v: Vec<S>,
    /// `u[s-1][t-1] = u_{s,t}`, row `s-1` has length `s`.
    pub u: Vec<Vec<S>>,
}

/// `δ = ⌈log2 k⌉`, `w = δ`, `v_s = 2^{s-δ}` for `s >= δ` (else 0), and
/// `u_{s,t}` equal to 1 below `δ`, `1 - 2^{s-δ-t}` while `s - δ <= t`, 0 beyond.
pub fn build_dual_solution<S: Scalar>(k: usize) -> Result<DualSolution<S>> {
    if k == 0 {
        return Err(Error::Domain("k must be >= 1".into()));
    }
    let delta = ceil_log2(k) as usize;
    let d = delta as i32;
    let v = (1..=k as i32)
        .map(|s| if s < d { S::zero() } else { S::pow2(s - d) })
        .collect();
    let u = (1..=k as i32)
        .map(|s| {
            (1..=s)
                .map(|t| {
                    if s < d {
                        S::one()
                    } else if s - d <= t {
                        S::one() - S::pow2(s - d - t)
                    } else {
                        S::zero()
                    }
                })
                .collect()
        })
        .collect();
    Ok(DualSolution {
        k,
        delta,
        w: S::from_count(delta),
        v,
        u,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub constraint: String,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFeasibility {
    /// Cover constraints, `w >= Σ_{t<=s} u_{s,t}` and nonnegativity.
    pub feasible: bool,
    pub violations: Vec<Slack>,
    pub min_slack: f64,
    /// Same, with the sum in the `w` constraint taken over `s <= t` for
    /// fixed `t` (entries outside `t <= s` count as zero).
    pub printed_reading_feasible: bool,
    pub printed_reading_violations: Vec<Slack>,
}

fn check_betas<S: Scalar>(betas: &[S], k: usize) -> Result<()> {
    if betas.len() != k {
        return Err(Error::Domain(format!("{} betas for k = {k}", betas.len())));
    }
    if betas.iter().any(|&b| b <= S::zero()) || betas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("betas must be positive and strictly decreasing".into()));
    }
    let total = betas.iter().fold(S::zero(), |a, &b| a + b);
    if (total - S::one()).abs_value() > S::lp_tolerance() {
        return Err(Error::Domain(format!("betas sum to {total:?}, not 1")));
    }
    Ok(())
}

struct SlackLog<S> {
    min: Option<S>,
    violations: Vec<Slack>,
}

impl<S: Scalar> SlackLog<S> {
    fn new() -> Self {
        SlackLog {
            min: None,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, name: impl FnOnce() -> String, slack: S) {
        self.min = Some(self.min.map_or(slack, |m| m.min_of(slack)));
        if slack < S::zero() - S::lp_tolerance() {
            self.violations.push(Slack {
                constraint: name(),
                slack: slack.to_f64_lossy(),
            });
        }
    }
}

pub fn verify_dual_feasibility<S: Scalar>(dual: &DualSolution<S>, betas: &[S]) -> Result<DualFeasibility> {
    let k = dual.k;
    check_betas(betas, k)?;
    if dual.v.len() != k || dual.u.len() != k || dual.u.iter().enumerate().any(|(s, row)| row.len() != s + 1) {
        return Err(Error::Domain("dual solution dimensions do not match k".into()));
    }

    let mut shared = SlackLog::new();
    shared.record(|| "w >= 0".into(), dual.w);
    for s in 0..k {
        shared.record(|| format!("v_{} >= 0", s + 1), dual.v[s]);
        for t in 0..=s {
            let u = dual.u[s][t];
            shared.record(|| format!("u_{},{} >= 0", s + 1, t + 1), u);
            shared.record(
                || format!("u_{0},{1} + beta_{1} v_{0} >= 1", s + 1, t + 1),
                u + betas[t] * dual.v[s] - S::one(),
            );
        }
    }

    let mut derived = SlackLog::new();
    for s in 0..k {
        let sum = dual.u[s].iter().fold(S::zero(), |a, &x| a + x);
        derived.record(|| format!("w >= sum_t u_{},t", s + 1), dual.w - sum);
    }
    let mut printed = SlackLog::new();
    for t in 0..k {
        // only s = t lies in both s <= t and t <= s
        printed.record(|| format!("w >= sum_s<={} u_s,{}", t + 1, t + 1), dual.w - dual.u[t][t]);
    }

    let min_slack = [shared.min, derived.min]
        .into_iter()
        .flatten()
        .reduce(S::min_of)
        .map_or(0.0, S::to_f64_lossy);
    let printed_ok = shared.violations.is_empty() && printed.violations.is_empty();
    let mut violations = shared.violations.clone();
    violations.extend(derived.violations);
    let mut printed_violations = shared.violations;
    printed_violations.extend(printed.violations);
    Ok(DualFeasibility {
        feasible: violations.is_empty(),
        violations,
        min_slack,
        printed_reading_feasible: printed_ok,
        printed_reading_violations: printed_violations,
    })
}

/// `α w + Σ_s β_s v_s`.
pub fn dual_objective<S: Scalar>(dual: &DualSolution<S>, alpha: S, betas: &[S]) -> S {
    dual.v
        .iter()
        .zip(betas)
        .fold(alpha * dual.w, |acc, (&v, &b)| acc + b * v)
}

/// `α δ + (k - δ + 1) 2^{-δ} / (1 - 2^{-k})`.
///
/// Agrees with [`dual_objective`] for `k >= 2`. At `k = 1` the count
/// `k - δ + 1` includes a nonexistent `s = 0` term; see
/// [`objective_closed_form_exact`].
pub fn objective_closed_form<S: Scalar>(k: usize, alpha: S) -> S {
    let delta = ceil_log2(k) as usize;
    closed_form_with_terms(k, delta, k - delta + 1, alpha)
}

/// Closed form counting only the `s ∈ max(δ,1)..=k` with `v_s > 0`.
pub fn objective_closed_form_exact<S: Scalar>(k: usize, alpha: S) -> S {
    let delta = ceil_log2(k) as usize;
    closed_form_with_terms(k, delta, k + 1 - delta.max(1), alpha)
}

fn closed_form_with_terms<S: Scalar>(k: usize, delta: usize, terms: usize, alpha: S) -> S {
    let norm = S::one() - S::pow2(-(k as i32));
    alpha * S::from_count(delta) + S::from_count(terms) * S::pow2(-(delta as i32)) / norm
}

/// `α (⌈log2 k⌉ + 2)`.
pub fn objective_bound<S: Scalar>(k: usize, alpha: S) -> S {
    alpha * S::from_count(ceil_log2(k) as usize + 2)
}

/// `2 + Σ_t (1 - β_t)^{n-1}` with `n = 1 + 2^k`.
pub fn alpha_bound(k: u32) -> f64 {
    let n_minus_1 = 1u64 << k;
    2.0 + betas::<f64>(k)
        .iter()
        .map(|b| (n_minus_1 as f64 * (1.0 - b).ln()).exp())
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalCandidate<S> {
    /// `x[s-1][t-1] = x_{s,t}`, row `s-1` has length `s`.
    pub x: Vec<Vec<S>>,
    pub y: Vec<S>,
}

impl<S: Scalar> PrimalCandidate<S> {
    pub fn zeros(k: usize) -> Self {
        PrimalCandidate {
            x: (1..=k).map(|s| vec![S::zero(); s]).collect(),
            y: vec![S::zero(); k],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalFeasibility<S> {
    pub feasible: bool,
    pub violations: Vec<Slack>,
    /// `Σ_{t<=s} x_{s,t}`.
    pub objective: S,
}

pub fn verify_primal_feasibility<S: Scalar>(
    cand: &PrimalCandidate<S>,
    betas: &[S],
    alpha: S,
) -> Result<PrimalFeasibility<S>> {
    let k = betas.len();
    if cand.y.len() != k || cand.x.len() != k || cand.x.iter().enumerate().any(|(s, row)| row.len() != s + 1) {
        return Err(Error::Domain("primal candidate dimensions do not match k".into()));
    }
    let mut log = SlackLog::new();
    let mut objective = S::zero();
    for s in 0..k {
        log.record(|| format!("y_{} >= 0", s + 1), cand.y[s]);
        let mut load = S::zero();
        for t in 0..=s {
            let x = cand.x[s][t];
            objective = objective + x;
            load = load + betas[t] * x;
            log.record(|| format!("x_{},{} >= 0", s + 1, t + 1), x);
            log.record(|| format!("x_{0},{1} <= y_{0}", s + 1, t + 1), cand.y[s] - x);
        }
        log.record(|| format!("sum_t beta_t x_{0},t <= beta_{0}", s + 1), betas[s] - load);
    }
    let total_y = cand.y.iter().fold(S::zero(), |a, &y| a + y);
    log.record(|| "sum_s y_s <= alpha".into(), alpha - total_y);
    Ok(PrimalFeasibility {
        feasible: log.violations.is_empty(),
        violations: log.violations,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn small_solutions() {
        let d1 = build_dual_solution::<Rational>(1).unwrap();
        assert_eq!((d1.delta, d1.w), (0, r(0, 1)));
        assert_eq!(d1.v, vec![r(2, 1)]);
        assert_eq!(d1.u, vec![vec![r(0, 1)]]);

        let d4 = build_dual_solution::<Rational>(4).unwrap();
        assert_eq!(d4.delta, 2);
        assert_eq!(d4.v, vec![r(0, 1), r(1, 1), r(2, 1), r(4, 1)]);

        let d2 = build_dual_solution::<Rational>(2).unwrap();
        assert_eq!((d2.delta, d2.w), (1, r(1, 1)));
    }

    #[test]
    fn objectives() {
        let d4 = build_dual_solution::<Rational>(4).unwrap();
        assert_eq!(dual_objective(&d4, r(3, 1), &betas(4)), r(34, 5));
        let d1 = build_dual_solution::<Rational>(1).unwrap();
        assert_eq!(dual_objective(&d1, r(3, 1), &betas(1)), r(2, 1));
        let b = betas::<Rational>(4);
        let gap = dual_objective(&d4, r(6, 1), &b) - dual_objective(&d4, r(3, 1), &b);
        assert_eq!(gap, r(3, 1) * d4.w);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(objective_closed_form(4, r(3, 1)), r(34, 5));
        assert_eq!(objective_closed_form(1, r(3, 1)), r(4, 1));
        for k in 1..=20 {
            let d = build_dual_solution::<Rational>(k).unwrap();
            assert_eq!(
                objective_closed_form_exact(k, r(3, 1)),
                dual_objective(&d, r(3, 1), &betas(k as u32)),
                "k = {k}"
            );
        }
    }

    #[test]
    fn feasible_and_perturbed() {
        let d = build_dual_solution::<Rational>(4).unwrap();
        let rep = verify_dual_feasibility(&d, &betas(4)).unwrap();
        assert!(rep.feasible && rep.printed_reading_feasible, "{rep:?}");
        let mut broken = d.clone();
        broken.u[1][0] -= r(1, 1);
        let rep = verify_dual_feasibility(&broken, &betas(4)).unwrap();
        assert!(!rep.feasible);
        assert!(rep.violations.iter().any(|v| v.constraint.starts_with("u_2,1")));
    }

    #[test]
    fn bad_betas_rejected() {
        let d = build_dual_solution::<f64>(2).unwrap();
        assert!(verify_dual_feasibility(&d, &[0.5, 0.5]).is_err());
        assert!(verify_dual_feasibility(&d, &[0.6, 0.3]).is_err());
        assert!(verify_dual_feasibility(&d, &[1.0]).is_err());
    }

    #[test]
    fn zero_primal() {
        let rep = verify_primal_feasibility(&PrimalCandidate::<f64>::zeros(5), &betas(5), 3.0).unwrap();
        assert!(rep.feasible);
        assert_eq!(rep.objective, 0.0);
    }

    #[test]
    fn uniform_primal_reports_slacks() {
        let k = 4;
        let alpha = 3.0;
        let c = alpha / k as f64;
        let cand = PrimalCandidate {
            x: (1..=k).map(|s| vec![c; s]).collect(),
            y: vec![c; k],
        };
        let rep = verify_primal_feasibility(&cand, &betas(k as u32), alpha).unwrap();
        assert!(!rep.feasible);
        assert!(rep.violations.iter().all(|v| v.constraint.starts_with("sum_t beta_t")));
    }

    #[test]
    fn alpha_bound_small_k() {
        assert_eq!(alpha_bound(1), 2.0);
        assert!(alpha_bound(3) < 3.0);
    }
}
