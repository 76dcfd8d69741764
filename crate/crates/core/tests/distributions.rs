use approx::assert_relative_eq;
use proptest::prelude::*;
use truthmatch::generators::{gen_exante_lb, lb_betas, sample_lb_distribution};
use truthmatch::lpcheck::{
    alpha_bound, build_dual_solution, dual_objective, objective_bound, objective_closed_form_exact,
    verify_dual_feasibility, verify_primal_feasibility, PrimalCandidate,
};
use truthmatch::optimum::max_weight_matching;
use truthmatch::Rational;

#[test]
fn type_frequencies_fit_the_betas() {
    let k = 3;
    let betas: Vec<f64> = lb_betas(k);
    let mut counts = vec![0u64; k as usize];
    let mut draws = 0u64;
    let mut seed = 0;
    while draws < 100_000 {
        let (_, s) = sample_lb_distribution::<f64>(k, seed).unwrap();
        for t in s.types {
            counts[t as usize - 1] += 1;
            draws += 1;
        }
        seed += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&betas)
        .map(|(&c, &b)| {
            let e = b * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 99.9% quantile of chi-square with 2 degrees of freedom.
    assert!(chi2 < 13.82, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn lb_samples_are_rank_triangular() {
    for seed in 0..50 {
        let (inst, s) = sample_lb_distribution::<f64>(3, seed).unwrap();
        assert_eq!(inst.num_buyers(), 9);
        assert_eq!(inst.num_items, 9);
        for (i, b) in inst.buyers.iter().enumerate() {
            assert_eq!(b.items, (0..s.ranks[i]).collect());
            assert_relative_eq!(b.value, 1.0 / s.betas[s.types[i] as usize - 1]);
        }
        let diag = s.diagonal();
        let diag_sw: f64 = diag.iter().map(|&i| inst.buyers[i].value).sum();
        for (j, &i) in diag.iter().enumerate() {
            assert!(inst.wants(i, j));
            assert_eq!(s.item_types[j], s.types[i]);
        }
        assert_relative_eq!(max_weight_matching(&inst).value, diag_sw, max_relative = 1e-12);
    }
}

#[test]
fn exante_market_shape() {
    let inst = gen_exante_lb(3, 0.25, &[2.0, 1.0]).unwrap();
    let opt = max_weight_matching(&inst).value;
    assert!(opt >= 2.0);
    assert!(inst.buyers[0].items.contains(&0) && inst.buyers[1].items.contains(&0));
    assert!(gen_exante_lb::<f64>(0, 0.25, &[1.0]).is_err());
}

#[test]
fn alpha_bound_matches_the_direct_product() {
    for k in 1..=12u32 {
        let n = 1 + (1u64 << k);
        let betas: Vec<f64> = lb_betas(k);
        let direct: f64 = 2.0
            + betas
                .iter()
                .map(|&b| (0..n - 1).fold(1.0, |acc, _| acc * (1.0 - b)))
                .sum::<f64>();
        assert_relative_eq!(alpha_bound(k), direct, max_relative = 1e-9);
        assert!(alpha_bound(k) < 3.0);
    }
}

#[test]
fn dual_certificate_is_exactly_feasible() {
    let alpha = Rational::from_integer(3);
    for k in 1..=20usize {
        let betas: Vec<Rational> = lb_betas(k as u32);
        let dual = build_dual_solution::<Rational>(k).unwrap();
        let f = verify_dual_feasibility(&dual, &betas).unwrap();
        assert!(f.feasible, "k={k}: {:?}", f.violations);
        let obj = dual_objective(&dual, alpha, &betas);
        assert_eq!(obj, objective_closed_form_exact(k, alpha), "k={k}");
        assert!(obj <= objective_bound(k, alpha), "k={k}");
    }
}

fn primal(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=k).map(|s| prop::collection::vec(0.0..1.0f64, s)).collect::<Vec<_>>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn weak_duality(k in 1usize..=8, raw in primal(8), alpha in 1.0..3.0f64) {
        let betas: Vec<f64> = lb_betas(k as u32);
        let mut x: Vec<Vec<f64>> = raw[..k].to_vec();
        for (s, row) in x.iter_mut().enumerate() {
            let load: f64 = row.iter().zip(&betas).map(|(x, b)| x * b).sum();
            if load > betas[s] {
                row.iter_mut().for_each(|v| *v *= betas[s] / load);
            }
        }
        let mut y: Vec<f64> = x.iter().map(|row| row.iter().cloned().fold(0.0, f64::max)).collect();
        let total: f64 = y.iter().sum();
        if total > alpha {
            let c = alpha / total;
            x.iter_mut().flatten().for_each(|v| *v *= c);
            y.iter_mut().for_each(|v| *v *= c);
        }
        let cand = PrimalCandidate { x, y };
        let p = verify_primal_feasibility(&cand, &betas, alpha).unwrap();
        prop_assert!(p.feasible, "{:?}", p.violations);
        let dual = build_dual_solution::<f64>(k).unwrap();
        prop_assert!(p.objective <= dual_objective(&dual, alpha, &betas) + 1e-9);
    }
}
