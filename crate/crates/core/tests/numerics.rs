//! Randomized checks of the dense kernels against the oracles in `common::oracles`.

mod common;

use asg1::numerics::{gauss_legendre, lsq_min_norm, nullspace, solve_saddle, QuadraticProgram};
use common::oracles::*;
use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn hundred_random_cases_match_the_oracles() {
    let worst = randomized_suite(20_240_501);
    assert!(worst <= 1e-10, "worst relative deviation {worst:e}");
}

#[test]
fn worked_minimal_norm_examples() {
    let a = Mat::from_fn(1, 2, |_, _| 1.0);
    let b = Mat::from_fn(1, 1, |_, _| 2.0);
    let x = lsq_min_norm(a.as_ref(), b.as_ref()).unwrap();
    assert!((x[(0, 0)] - 1.0).abs() < 1e-14 && (x[(1, 0)] - 1.0).abs() < 1e-14);
    let id = Mat::<f64>::identity(4, 4);
    let b = Mat::from_fn(4, 1, |i, _| i as f64 - 1.5);
    let x = lsq_min_norm(id.as_ref(), b.as_ref()).unwrap();
    assert!((0..4).all(|i| (x[(i, 0)] - b[(i, 0)]).abs() < 1e-14));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_rules_integrate_monomials_exactly(q in 1usize..16, a in -2.0f64..1.0, len in 0.1f64..3.0) {
        let b = a + len;
        let rule = gauss_legendre(q, a, b).unwrap();
        for m in 0..2 * q {
            let exact = (b.powi(m as i32 + 1) - a.powi(m as i32 + 1)) / (m + 1) as f64;
            let scale = (a.abs().max(b.abs())).powi(m as i32) * len;
            let got = rule.integrate(|t| t.powi(m as i32));
            prop_assert!((got - exact).abs() <= 1e-13 * scale, "q {} m {}: {} vs {}", q, m, got, exact);
        }
    }

    #[test]
    fn saddle_solutions_are_feasible_and_stationary(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..8);
        let m = rng.random_range(1..n);
        let h = random_spd(&mut rng, n);
        let rank = rng.random_range(1..=m);
        let a = factored(&mut rng, m, n, rank).a;
        let x0 = random_vec(&mut rng, n);
        let b = matvec(&a, &x0);
        let c = random_vec(&mut rng, n);
        let sol = solve_saddle(&QuadraticProgram {
            h: to_mat(&h, n),
            c: Mat::from_fn(n, 1, |i, _| c[i]),
            a: to_mat(&a, n),
            b: Mat::from_fn(m, 1, |i, _| b[i]),
        }).unwrap();
        let x = col(&sol.x, 0);
        let ax = matvec(&a, &x);
        prop_assert!(rel_diff(&ax, &b) <= 1e-9);
        // the objective gradient has no component in ker A
        let grad: Vec<f64> = matvec(&h, &x).iter().zip(&c).map(|(u, v)| u + v).collect();
        let z = nullspace(to_mat(&a, n).as_ref(), 1e-10).unwrap();
        for j in 0..z.ncols() {
            let d: f64 = (0..n).map(|i| z[(i, j)] * grad[i]).sum();
            prop_assert!(d.abs() <= 1e-9 * (1.0 + norm(&grad)));
        }
    }

    #[test]
    fn unconstrained_spd_problems_match_a_linear_solve(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..7);
        let h = random_spd(&mut rng, n);
        let c = random_vec(&mut rng, n);
        let sym = solve_saddle(&QuadraticProgram {
            h: to_mat(&h, n),
            c: Mat::from_fn(n, 1, |i, _| c[i]),
            a: Mat::zeros(0, n),
            b: Mat::zeros(0, 1),
        }).unwrap();
        let oracle = dense_solve(h.clone(), c.iter().map(|v| -v).collect());
        prop_assert!(rel_diff(&col(&sym.x, 0), &oracle) <= 1e-10);
    }
}
