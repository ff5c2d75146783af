use asg1::spline::{prolong_points, SplineSpace1D, TensorSpace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Admissible `(p, r, k)`: p in 3..=5, 1 <= r <= p-2, k in 0..=8.
fn admissible() -> impl Strategy<Value = (usize, usize, usize)> {
    (3usize..=5).prop_flat_map(|p| (Just(p), 1..=p - 2, 0usize..=8))
}

/// Cox-de Boor recursion on an explicitly written open knot vector.
fn cox_de_boor(p: usize, r: usize, k: usize, j: usize, x: f64) -> f64 {
    let mut t = vec![0.0; p + 1];
    for i in 1..=k {
        t.extend(std::iter::repeat_n(i as f64 / (k + 1) as f64, p - r));
    }
    t.extend(std::iter::repeat_n(1.0, p + 1));
    let n = t.len() - p - 1;
    // degree-0 functions, with the last non-empty span closed at x = 1
    let last = (0..t.len() - 1).rev().find(|&i| t[i] < t[i + 1]).unwrap();
    let mut b: Vec<f64> = (0..t.len() - 1)
        .map(|i| {
            let inside = t[i] <= x && x < t[i + 1];
            let end = i == last && x == 1.0;
            if inside || end {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for d in 1..=p {
        b = (0..t.len() - 1 - d)
            .map(|i| {
                let mut v = 0.0;
                if t[i + d] > t[i] {
                    v += (x - t[i]) / (t[i + d] - t[i]) * b[i];
                }
                if t[i + d + 1] > t[i + 1] {
                    v += (t[i + d + 1] - x) / (t[i + d + 1] - t[i + 1]) * b[i + 1];
                }
                v
            })
            .collect();
    }
    assert_eq!(b.len(), n);
    b[j]
}

#[test]
fn dimension_identities_on_the_admissible_grid() {
    for p in 3..=5 {
        for r in 1..=p - 2 {
            for k in 0..=8 {
                let s = SplineSpace1D::new(p, r, k).unwrap();
                assert_eq!(s.dim(), p + 1 + k * (p - r));
                let (s0, s1) = s.companion_spaces().unwrap();
                assert_eq!(s0.dim(), p + 1 + k * (p - r - 1));
                assert_eq!(s1.dim(), p + k * (p - r - 1));
                assert_eq!(TensorSpace::new(s).dim(), (p + 1 + k * (p - r)).pow(2));
            }
        }
    }
}

#[test]
fn knots_are_bitwise_dyadic() {
    let s = SplineSpace1D::new(4, 1, 6).unwrap();
    for (i, chunk) in s.knots()[5..s.knots().len() - 5].chunks(3).enumerate() {
        for &t in chunk {
            assert_eq!(t, (i + 1) as f64 / 7.0);
        }
    }
}

#[test]
fn refining_once_with_two_knots_gives_five() {
    assert_eq!(SplineSpace1D::new(3, 1, 2).unwrap().refine_dyadic(1).inner_knots(), 5);
    let s = SplineSpace1D::new(3, 1, 2).unwrap();
    assert_eq!(s.refine_dyadic(0), s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_of_unity_and_nonnegativity((p, r, k) in admissible(), seed in any::<u64>()) {
        let s = SplineSpace1D::new(p, r, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let x: f64 = rng.random_range(0.0..=1.0);
            let b = s.eval_basis(x, 1).unwrap();
            let sum: f64 = b.ders[0].iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-13);
            prop_assert!(b.ders[0].iter().all(|&v| v >= -1e-15));
            let dsum: f64 = b.ders[1].iter().sum();
            prop_assert!(dsum.abs() < 1e-10 * (k + 1) as f64);
        }
    }

    #[test]
    fn basis_values_match_cox_de_boor((p, r, k) in admissible(), x in 0.0f64..=1.0) {
        let s = SplineSpace1D::new(p, r, k).unwrap();
        let b = s.eval_basis(x, 0).unwrap();
        for j in 0..s.dim() {
            prop_assert!((b.get(0, j) - cox_de_boor(p, r, k, j, x)).abs() < 1e-13);
        }
    }

    #[test]
    fn greville_interpolation_reproduces_the_identity((p, r, k) in admissible(), x in 0.0f64..=1.0) {
        let s = SplineSpace1D::new(p, r, k).unwrap();
        let c = s.interpolate(|x| x).unwrap();
        for (ci, gi) in c.iter().zip(s.greville()) {
            prop_assert!((ci - gi).abs() < 1e-12);
        }
        prop_assert!((s.eval(&s.greville(), x, 0).unwrap() - x).abs() < 1e-13);
    }

    #[test]
    fn refinement_commutes_with_evaluation((p, r, k) in admissible(), levels in 1u32..=2, seed in any::<u64>()) {
        let s = SplineSpace1D::new(p, r, k).unwrap();
        let fine = s.refine_dyadic(levels);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pm = s.prolongation(&fine).unwrap();
        let cf: Vec<f64> = (0..fine.dim())
            .map(|i| (0..s.dim()).map(|j| pm[(i, j)] * c[j]).sum())
            .collect();
        for _ in 0..100 {
            let x: f64 = rng.random_range(0.0..=1.0);
            prop_assert!((s.eval(&c, x, 0).unwrap() - fine.eval(&cf, x, 0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_refinement_preserves_patches(seed in any::<u64>()) {
        let s = SplineSpace1D::new(4, 1, 2).unwrap();
        let t = TensorSpace::new(s.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<[f64; 3]> = (0..t.dim())
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let fine = s.refine_dyadic(2);
        let fp = prolong_points(&t, &fine, &pts).unwrap();
        let tf = TensorSpace::new(fine);
        for _ in 0..100 {
            let xi = [rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)];
            let a = t.eval_patch(&pts, xi, 0, 0).unwrap();
            let b = tf.eval_patch(&fp, xi, 0, 0).unwrap();
            prop_assert!((0..3).all(|c| (a[c] - b[c]).abs() < 1e-12));
        }
    }
}
