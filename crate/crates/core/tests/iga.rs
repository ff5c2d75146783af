use std::sync::Arc;

use asg1::bundled;
use asg1::c1space::{build_c1_space, C1Options};
use asg1::gluing::{estimate_all, GluingData, SurfaceEstimator};
use asg1::iga::*;
use asg1::mpatch::{infer_interfaces, CubeSphere, MultiPatchSpline, SurfaceSource};
use asg1::spline::{SplineSpace1D, TensorSpace};
use asg1::vec3::Vec3;
use asg1::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single_patch(space: SplineSpace1D, corners: [Vec3; 4]) -> MultiPatchSpline {
    let lin = SplineSpace1D::new(1, 0, 0).unwrap();
    let ts = TensorSpace::new(lin.clone());
    let c = vec![corners.to_vec()];
    let topo = infer_interfaces(1, |p, xi| ts.eval_patch(&c[p], xi, 0, 0).unwrap(), 1e-10).unwrap();
    MultiPatchSpline::canonicalize(lin, c, topo.interfaces, Some(topo.boundaries))
        .unwrap()
        .represent_in(space)
        .unwrap()
}

fn planar_tripatch(k: usize) -> (MultiPatchSpline, Vec<GluingData>) {
    let geo = bundled::tripatch_bilinear()
        .unwrap()
        .represent_in(SplineSpace1D::new(4, 1, k).unwrap())
        .unwrap();
    let glue = estimate_all(&SurfaceEstimator, &geo).unwrap();
    (geo, glue)
}

/// A polynomial with `Delta^2 u = 0` in the plane.
struct Poly {
    c: [f64; 4],
}

impl ManufacturedSolution for Poly {
    fn name(&self) -> &'static str {
        "poly"
    }
    fn source(&self, _: Vec3) -> f64 {
        0.0
    }
    // u = c0 + c1 x + c2 x^2 + c3 x y
    fn exact(&self, x: Vec3) -> Option<AmbientJet> {
        let c = self.c;
        Some(AmbientJet {
            value: c[0] + c[1] * x[0] + c[2] * x[0] * x[0] + c[3] * x[0] * x[1],
            grad: [c[1] + 2.0 * c[2] * x[0] + c[3] * x[1], c[3] * x[0], 0.0],
            hess: [[2.0 * c[2], c[3], 0.0], [c[3], 0.0, 0.0], [0.0; 3]],
        })
    }
    fn planar_only(&self) -> bool {
        true
    }
}

/// Constant solution `u = c` of the reaction problem with source `lambda c`.
struct Constant(f64);

impl ManufacturedSolution for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn source(&self, _: Vec3) -> f64 {
        0.0
    }
    fn exact(&self, _: Vec3) -> Option<AmbientJet> {
        Some(AmbientJet {
            value: self.0,
            grad: [0.0; 3],
            hess: [[0.0; 3]; 3],
        })
    }
    fn planar_only(&self) -> bool {
        false
    }
}

struct ZeroSource;

impl ManufacturedSolution for ZeroSource {
    fn name(&self) -> &'static str {
        "zero"
    }
    fn source(&self, _: Vec3) -> f64 {
        0.0
    }
    fn exact(&self, _: Vec3) -> Option<AmbientJet> {
        None
    }
    fn planar_only(&self) -> bool {
        false
    }
}

#[test]
fn metrics_of_flat_scaled_and_random_patches() {
    let sq = single_patch(
        SplineSpace1D::new(3, 1, 1).unwrap(),
        [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]],
    );
    let m = surface_metrics(&sq, 0, [0.3, 0.8]).unwrap();
    assert!((m.g[0][0] - 1.0).abs() < 1e-14 && m.g[0][1].abs() < 1e-14 && (m.g[1][1] - 1.0).abs() < 1e-14);
    assert!((m.area - 1.0).abs() < 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ts = TensorSpace::new(SplineSpace1D::new(3, 2, 1).unwrap());
    let n = ts.n();
    let pts: Vec<Vec3> = (0..n * n)
        .map(|i| {
            let (a, b) = ((i / n) as f64, (i % n) as f64);
            [a + rng.random_range(-0.2..0.2), b + rng.random_range(-0.2..0.2), rng.random_range(-0.5..0.5)]
        })
        .collect();
    let topo = infer_interfaces(1, |_, xi| ts.eval_patch(&pts, xi, 0, 0).unwrap(), 1e-10).unwrap();
    let rnd = MultiPatchSpline::canonicalize(ts.space.clone(), vec![pts.clone()], topo.interfaces.clone(), Some(topo.boundaries.clone())).unwrap();
    let c = 2.5;
    let scaled_pts: Vec<Vec3> = pts.iter().map(|p| p.map(|v| c * v)).collect();
    let scaled = MultiPatchSpline::canonicalize(ts.space.clone(), vec![scaled_pts], topo.interfaces, Some(topo.boundaries)).unwrap();
    let xi = [0.41, 0.63];
    let m = surface_metrics(&rnd, 0, xi).unwrap();
    let ms = surface_metrics(&scaled, 0, xi).unwrap();
    assert!((ms.area - c * c * m.area).abs() <= 1e-12 * ms.area);
    assert!((ms.g[0][1] - c * c * m.g[0][1]).abs() <= 1e-12 * ms.g[0][0]);

    // central differences of positions
    let h = 1e-5;
    let pos = |u: f64, v: f64| rnd.eval(0, [u, v], 0, 0).unwrap();
    let sub = |a: Vec3, b: Vec3| [0, 1, 2].map(|i| (a[i] - b[i]) / (2.0 * h));
    let f1 = sub(pos(xi[0] + h, xi[1]), pos(xi[0] - h, xi[1]));
    let f2 = sub(pos(xi[0], xi[1] + h), pos(xi[0], xi[1] - h));
    let dot = |a: Vec3, b: Vec3| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let g_fd = [[dot(f1, f1), dot(f1, f2)], [dot(f1, f2), dot(f2, f2)]];
    for a in 0..2 {
        for b in 0..2 {
            assert!((g_fd[a][b] - m.g[a][b]).abs() <= 1e-6 * m.g[0][0].max(1.0), "g[{a}][{b}]");
        }
    }
}

#[test]
fn laplace_beltrami_of_sphere_coordinates_is_minus_two_over_r_squared() {
    let r = 1.7;
    let s = CubeSphere::new(r).unwrap();
    for patch in 0..6 {
        for xi in [[0.2, 0.3], [0.5, 0.5], [0.9, 0.05]] {
            let jet = s.jet(patch, xi).unwrap();
            let m = asg1::iga::SurfaceMetrics::from_jet(&jet).unwrap();
            let lc = laplace_coefficients(&jet, &m);
            for c in 0..3 {
                let lap = lc.apply(
                    [jet.d[1][0][c], jet.d[0][1][c]],
                    [jet.d[2][0][c], jet.d[1][1][c], jet.d[0][2][c]],
                );
                let want = -2.0 / (r * r) * jet.d[0][0][c];
                assert!((lap - want).abs() <= 1e-9, "patch {patch} {xi:?} comp {c}: {lap} vs {want}");
            }
        }
    }
}

#[test]
fn flat_patch_matrix_matches_a_dense_quadrature_of_ambient_laplacians() {
    // affine parallelogram: x = x0 + J xi
    let (e1, e2) = ([1.3, 0.2, 0.0], [0.4, 0.9, 0.0]);
    let geo = single_patch(
        SplineSpace1D::new(4, 1, 1).unwrap(),
        [[0.0, 0.0, 0.0], e2, e1, [e1[0] + e2[0], e1[1] + e2[1], 0.0]],
    );
    let p = ProblemSpec::dirichlet(Arc::new(Cos4Sin4)).unwrap();
    let sys = assemble(&p, &geo).unwrap();
    assert!(sys.matrix.symmetry_defect() <= 1e-10);
    let det = e1[0] * e2[1] - e2[0] * e1[1];
    let ji = [[e2[1] / det, -e2[0] / det], [-e1[1] / det, e1[0] / det]];
    let space = &geo.space.space;
    let n = space.dim();
    // 12-point Gauss per span in each direction, ambient Laplacian tr(J^-T H J^-1)
    let quad = space.quadrature(12).unwrap();
    let mut dense = vec![0.0; n.pow(4)];
    for &(u, wu) in &quad {
        for &(v, wv) in &quad {
            let bu = space.eval_basis(u, 2).unwrap();
            let bv = space.eval_basis(v, 2).unwrap();
            let lap: Vec<(usize, f64)> = bu
                .indices()
                .flat_map(|i| bv.indices().map(move |j| (i, j)))
                .map(|(i, j)| {
                    let h = [
                        [bu.get(2, i) * bv.get(0, j), bu.get(1, i) * bv.get(1, j)],
                        [bu.get(1, i) * bv.get(1, j), bu.get(0, i) * bv.get(2, j)],
                    ];
                    let mut t = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            for c in 0..2 {
                                t += ji[a][c] * h[a][b] * ji[b][c];
                            }
                        }
                    }
                    (i * n + j, t)
                })
                .collect();
            for &(a, la) in &lap {
                for &(b, lb) in &lap {
                    dense[a * n * n + b] += wu * wv * det.abs() * la * lb;
                }
            }
        }
    }
    let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut got = vec![0.0; n.pow(4)];
    for &(i, j, v) in &sys.matrix.entries {
        got[i * n * n + j] = v;
    }
    for (a, b) in dense.iter().zip(&got) {
        assert!((a - b).abs() <= 1e-7 * scale, "{a} vs {b}");
    }
}

#[test]
fn reaction_with_zero_source_gives_zero_and_constants_are_reproduced() {
    let (geo, glue) = bundled::sphere_asg1().unwrap();
    let zero = ProblemSpec::reaction(Arc::new(ZeroSource), 1.0).unwrap();
    let s = solve(&zero, &geo, &glue).unwrap();
    assert!(s.coefs.iter().all(|c| *c == 0.0));
    let c = 0.75;
    let lambda = 2.0;
    let konst = ProblemSpec::reaction(Arc::new(Constant(c)), lambda).unwrap();
    let s = solve(&konst, &geo, &glue).unwrap();
    let worst = s.coefs.iter().fold(0.0f64, |m, v| m.max((v - c).abs()));
    assert!(worst <= 1e-8, "max coefficient deviation {worst:e}");
    let e = error_norms(&geo, &s.coefs, &Constant(c)).unwrap();
    assert!(e.l2 <= 1e-8 && e.h1 <= 1e-7);
}

#[test]
fn functions_in_the_space_are_reproduced_by_the_dirichlet_solve() {
    let (geo, glue) = planar_tripatch(1);
    let u = Arc::new(Poly { c: [0.3, -1.2, 0.7, 0.5] });
    let p = ProblemSpec::dirichlet(u.clone()).unwrap();
    let s = solve(&p, &geo, &glue).unwrap();
    assert!(s.boundary_residual <= 1e-10, "{:e}", s.boundary_residual);
    let e = error_norms(&geo, &s.coefs, u.as_ref()).unwrap();
    assert!(e.l2 <= 1e-9 && e.h1 <= 1e-9 && e.h2 <= 1e-9, "{e:?}");
}

#[test]
fn homogeneous_data_gives_a_zero_lift() {
    let (geo, glue) = planar_tripatch(1);
    let full = build_c1_space(&geo, &glue, C1Options::default()).unwrap();
    let lift = impose_dirichlet(&full, &ZeroDirichlet).unwrap();
    assert!(lift.coefs.iter().all(|c| *c == 0.0));
}

#[test]
fn edge_projection_error_decays_at_order_p_plus_one() {
    let g = |t: f64| (3.0 * t).sin() + t * t;
    let err = |k: usize| {
        let s = SplineSpace1D::new(5, 2, k).unwrap();
        let c = s.l2_project(g).unwrap();
        let q = s.quadrature(10).unwrap();
        q.iter()
            .map(|&(x, w)| w * (s.eval(&c, x, 0).unwrap() - g(x)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let (e1, e2) = (err(7), err(15));
    let order = (e1 / e2).log2();
    assert!((order - 6.0).abs() < 0.3, "order {order}");
}

#[test]
fn galerkin_residual_vanishes_on_random_free_members() {
    let (geo, glue) = planar_tripatch(3);
    let p = ProblemSpec::dirichlet(Arc::new(Cos4Sin4)).unwrap();
    let s = solve(&p, &geo, &glue).unwrap();
    let sys = assemble(&p, &geo).unwrap();
    let clamped = build_c1_space(
        &geo,
        &glue,
        C1Options {
            clamp_boundary: true,
            skip_geometry_check: false,
        },
    )
    .unwrap();
    let su = sys.matrix.matvec(&s.coefs);
    let r: Vec<f64> = su.iter().zip(&sys.load).map(|(a, b)| a - b).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..20 {
        let y: Vec<f64> = (0..clamped.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = clamped.expand(&y);
        let rv: f64 = v.iter().zip(&r).map(|(a, b)| a * b).sum();
        let scale = norm(&v) * (norm(&su) + norm(&sys.load));
        assert!(rv.abs() <= 1e-9 * scale, "{:e}", rv.abs() / scale);
    }
}

#[test]
fn norms_of_interpolated_polynomials_and_a_riemann_oracle() {
    let geo = single_patch(
        SplineSpace1D::new(4, 1, 1).unwrap(),
        [[0.0, 0.0, 0.0], [0.3, 1.0, 0.0], [1.2, 0.1, 0.0], [1.5, 1.1, 0.0]],
    );
    // the bilinear map is not affine, so use a polynomial of the pullback degree <= 4
    let u = Poly { c: [1.0, 0.5, -0.25, 0.8] };
    let ts = &geo.space;
    let interp = ts
        .interpolate(|xi| {
            let x = geo.eval(0, xi, 0, 0).unwrap();
            [u.exact(x).unwrap().value, 0.0, 0.0]
        })
        .unwrap();
    let coefs: Vec<f64> = interp.iter().map(|p| p[0]).collect();
    let e = error_norms(&geo, &coefs, &u).unwrap();
    assert!(e.l2 <= 1e-9 && e.h1 <= 1e-9 && e.h2 <= 1e-9, "{e:?}");

    // field norms vs midpoint sums on knot-aligned cells, Richardson-extrapolated
    let nrm = field_norms(&geo, &coefs).unwrap();
    let midpoint = |m: usize| {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                let xi = [(i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64];
                let v = ts.eval_scalar(&coefs, xi, 0, 0).unwrap();
                let met = surface_metrics(&geo, 0, xi).unwrap();
                s += v * v * met.area / (m * m) as f64;
            }
        }
        s
    };
    let (a, b) = (midpoint(200), midpoint(400));
    let oracle = ((4.0 * b - a) / 3.0).sqrt();
    assert!((oracle - nrm.l2).abs() <= 1e-7 * nrm.l2, "{oracle} vs {}", nrm.l2);
}

#[test]
fn estimators_vanish_for_identical_levels_and_track_true_errors() {
    let (geo, glue) = planar_tripatch(1);
    let p = ProblemSpec::dirichlet(Arc::new(Cos4Sin4)).unwrap();
    let s = solve(&p, &geo, &glue).unwrap();
    let fine = geo.refine(1).unwrap();
    let pm = geo.space.space.prolongation(&fine.space.space).unwrap();
    let nn = geo.n() * geo.n();
    let prolonged: Vec<f64> = s.coefs.chunks(nn).flat_map(|c| geo.space.prolong_coefs(&pm, c)).collect();
    let z = estimators_h_h2(&geo, &s.coefs, &fine, &prolonged).unwrap();
    assert!(z.l2 <= 1e-12 && z.h1 <= 1e-10 && z.h2 <= 1e-8, "{z:?}");
    assert!(estimators_h_h2(&fine, &prolonged, &geo, &s.coefs).is_err());

    let led = convergence_study(&p, &geo, &glue, StudyOptions { levels: 3, estimators: true }).unwrap();
    for row in &led.rows {
        let (e, est) = (row.errors.unwrap().as_array(), row.estimators.unwrap().as_array());
        for i in 0..3 {
            let ratio = est[i] / e[i];
            assert!((0.5..=2.0).contains(&ratio), "level {} norm {i}: ratio {ratio}", row.level);
        }
    }
    let (o, oe) = (led.orders(), led.estimator_orders());
    let (o, oe) = (o[2].unwrap(), oe[2].unwrap());
    for i in 0..3 {
        assert!((o[i] - oe[i]).abs() <= 0.3, "{o:?} vs {oe:?}");
    }
}

#[test]
fn one_level_study_has_no_orders() {
    let (geo, glue) = planar_tripatch(1);
    let p = ProblemSpec::dirichlet(Arc::new(Cos4Sin4)).unwrap();
    let led = convergence_study(&p, &geo, &glue, StudyOptions { levels: 1, estimators: false }).unwrap();
    assert_eq!(led.rows.len(), 1);
    assert!(led.final_orders().is_none());
    let csv = led.to_csv();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().ends_with(",,,"));
}

#[test]
fn problem_and_topology_mismatches_are_reported() {
    let (geo, glue) = planar_tripatch(1);
    let (sphere, sglue) = bundled::sphere_asg1().unwrap();
    let reaction = ProblemSpec::reaction(Arc::new(CosHalfProduct), 1.0).unwrap();
    assert!(matches!(solve(&reaction, &geo, &glue), Err(Error::ProblemMismatch(_))));
    let dir = ProblemSpec::dirichlet(Arc::new(Cos4Sin4)).unwrap();
    assert!(matches!(solve(&dir, &sphere, &sglue), Err(Error::ProblemMismatch(_))));
    let planar_only = ProblemSpec::reaction(Arc::new(Cos4Sin4), 1.0).unwrap();
    assert!(matches!(solve(&planar_only, &sphere, &sglue), Err(Error::ProblemMismatch(_))));
    assert!(matches!(ProblemSpec::dirichlet(Arc::new(CosHalfProduct)), Err(Error::ProblemMismatch(_))));
    assert!(ProblemSpec::reaction(Arc::new(CosHalfProduct), -1.0).is_err());
    assert!(manufactured_by_name("nope").is_err());
}
