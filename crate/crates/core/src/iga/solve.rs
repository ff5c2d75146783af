use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use super::assemble::assemble;
use super::problem::{DirichletData, ExactDirichlet, ProblemKind, ProblemSpec};
use super::sparse::SparseMatrix;
use crate::c1space::{build_c1_space, C1Options, C1Space, DiscreteField, Slot};
use crate::construct::edge_form;
use crate::gluing::GluingData;
use crate::mpatch::{MultiPatchSpline, SurfaceSource};
use crate::numerics::lsq_min_norm;
use crate::vec3;
use crate::{Error, Result};

/// Bound on the normwise backward error `||Ay - b|| / (||A|| ||y|| + ||b||)` of the
/// reduced solve (infinity norms).
pub const LINEAR_SOLVE_TOL: f64 = 1e-10;

/// Accuracy of a reduced linear solve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveError {
    /// `||Ay - b|| / (||A|| ||y|| + ||b||)`
    pub backward: f64,
    /// `||Ay - b|| / ||b||`
    pub relative_residual: f64,
}

const REFINEMENT_STEPS: usize = 5;

/// A member of the unclamped space carrying the projected boundary data.
#[derive(Debug, Clone)]
pub struct DirichletLift {
    /// Full patch coefficients.
    pub coefs: Vec<f64>,
    /// Max collocation mismatch against the projected boundary data.
    pub boundary_residual: f64,
}

/// Computes the L2 projections of the value onto `S^{p,r+1}` and of the transversal
/// derivative onto `S^{p-1,r}` along every boundary curve, and the member of `full`
/// reproducing them (least squares where vertex compatibility fails).
pub fn impose_dirichlet(full: &C1Space, data: &dyn DirichletData) -> Result<DirichletLift> {
    let geo = &full.geometry;
    let space = full.space();
    let (trace, transversal) = space.companion_spaces()?;
    let zeta = space.greville();
    let slots = full.slots();
    let z = &full.z_edge;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for b in &geo.topology.boundaries {
        let f = b.frame;
        let sample = |t: f64| -> Result<(f64, f64)> {
            let jet = f.local_jet(&geo.jet(f.patch, f.param(0.0, t))?);
            let (fd, ft) = (jet.d[1][0], jet.d[0][1]);
            let tau = vec3::scale(1.0 / vec3::norm(ft), ft);
            let mut nu = fd;
            let c = -vec3::dot(fd, tau);
            vec3::axpy(&mut nu, c, tau);
            let nu = vec3::scale(1.0 / vec3::norm(nu), nu);
            let x = jet.d[0][0];
            let (g1, grad) = data.g1(x);
            let dd = vec3::dot(fd, tau) * vec3::dot(grad, tau) + vec3::dot(fd, nu) * data.g2(x, nu);
            Ok((g1, dd))
        };
        // sampling errors surface after projection; evaluation inside [0, 1] cannot fail
        let t0 = trace.l2_project(|t| sample(t).map(|s| s.0).unwrap_or(f64::NAN))?;
        let t1 = transversal.l2_project(|t| sample(t).map(|s| s.1).unwrap_or(f64::NAN))?;
        for &zt in &zeta {
            for (a, target) in [(0, trace.eval(&t0, zt, 0)?), (1, transversal.eval(&t1, zt, 0)?)] {
                let form = edge_form(space, &f, zt, a, 0);
                let mut row = vec![0.0; z.ncols()];
                for (g, w) in form {
                    if let Slot::Edge(r) = slots[g] {
                        for (c, o) in row.iter_mut().enumerate() {
                            *o += w * z[(r, c)];
                        }
                    }
                }
                rows.push(row);
                rhs.push(target);
            }
        }
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("boundary data is not finite".into()));
    }
    let a = Mat::from_fn(rows.len(), z.ncols(), |i, j| rows[i][j]);
    let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let y = lsq_min_norm(a.as_ref(), b.as_ref())?;
    let res = &a * &y - &b;
    let boundary_residual = (0..res.nrows()).fold(0.0f64, |m, i| m.max(res[(i, 0)].abs()));
    let mut coefs = vec![0.0; full.num_coefficients()];
    for (r, &g) in full.edge.iter().enumerate() {
        coefs[g] = (0..z.ncols()).map(|c| z[(r, c)] * y[(c, 0)]).sum();
    }
    Ok(DirichletLift {
        coefs,
        boundary_residual,
    })
}

/// `Z^T S Z` for the basis matrix `Z` of `sp` (interior basis functions first).
pub(crate) fn reduce_matrix(s: &SparseMatrix, sp: &C1Space) -> SparseMatrix {
    let slots = sp.slots();
    let ni = sp.interior.len();
    let de = sp.dim_edge();
    let z = &sp.z_edge;
    let ne = sp.edge.len();
    let mut trip = Vec::new();
    let mut ie: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut see = Vec::new();
    for &(i, j, v) in &s.entries {
        match (slots[i], slots[j]) {
            (Slot::Interior(a), Slot::Interior(b)) => trip.push((a, b, v)),
            (Slot::Interior(a), Slot::Edge(r)) => {
                let acc = ie.entry(a).or_insert_with(|| vec![0.0; de]);
                for (c, o) in acc.iter_mut().enumerate() {
                    *o += v * z[(r, c)];
                }
            }
            (Slot::Edge(_), Slot::Interior(_)) => {}
            (Slot::Edge(r), Slot::Edge(q)) => see.push((r, q, v)),
        }
    }
    for (a, acc) in ie {
        for (c, v) in acc.into_iter().enumerate() {
            if v != 0.0 {
                trip.push((a, ni + c, v));
                trip.push((ni + c, a, v));
            }
        }
    }
    // Z_E^T S_EE Z_E
    let mut y = Mat::<f64>::zeros(ne, de);
    for (r, q, v) in see {
        for c in 0..de {
            y[(r, c)] += v * z[(q, c)];
        }
    }
    let aee = z.transpose() * &y;
    for i in 0..de {
        for j in 0..de {
            trip.push((ni + i, ni + j, 0.5 * (aee[(i, j)] + aee[(j, i)])));
        }
    }
    SparseMatrix::from_triplets(ni + de, ni + de, trip)
}

/// `Z^T v`.
pub(crate) fn reduce_vector(v: &[f64], sp: &C1Space) -> Vec<f64> {
    let z = &sp.z_edge;
    let mut out: Vec<f64> = sp.interior.iter().map(|&g| v[g]).collect();
    out.extend((0..z.ncols()).map(|c| {
        sp.edge
            .iter()
            .enumerate()
            .map(|(r, &g)| z[(r, c)] * v[g])
            .sum::<f64>()
    }));
    out
}

#[derive(Debug, Clone)]
pub struct IgaSolution {
    /// Full patch coefficients of `u_h`.
    pub coefs: Vec<f64>,
    /// Coefficients over the free space (the clamped space for Dirichlet problems).
    pub free: DiscreteField,
    /// Dimension of the unclamped C1 space.
    pub dim: usize,
    pub residual: SolveError,
    pub boundary_residual: f64,
}

/// Solves `Z^T S Z y = Z^T (F - S u_B)` by sparse Cholesky.
pub fn solve_reduced(
    matrix: &SparseMatrix,
    load: &[f64],
    free: &C1Space,
    lift: Option<&[f64]>,
) -> Result<(Vec<f64>, DiscreteField, SolveError)> {
    let mut r = load.to_vec();
    if let Some(u) = lift {
        for (ri, si) in r.iter_mut().zip(matrix.matvec(u)) {
            *ri -= si;
        }
    }
    let a = reduce_matrix(matrix, free);
    let b = reduce_vector(&r, free);
    let llt = a
        .to_faer()?
        .sp_cholesky(Side::Lower)
        .map_err(|_| Error::Degenerate {
            stage: "solve: reduced system is not positive definite (C1 space deficient?)".into(),
        })?;
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let a_inf = a.row_sums_abs().into_iter().fold(0.0f64, f64::max);
    let b_inf = inf(&b);
    let mut y = vec![0.0; b.len()];
    let mut r = b.clone();
    let mut err = SolveError {
        backward: f64::INFINITY,
        relative_residual: f64::INFINITY,
    };
    // iterative refinement with the same factor; stops once the residual stalls
    for _ in 0..REFINEMENT_STEPS {
        let dy = llt.solve(&Mat::from_fn(r.len(), 1, |i, _| r[i]));
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += dy[(i, 0)];
        }
        let ay = a.matvec(&y);
        for ((ri, bi), ai) in r.iter_mut().zip(&b).zip(&ay) {
            *ri = bi - ai;
        }
        let r_inf = inf(&r);
        let backward = r_inf / (a_inf * inf(&y) + b_inf).max(f64::MIN_POSITIVE);
        let stalled = backward > 0.5 * err.backward;
        if backward < err.backward {
            err = SolveError {
                backward,
                relative_residual: r_inf / b_inf.max(f64::MIN_POSITIVE),
            };
        }
        if err.backward <= 0.01 * LINEAR_SOLVE_TOL || stalled {
            break;
        }
    }
    if !(err.backward <= LINEAR_SOLVE_TOL) {
        return Err(Error::Degenerate {
            stage: format!(
                "solve: backward error {:e} (C1 space deficient?)",
                err.backward
            ),
        });
    }
    let mut coefs = free.expand(&y);
    if let Some(u) = lift {
        for (c, l) in coefs.iter_mut().zip(u) {
            *c += l;
        }
    }
    Ok((coefs, DiscreteField { coefs: y }, err))
}

/// Builds the C1 spaces on `geo`, assembles and solves `problem`.
pub fn solve(problem: &ProblemSpec, geo: &MultiPatchSpline, gluing: &[GluingData]) -> Result<IgaSolution> {
    problem.check_geometry(geo.topology.is_closed(), geo.is_planar())?;
    let full = build_c1_space(geo, gluing, C1Options::default())?;
    let sys = assemble(problem, geo)?;
    match problem.kind {
        ProblemKind::Reaction { .. } => {
            let (coefs, free, residual) = solve_reduced(&sys.matrix, &sys.load, &full, None)?;
            Ok(IgaSolution {
                coefs,
                free,
                dim: full.dim(),
                residual,
                boundary_residual: 0.0,
            })
        }
        ProblemKind::Dirichlet => {
            let data = ExactDirichlet(problem.solution.clone());
            let lift = impose_dirichlet(&full, &data)?;
            let clamped = build_c1_space(
                geo,
                gluing,
                C1Options {
                    clamp_boundary: true,
                    skip_geometry_check: true,
                },
            )?;
            let (coefs, free, residual) =
                solve_reduced(&sys.matrix, &sys.load, &clamped, Some(&lift.coefs))?;
            Ok(IgaSolution {
                coefs,
                free,
                dim: full.dim(),
                residual,
                boundary_residual: lift.boundary_residual,
            })
        }
    }
}
