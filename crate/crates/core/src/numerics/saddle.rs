use faer::{Mat, MatRef, Side};

use crate::{Error, Result};

/// Singular values below `RANK_TOL * s_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// `min 1/2 x^T H x + c^T x  s.t.  A x = b`, one independent problem per column of `c` and `b`.
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    pub h: Mat<f64>,
    pub c: Mat<f64>,
    pub a: Mat<f64>,
    pub b: Mat<f64>,
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub x: Mat<f64>,
    pub multipliers: Mat<f64>,
    /// Max over columns of `||A x - b||`.
    pub constraint_residual: f64,
    /// Max over columns of `||H x + c + A^T mult||`.
    pub stationarity_residual: f64,
}

struct RankedSvd {
    u: Mat<f64>,
    s: Vec<f64>,
    v: Mat<f64>,
    rank: usize,
}

fn ranked_svd(a: MatRef<'_, f64>, full: bool, rel_tol: f64) -> Result<RankedSvd> {
    let svd = if full { a.svd() } else { a.thin_svd() }.map_err(|_| Error::Degenerate {
        stage: "singular value decomposition".into(),
    })?;
    let s: Vec<f64> = (0..svd.S().column_vector().nrows())
        .map(|i| svd.S().column_vector()[i])
        .collect();
    let smax = s.iter().copied().fold(0.0, f64::max);
    let rank = if smax > 0.0 {
        s.iter().filter(|&&v| v > rel_tol * smax).count()
    } else {
        0
    };
    Ok(RankedSvd {
        u: svd.U().to_owned(),
        s,
        v: svd.V().to_owned(),
        rank,
    })
}

/// Applies `V_r S_r^{-1} U_r^T` to `b`.
fn apply_pinv(svd: &RankedSvd, b: MatRef<'_, f64>) -> Mat<f64> {
    let r = svd.rank;
    let ut_b = svd.u.subcols(0, r).transpose() * b;
    let scaled = Mat::from_fn(r, b.ncols(), |i, j| ut_b[(i, j)] / svd.s[i]);
    svd.v.subcols(0, r) * &scaled
}

fn col_norms_max(m: MatRef<'_, f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.col(j).norm_l2())
        .fold(0.0, f64::max)
}

/// Minimal-norm least-squares solution of `A x = b`, column by column.
pub fn lsq_min_norm(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::InvalidArgument(format!(
            "lsq_min_norm: A has {} rows but b has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Mat::zeros(a.ncols(), b.ncols()));
    }
    let svd = ranked_svd(a, false, RANK_TOL)?;
    Ok(apply_pinv(&svd, b))
}

/// Orthonormal basis of the nullspace of `a`, one basis vector per column.
pub fn nullspace(a: MatRef<'_, f64>, rel_tol: f64) -> Result<Mat<f64>> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Ok(Mat::identity(n, n));
    }
    let svd = ranked_svd(a, true, rel_tol)?;
    Ok(svd.v.subcols(svd.rank, n - svd.rank).to_owned())
}

/// Orthonormal basis of the column span of `m`.
pub fn orthonormal_columns(m: MatRef<'_, f64>, rel_tol: f64) -> Result<Mat<f64>> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Ok(Mat::zeros(m.nrows(), 0));
    }
    let svd = ranked_svd(m, false, rel_tol)?;
    Ok(svd.u.subcols(0, svd.rank).to_owned())
}

/// Cholesky solve of an SPD system.
pub fn solve_spd(h: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
    use faer::linalg::solvers::Solve;
    let llt = h.llt(Side::Lower).map_err(|_| Error::Degenerate {
        stage: "Cholesky factorisation".into(),
    })?;
    Ok(llt.solve(rhs))
}

/// Minimal-norm solution of the symmetric system `H y = g` via the eigendecomposition.
///
/// Returns `Degenerate` when `H` is indefinite or `g` has a significant component in the
/// numerical nullspace of `H`.
pub fn pseudo_solve_symmetric(h: MatRef<'_, f64>, g: MatRef<'_, f64>) -> Result<Mat<f64>> {
    pseudo_solve_scaled(h, g, 0.0, 0.0)
}

/// As `pseudo_solve_symmetric`, with eigenvalues judged against `max(|lambda|_max, hscale)`
/// and nullspace components of `g` against `max(||g||, gscale)`.
///
/// A reduced system that vanishes in exact arithmetic carries roundoff of either sign;
/// the unreduced magnitudes keep it from reading as indefinite or unbounded.
fn pseudo_solve_scaled(
    h: MatRef<'_, f64>,
    g: MatRef<'_, f64>,
    hscale: f64,
    gscale: f64,
) -> Result<Mat<f64>> {
    let n = h.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, g.ncols()));
    }
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Degenerate {
            stage: "symmetric eigendecomposition".into(),
        })?;
    let lam: Vec<f64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
    let lmax = lam.iter().fold(hscale, |m, v| m.max(v.abs()));
    let tol = RANK_TOL * lmax;
    if lam.iter().any(|&l| l < -1e3 * tol.max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate {
            stage: "indefinite reduced Hessian".into(),
        });
    }
    let u = evd.U();
    let ut_g = u.transpose() * g;
    let gnorm = col_norms_max(g).max(gscale).max(f64::MIN_POSITIVE);
    let mut scaled = Mat::zeros(n, g.ncols());
    for i in 0..n {
        for j in 0..g.ncols() {
            if lam[i] > tol {
                scaled[(i, j)] = ut_g[(i, j)] / lam[i];
            } else if ut_g[(i, j)].abs() > 1e-8 * gnorm {
                return Err(Error::Degenerate {
                    stage: "unbounded quadratic objective".into(),
                });
            }
        }
    }
    Ok(u * &scaled)
}

/// Solves an equality-constrained quadratic program by the nullspace method.
///
/// The particular solution lies in the row space of `A` and the nullspace component is
/// the minimal-norm minimiser, so the returned `x` is the minimal-norm KKT solution.
pub fn solve_saddle(qp: &QuadraticProgram) -> Result<SaddleSolution> {
    let n = qp.h.nrows();
    let m = qp.a.nrows();
    let s = qp.c.ncols();
    if qp.h.ncols() != n
        || qp.c.nrows() != n
        || (m > 0 && qp.a.ncols() != n)
        || qp.b.nrows() != m
        || qp.b.ncols() != s
    {
        return Err(Error::InvalidArgument(format!(
            "solve_saddle: inconsistent shapes H {}x{}, c {}x{}, A {}x{}, b {}x{}",
            qp.h.nrows(),
            qp.h.ncols(),
            qp.c.nrows(),
            qp.c.ncols(),
            qp.a.nrows(),
            qp.a.ncols(),
            qp.b.nrows(),
            qp.b.ncols()
        )));
    }
    let bnorm = col_norms_max(qp.b.as_ref());
    let feas_tol = 1e-9 * (1.0 + bnorm);

    let (xp, z, svd) = if m == 0 {
        (Mat::zeros(n, s), Mat::identity(n, n), None)
    } else {
        let svd = ranked_svd(qp.a.as_ref(), true, RANK_TOL)?;
        let xp = apply_pinv(&svd, qp.b.as_ref());
        let res = &qp.a * &xp - &qp.b;
        let r = col_norms_max(res.as_ref());
        if r > feas_tol {
            return Err(Error::Infeasible {
                stage: "saddle".into(),
                residual: r,
            });
        }
        let z = svd.v.subcols(svd.rank, n - svd.rank).to_owned();
        (xp, z, Some(svd))
    };

    let hz = &qp.h * &z;
    let hr = z.transpose() * &hz;
    let hr = Mat::from_fn(hr.nrows(), hr.ncols(), |i, j| 0.5 * (hr[(i, j)] + hr[(j, i)]));
    let full_grad = &qp.h * &xp + &qp.c;
    let gscale = col_norms_max((&qp.h * &xp).as_ref()) + col_norms_max(qp.c.as_ref());
    let g = z.transpose() * &full_grad;
    let hscale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .fold(0.0f64, |m, (i, j)| m.max(qp.h[(i, j)].abs()));
    let y = pseudo_solve_scaled(hr.as_ref(), g.as_ref(), hscale, gscale)?;
    let x = &xp - &z * &y;

    let grad = &qp.h * &x + &qp.c;
    let multipliers = match &svd {
        Some(svd) => {
            let neg = Mat::from_fn(n, s, |i, j| -grad[(i, j)]);
            // A^T mu = -grad  <=>  V S U^T mu = -grad
            let r = svd.rank;
            let vt = svd.v.subcols(0, r).transpose() * &neg;
            let scaled = Mat::from_fn(r, s, |i, j| vt[(i, j)] / svd.s[i]);
            svd.u.subcols(0, r) * &scaled
        }
        None => Mat::zeros(0, s),
    };
    let constraint_residual = if m > 0 {
        col_norms_max((&qp.a * &x - &qp.b).as_ref())
    } else {
        0.0
    };
    let stationarity = if m > 0 {
        &grad + qp.a.transpose() * &multipliers
    } else {
        grad
    };
    Ok(SaddleSolution {
        x,
        multipliers,
        constraint_residual,
        stationarity_residual: col_norms_max(stationarity.as_ref()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn min_norm_on_a_line() {
        let qp = QuadraticProgram {
            h: Mat::<f64>::identity(2, 2) * faer::Scale(2.0),
            c: Mat::zeros(2, 1),
            a: mat(&[&[1.0, 1.0]]),
            b: mat(&[&[1.0]]),
        };
        let sol = solve_saddle(&qp).unwrap();
        assert!((sol.x[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((sol.x[(1, 0)] - 0.5).abs() < 1e-14);
        assert!(sol.stationarity_residual < 1e-12);
    }

    #[test]
    fn lsq_min_norm_underdetermined() {
        let x = lsq_min_norm(mat(&[&[1.0, 1.0]]).as_ref(), mat(&[&[2.0]]).as_ref()).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((x[(1, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inconsistent_constraints_are_infeasible() {
        let qp = QuadraticProgram {
            h: Mat::identity(2, 2),
            c: Mat::zeros(2, 1),
            a: mat(&[&[1.0, 1.0], &[1.0, 1.0]]),
            b: mat(&[&[1.0], &[2.0]]),
        };
        match solve_saddle(&qp) {
            Err(Error::Infeasible { residual, .. }) => {
                // least-squares residual of the pair x1+x2 = 1, x1+x2 = 2
                assert!((residual - 0.5f64.sqrt()).abs() < 1e-12);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_objective_is_degenerate() {
        let qp = QuadraticProgram {
            h: Mat::zeros(2, 2),
            c: mat(&[&[1.0], &[0.0]]),
            a: Mat::zeros(0, 2),
            b: Mat::zeros(0, 1),
        };
        assert!(matches!(solve_saddle(&qp), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn nullspace_is_orthonormal_and_annihilated() {
        let a = mat(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        let z = nullspace(a.as_ref(), 1e-12).unwrap();
        assert_eq!(z.ncols(), 2);
        assert!((&a * &z).norm_l2() < 1e-13);
        assert!((z.transpose() * &z - Mat::<f64>::identity(2, 2)).norm_l2() < 1e-13);
    }

    #[test]
    fn stage_label_is_rewritten() {
        let e = Error::Infeasible {
            stage: "saddle".into(),
            residual: 1.0,
        }
        .in_stage("vertex 3");
        assert!(e.to_string().contains("vertex 3"));
    }
}
