use rayon::prelude::*;

use super::metrics::{laplace_coefficients, SurfaceMetrics};
use super::problem::{ProblemKind, ProblemSpec};
use super::sparse::SparseMatrix;
use crate::mpatch::{Jet, MultiPatchSpline};
use crate::numerics::gauss_legendre;
use crate::spline::{BasisValues, SplineSpace1D, TensorSpace};
use crate::vec3::Vec3;
use crate::{Error, Result};

/// Gauss points per knot span exceed the degree by this much.
pub const QUADRATURE_EXTRA: usize = 2;

/// One Gauss point of a span with the basis up to second derivatives.
pub(crate) struct SpanPoint {
    pub w: f64,
    pub basis: BasisValues,
}

/// Gauss points grouped by knot span.
pub(crate) fn span_rules(s: &SplineSpace1D) -> Result<Vec<Vec<SpanPoint>>> {
    let q = s.degree() + QUADRATURE_EXTRA;
    s.spans()
        .into_iter()
        .map(|(a, b)| {
            Ok(gauss_legendre(q, a, b)?
                .iter()
                .map(|(x, w)| SpanPoint {
                    w,
                    basis: s.eval_basis_unchecked(x, 2),
                })
                .collect())
        })
        .collect()
}

pub(crate) fn jet_at(ts: &TensorSpace, coefs: &[Vec3], bu: &BasisValues, bv: &BasisValues) -> Jet {
    let mut d = [[[0.0; 3]; 3]; 3];
    for (a, row) in d.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate().take(3 - a) {
            *v = ts.combine(coefs, bu, bv, a, b);
        }
    }
    Jet { d }
}

/// Pullback derivatives `(psi, [psi_1, psi_2], [psi_11, psi_12, psi_22])` of a scalar
/// field with patch coefficients `c`.
pub(crate) fn scalar_at(
    n: usize,
    c: &[f64],
    bu: &BasisValues,
    bv: &BasisValues,
) -> (f64, [f64; 2], [f64; 3]) {
    let mut v = [0.0; 6];
    for (a, i) in bu.indices().enumerate() {
        for (b, j) in bv.indices().enumerate() {
            let cij = c[i * n + j];
            if cij == 0.0 {
                continue;
            }
            v[0] += cij * bu.ders[0][a] * bv.ders[0][b];
            v[1] += cij * bu.ders[1][a] * bv.ders[0][b];
            v[2] += cij * bu.ders[0][a] * bv.ders[1][b];
            v[3] += cij * bu.ders[2][a] * bv.ders[0][b];
            v[4] += cij * bu.ders[1][a] * bv.ders[1][b];
            v[5] += cij * bu.ders[0][a] * bv.ders[2][b];
        }
    }
    (v[0], [v[1], v[2]], [v[3], v[4], v[5]])
}

pub(crate) fn metrics_at(jet: &Jet, patch: usize) -> Result<SurfaceMetrics> {
    SurfaceMetrics::from_jet(jet).ok_or(Error::Regularity {
        patch,
        c1: 0,
        c2: 0,
    })
}

/// System matrix and load vector over all patch-local tensor coefficients
/// (index `patch * n^2 + i * n + j`).
#[derive(Debug, Clone)]
pub struct Assembled {
    /// `int Delta phi_i Delta phi_j (+ lambda_r phi_i phi_j)`
    pub matrix: SparseMatrix,
    /// `int f phi_i`
    pub load: Vec<f64>,
}

/// Assembles the Galerkin system of `problem` on the patches of `geo`, element by element.
pub fn assemble(problem: &ProblemSpec, geo: &MultiPatchSpline) -> Result<Assembled> {
    let ts = &geo.space;
    let n = ts.n();
    let nn = n * n;
    let lambda = match problem.kind {
        ProblemKind::Dirichlet => 0.0,
        ProblemKind::Reaction { lambda } => lambda,
    };
    let rules = span_rules(&ts.space)?;
    let m = ts.space.degree() + 1;
    let mm = m * m;
    let per_patch: Vec<(Vec<(usize, usize, f64)>, Vec<f64>)> = (0..geo.patches.len())
        .into_par_iter()
        .map(|patch| -> Result<_> {
            let coefs = &geo.patches[patch];
            let off = patch * nn;
            let mut trip = Vec::with_capacity(rules.len() * rules.len() * mm * mm);
            let mut load = vec![0.0; nn];
            let mut val = vec![0.0; mm];
            let mut lap = vec![0.0; mm];
            for ru in &rules {
                for rv in &rules {
                    let mut ke = vec![0.0; mm * mm];
                    let mut fe = vec![0.0; mm];
                    for pu in ru {
                        for pv in rv {
                            let (bu, bv) = (&pu.basis, &pv.basis);
                            let jet = jet_at(ts, coefs, bu, bv);
                            let met = metrics_at(&jet, patch)?;
                            let lc = laplace_coefficients(&jet, &met);
                            let w = pu.w * pv.w * met.area;
                            let f = problem.rhs(jet.d[0][0]);
                            for a in 0..m {
                                for b in 0..m {
                                    let i = a * m + b;
                                    val[i] = bu.ders[0][a] * bv.ders[0][b];
                                    lap[i] = lc.apply(
                                        [bu.ders[1][a] * bv.ders[0][b], bu.ders[0][a] * bv.ders[1][b]],
                                        [
                                            bu.ders[2][a] * bv.ders[0][b],
                                            bu.ders[1][a] * bv.ders[1][b],
                                            bu.ders[0][a] * bv.ders[2][b],
                                        ],
                                    );
                                }
                            }
                            for i in 0..mm {
                                fe[i] += w * f * val[i];
                                let (li, vi) = (w * lap[i], w * lambda * val[i]);
                                for j in 0..mm {
                                    ke[i * mm + j] += li * lap[j] + vi * val[j];
                                }
                            }
                        }
                    }
                    let (fu, fv) = (ru[0].basis.first, rv[0].basis.first);
                    let gidx = |i: usize| (fu + i / m) * n + fv + i % m;
                    for i in 0..mm {
                        load[gidx(i)] += fe[i];
                        for j in 0..mm {
                            trip.push((off + gidx(i), off + gidx(j), ke[i * mm + j]));
                        }
                    }
                }
            }
            Ok((trip, load))
        })
        .collect::<Result<_>>()?;
    let mut trip = Vec::new();
    let mut load = Vec::with_capacity(geo.patches.len() * nn);
    for (t, l) in per_patch {
        trip.extend(t);
        load.extend(l);
    }
    let total = geo.patches.len() * nn;
    Ok(Assembled {
        matrix: SparseMatrix::from_triplets(total, total, trip),
        load,
    })
}
