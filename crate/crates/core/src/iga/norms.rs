use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assemble::{jet_at, metrics_at, scalar_at, span_rules};
use super::metrics::laplace_coefficients;
use super::problem::ManufacturedSolution;
use crate::mpatch::MultiPatchSpline;
use crate::vec3;
use crate::{Error, Result};

/// `(L2, H1-seminorm, ||Delta .||_L2)` of a field on the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
}

impl Norms {
    pub fn as_array(&self) -> [f64; 3] {
        [self.l2, self.h1, self.h2]
    }
}

type Reference<'a> = Option<&'a dyn ManufacturedSolution>;

/// Norms of `u_ex - u_h` (or of `u_h` alone without a reference).
fn integrate(geo: &MultiPatchSpline, coefs: &[f64], reference: Reference<'_>) -> Result<Norms> {
    let ts = &geo.space;
    let n = ts.n();
    let nn = n * n;
    if coefs.len() != geo.patches.len() * nn {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients for {} patches of {nn}",
            coefs.len(),
            geo.patches.len()
        )));
    }
    let rules = span_rules(&ts.space)?;
    let sums: Vec<[f64; 3]> = (0..geo.patches.len())
        .into_par_iter()
        .map(|patch| -> Result<[f64; 3]> {
            let c = &coefs[patch * nn..(patch + 1) * nn];
            let mut acc = [0.0; 3];
            for pu in rules.iter().flatten() {
                for pv in rules.iter().flatten() {
                    let jet = jet_at(ts, &geo.patches[patch], &pu.basis, &pv.basis);
                    let met = metrics_at(&jet, patch)?;
                    let lc = laplace_coefficients(&jet, &met);
                    let (mut v, mut d, mut dd) = scalar_at(n, c, &pu.basis, &pv.basis);
                    v = -v;
                    d = [-d[0], -d[1]];
                    dd = [-dd[0], -dd[1], -dd[2]];
                    if let Some(r) = reference {
                        let x = jet.d[0][0];
                        let e = r.exact(x).ok_or_else(|| {
                            Error::ProblemMismatch(format!("{} has no exact solution", r.name()))
                        })?;
                        let fa = [jet.d[1][0], jet.d[0][1]];
                        let fab = [jet.d[2][0], jet.d[1][1], jet.d[0][2]];
                        let pairs = [(0, 0), (0, 1), (1, 1)];
                        v += e.value;
                        for a in 0..2 {
                            d[a] += vec3::dot(e.grad, fa[a]);
                        }
                        for (k, &(a, b)) in pairs.iter().enumerate() {
                            let hb = [0, 1, 2].map(|i| vec3::dot(e.hess[i], fa[b]));
                            dd[k] += vec3::dot(fa[a], hb) + vec3::dot(e.grad, fab[k]);
                        }
                    }
                    let w = pu.w * pv.w * met.area;
                    acc[0] += w * v * v;
                    acc[1] += w * met.grad_sq(d);
                    acc[2] += w * lc.apply(d, dd).powi(2);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let t = sums
        .iter()
        .fold([0.0; 3], |s, a| [s[0] + a[0], s[1] + a[1], s[2] + a[2]]);
    Ok(Norms {
        l2: t[0].sqrt(),
        h1: t[1].sqrt(),
        h2: t[2].sqrt(),
    })
}

/// Errors `u_ex - u_h` of full patch coefficients `coefs` on `geo`.
pub fn error_norms(geo: &MultiPatchSpline, coefs: &[f64], exact: &dyn ManufacturedSolution) -> Result<Norms> {
    integrate(geo, coefs, Some(exact))
}

pub fn field_norms(geo: &MultiPatchSpline, coefs: &[f64]) -> Result<Norms> {
    integrate(geo, coefs, None)
}

/// Norms of `u_{h/2} - u_h` with the coarse solution prolonged to the fine patches.
pub fn estimators_h_h2(
    coarse: &MultiPatchSpline,
    u_h: &[f64],
    fine: &MultiPatchSpline,
    u_h2: &[f64],
) -> Result<Norms> {
    if !coarse.space.space.is_nested_in(&fine.space.space) {
        return Err(Error::InvalidArgument("estimator levels are not nested".into()));
    }
    let p = coarse.space.space.prolongation(&fine.space.space)?;
    let nc = coarse.n() * coarse.n();
    let mut diff: Vec<f64> = u_h
        .chunks(nc)
        .flat_map(|c| coarse.space.prolong_coefs(&p, c))
        .collect();
    if diff.len() != u_h2.len() {
        return Err(Error::InvalidArgument("estimator levels differ in patches".into()));
    }
    for (d, f) in diff.iter_mut().zip(u_h2) {
        *d = f - *d;
    }
    field_norms(fine, &diff)
}
