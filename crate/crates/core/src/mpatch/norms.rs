use serde::{Deserialize, Serialize};

use super::source::SurfaceSource;
use super::surface::MultiPatchSpline;
use crate::spline::SplineSpace1D;
use crate::vec3;
use crate::Result;

/// `sum_patches sum_{a+b<=1} sigma^{a+b} int ||d1^a d2^b (F - G)||^2` over the spans of
/// `mesh`, with `q` Gauss points per span. `G = None` gives the norm of `F`.
fn weighted_h1_sq(
    f: &dyn SurfaceSource,
    g: Option<&dyn SurfaceSource>,
    mesh: &SplineSpace1D,
    q: usize,
    sigma: f64,
) -> Result<(f64, f64)> {
    let quad = mesh.quadrature(q)?;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for patch in 0..f.num_patches() {
        for &(x, wx) in &quad {
            for &(y, wy) in &quad {
                let jf = f.jet(patch, [x, y])?;
                let w = wx * wy;
                let diff = |a: usize, b: usize| -> Result<f64> {
                    let v = match g {
                        Some(g) => vec3::sub(jf.d[a][b], g.jet(patch, [x, y])?.d[a][b]),
                        None => jf.d[a][b],
                    };
                    Ok(vec3::dot(v, v))
                };
                let v0 = diff(0, 0)?;
                l2 += w * v0;
                h1 += w * (v0 + sigma * (diff(1, 0)? + diff(0, 1)?));
            }
        }
    }
    Ok((l2, h1))
}

/// Squared weighted H1 norm of a source over the spans of `mesh`, `p + 1` points per span.
pub fn weighted_h1_norm_sq(s: &dyn SurfaceSource, mesh: &SplineSpace1D, sigma: f64) -> Result<f64> {
    Ok(weighted_h1_sq(s, None, mesh, mesh.degree() + 1, sigma)?.1)
}

/// Squared weighted H1 distance between two sources on the same topology.
pub fn weighted_h1_distance_sq(
    f: &dyn SurfaceSource,
    g: &dyn SurfaceSource,
    mesh: &SplineSpace1D,
    sigma: f64,
) -> Result<f64> {
    Ok(weighted_h1_sq(f, Some(g), mesh, mesh.degree() + 1, sigma)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeErrors {
    pub eps_l2: f64,
    pub eps_h1: f64,
}

/// Relative L2 and weighted-H1 errors of `f` against `s`.
pub fn relative_errors(f: &MultiPatchSpline, s: &dyn SurfaceSource, sigma: f64) -> Result<RelativeErrors> {
    let mesh = &f.space.space;
    let q = mesh.degree() + 1;
    let (dl2, dh1) = weighted_h1_sq(f, Some(s), mesh, q, sigma)?;
    let (nl2, nh1) = weighted_h1_sq(s, None, mesh, q, sigma)?;
    Ok(RelativeErrors {
        eps_l2: (dl2 / nl2).sqrt(),
        eps_h1: (dh1 / nh1).sqrt(),
    })
}
