//! Linear gluing data `alpha^(l)`, `beta^(l)` per interface, estimated from corner
//! derivatives of the input surface.
//!
//! In the local frame of each interface side (`d` transversal, `t` along the curve) the
//! AS-G1 identity reads `alpha_1 d_d F_2 + alpha_2 d_d F_1 + beta d_t F_1 = 0` with
//! `beta = alpha_1 beta_2 + alpha_2 beta_1`.

use serde::{Deserialize, Serialize};

use crate::mpatch::{EdgeFrame, Interface, SurfaceSource};
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// Linear function on [0, 1] given by its end values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFn {
    pub at0: f64,
    pub at1: f64,
}

impl LinearFn {
    pub const ONE: LinearFn = LinearFn { at0: 1.0, at1: 1.0 };
    pub const ZERO: LinearFn = LinearFn { at0: 0.0, at1: 0.0 };

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.at0 + (self.at1 - self.at0) * t
    }

    #[inline]
    pub fn slope(&self) -> f64 {
        self.at1 - self.at0
    }

    pub fn scaled(&self, s: f64) -> LinearFn {
        LinearFn {
            at0: s * self.at0,
            at1: s * self.at1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GluingData {
    pub interface: usize,
    pub alpha: [LinearFn; 2],
    pub beta: [LinearFn; 2],
}

impl GluingData {
    /// Gluing data of a boundary curve.
    pub const BOUNDARY: GluingData = GluingData {
        interface: usize::MAX,
        alpha: [LinearFn::ONE, LinearFn::ONE],
        beta: [LinearFn::ZERO, LinearFn::ZERO],
    };

    /// `beta = alpha_1 beta_2 + alpha_2 beta_1` (quadratic).
    pub fn beta_composite(&self, t: f64) -> f64 {
        self.alpha[0].eval(t) * self.beta[1].eval(t) + self.alpha[1].eval(t) * self.beta[0].eval(t)
    }

    /// Pointwise G1 residual vector `alpha_1 d_d F_2 + alpha_2 d_d F_1 + beta d_t F_1`,
    /// given local first derivatives of both sides.
    pub fn g1_residual(&self, t: f64, dd1: Vec3, dt1: Vec3, dd2: Vec3) -> Vec3 {
        let mut r = vec3::scale(self.alpha[0].eval(t), dd2);
        vec3::axpy(&mut r, self.alpha[1].eval(t), dd1);
        vec3::axpy(&mut r, self.beta_composite(t), dt1);
        r
    }

    /// Same data with the sign of every `beta` flipped.
    pub fn with_flipped_beta(&self) -> GluingData {
        GluingData {
            beta: [self.beta[0].scaled(-1.0), self.beta[1].scaled(-1.0)],
            ..*self
        }
    }
}

/// Strategy for estimating gluing data of one interface.
pub trait GluingEstimator: Send + Sync {
    fn name(&self) -> &'static str;

    fn estimate(&self, source: &dyn SurfaceSource, iface: &Interface) -> Result<GluingData>;
}

/// Cross-product norms and tangential projections of corner derivatives; works for any
/// regular surface in R^3.
#[derive(Debug, Clone, Copy, Default)]
pub struct SurfaceEstimator;

/// Signed 2x2 determinants of planar corner derivatives; a validation oracle for planar
/// inputs.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanarDeterminantEstimator;

fn corner_derivatives(
    source: &dyn SurfaceSource,
    frame: &EdgeFrame,
    end: usize,
) -> Result<(Vec3, Vec3)> {
    let jet = source.jet(frame.patch, frame.param(0.0, end as f64))?;
    let local = frame.local_jet(&jet);
    Ok((local.d[1][0], local.d[0][1]))
}

fn regularity_error(frame: &EdgeFrame, end: usize) -> Error {
    let c = frame.corner(end);
    Error::Regularity {
        patch: c.patch,
        c1: c.c[0],
        c2: c.c[1],
    }
}

/// `-(D . T) / |T|^2`: removes the tangential component of the transversal derivative.
fn beta_from(d: Vec3, t: Vec3) -> f64 {
    -vec3::dot(d, t) / vec3::dot(t, t)
}

impl GluingEstimator for SurfaceEstimator {
    fn name(&self) -> &'static str {
        "surface"
    }

    fn estimate(&self, source: &dyn SurfaceSource, iface: &Interface) -> Result<GluingData> {
        let mut alpha = [[0.0; 2]; 2];
        let mut beta = [[0.0; 2]; 2];
        for (s, frame) in iface.sides.iter().enumerate() {
            for end in 0..2 {
                let (d, t) = corner_derivatives(source, frame, end)?;
                let a = vec3::norm(vec3::cross(d, t));
                if !(a > 1e-12 * vec3::norm(d) * vec3::norm(t)) {
                    return Err(regularity_error(frame, end));
                }
                alpha[s][end] = a;
                beta[s][end] = beta_from(d, t);
            }
        }
        Ok(assemble(iface.id, alpha, beta))
    }
}

impl GluingEstimator for PlanarDeterminantEstimator {
    fn name(&self) -> &'static str {
        "planar-determinant"
    }

    fn estimate(&self, source: &dyn SurfaceSource, iface: &Interface) -> Result<GluingData> {
        let mut alpha = [[0.0; 2]; 2];
        let mut beta = [[0.0; 2]; 2];
        for (s, frame) in iface.sides.iter().enumerate() {
            for end in 0..2 {
                let (d, t) = corner_derivatives(source, frame, end)?;
                if d[2] != 0.0 || t[2] != 0.0 {
                    return Err(Error::InvalidArgument(
                        "determinant gluing needs a planar surface".into(),
                    ));
                }
                // orientation det[d_1', d_2'] of the side in its own parameters
                let det = d[0] * t[1] - d[1] * t[0];
                alpha[s][end] = if s == 0 { det } else { -det };
                if alpha[s][end] == 0.0 {
                    return Err(regularity_error(frame, end));
                }
                beta[s][end] = beta_from(d, t);
            }
        }
        // the local frames fix orientation only up to a common sign
        if alpha[0][0] < 0.0 {
            for a in alpha.iter_mut().flatten() {
                *a = -*a;
            }
        }
        let data = assemble(iface.id, alpha, beta);
        let prod = data.alpha[0].at0 * data.alpha[1].at0;
        if !(prod > 0.0 && data.alpha[0].at1 * data.alpha[1].at1 > 0.0) {
            return Err(Error::GluingDegenerate {
                interface: iface.id,
            });
        }
        Ok(data)
    }
}

fn assemble(id: usize, a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> GluingData {
    let lf = |v: [f64; 2]| LinearFn { at0: v[0], at1: v[1] };
    GluingData {
        interface: id,
        alpha: [lf(a[0]), lf(a[1])],
        beta: [lf(b[0]), lf(b[1])],
    }
}

/// Names accepted by [`estimator_by_name`].
pub fn estimator_names() -> &'static [&'static str] {
    &["surface", "planar-determinant"]
}

pub fn estimator_by_name(name: &str) -> Result<Box<dyn GluingEstimator>> {
    match name {
        "surface" => Ok(Box::new(SurfaceEstimator)),
        "planar-determinant" => Ok(Box::new(PlanarDeterminantEstimator)),
        _ => Err(Error::UnknownName {
            kind: "gluing estimator",
            name: name.into(),
        }),
    }
}

/// Gluing data for every interface, in interface order.
pub fn estimate_all(estimator: &dyn GluingEstimator, source: &dyn SurfaceSource) -> Result<Vec<GluingData>> {
    source
        .topology()
        .interfaces
        .iter()
        .map(|iface| estimator.estimate(source, iface))
        .collect()
}
