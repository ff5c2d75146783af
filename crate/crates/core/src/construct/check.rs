//! Sampled AS-G1 diagnostics of a spline surface with given gluing data.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::gluing::GluingData;
use crate::mpatch::{EdgeFrame, MultiPatchSpline, SurfaceSource};
use crate::numerics::lsq_min_norm;
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCheck {
    pub interface: usize,
    /// Max normalised `||alpha_1 d F_2 + alpha_2 d F_1 + beta d_t F_1||`.
    pub g1_residual: f64,
    /// Max normalised distance between the two traces.
    pub c0_residual: f64,
    pub alpha_min: f64,
    /// Normalised distance of the trace from `S^{p,r+1}`.
    pub trace_residual: f64,
    /// Normalised collocation residual of a common transversal function in `S^{p-1,r}`.
    pub transversal_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub samples: usize,
    pub interfaces: Vec<InterfaceCheck>,
}

impl CheckReport {
    pub fn max_g1(&self) -> f64 {
        self.interfaces.iter().map(|c| c.g1_residual).fold(0.0, f64::max)
    }

    pub fn max_c0(&self) -> f64 {
        self.interfaces.iter().map(|c| c.c0_residual).fold(0.0, f64::max)
    }

    pub fn min_alpha(&self) -> f64 {
        self.interfaces
            .iter()
            .map(|c| c.alpha_min)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_membership(&self) -> f64 {
        self.interfaces
            .iter()
            .map(|c| c.trace_residual.max(c.transversal_residual))
            .fold(0.0, f64::max)
    }

    /// Largest of the G1, C0 and membership residuals.
    pub fn max_residual(&self) -> f64 {
        self.max_g1().max(self.max_c0()).max(self.max_membership())
    }

    /// Interface with the largest residual.
    pub fn worst(&self) -> Option<&InterfaceCheck> {
        self.interfaces.iter().max_by(|a, b| {
            let ra = a.g1_residual.max(a.c0_residual).max(a.trace_residual).max(a.transversal_residual);
            let rb = b.g1_residual.max(b.c0_residual).max(b.trace_residual).max(b.transversal_residual);
            ra.total_cmp(&rb)
        })
    }
}

fn local(f: &MultiPatchSpline, frame: &EdgeFrame, t: f64) -> Result<crate::mpatch::Jet> {
    Ok(frame.local_jet(&f.jet(frame.patch, frame.param(0.0, t))?))
}

/// Samples every interface of `f` at `samples` equispaced parameters.
pub fn check_asg1(f: &MultiPatchSpline, gluing: &[GluingData], samples: usize) -> Result<CheckReport> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if gluing.len() != f.topology.interfaces.len() {
        return Err(Error::InvalidArgument(format!(
            "{} gluing entries for {} interfaces",
            gluing.len(),
            f.topology.interfaces.len()
        )));
    }
    let space = &f.space.space;
    let (trace, transversal) = space.companion_spaces()?;
    let zeta = space.greville();
    let c_trace = trace.collocation(&zeta, 0)?;
    let mut out = Vec::new();
    for (iface, g) in f.topology.interfaces.iter().zip(gluing) {
        let [f1, f2] = iface.sides;
        let mut scale: f64 = 0.0;
        for end in [0.0, 1.0] {
            for fr in [&f1, &f2] {
                let j = local(f, fr, end)?;
                scale = scale.max(vec3::norm(j.d[1][0])).max(vec3::norm(j.d[0][1]));
            }
        }
        let scale = scale.max(f64::MIN_POSITIVE);
        let mut g1: f64 = 0.0;
        let mut c0: f64 = 0.0;
        let mut amin = f64::INFINITY;
        for i in 0..samples {
            let t = i as f64 / (samples - 1) as f64;
            let j1 = local(f, &f1, t)?;
            let j2 = local(f, &f2, t)?;
            let r = g.g1_residual(t, j1.d[1][0], j1.d[0][1], j2.d[1][0]);
            g1 = g1.max(vec3::norm(r) / scale);
            c0 = c0.max(vec3::dist(j1.d[0][0], j2.d[0][0]) / scale);
            amin = amin.min(g.alpha[0].eval(t)).min(g.alpha[1].eval(t));
        }
        // trace membership: least-squares fit from S^{p,r+1} at the Greville points
        let vals: Vec<Vec3> = zeta
            .iter()
            .map(|&z| local(f, &f1, z).map(|j| j.d[0][0]))
            .collect::<Result<_>>()?;
        let rhs = Mat::from_fn(zeta.len(), 3, |i, k| vals[i][k]);
        let coef = lsq_min_norm(c_trace.as_ref(), rhs.as_ref())?;
        let res = &c_trace * &coef - &rhs;
        let trace_residual = max_row_norm(&res) / scale;
        // transversal membership: one f1 with alpha_1 f1 = N1 and alpha_2 f1 = -N2
        let m = zeta.len();
        let mut a = Mat::zeros(2 * m, transversal.dim());
        let mut b = Mat::zeros(2 * m, 3);
        for (i, &z) in zeta.iter().enumerate() {
            let j1 = local(f, &f1, z)?;
            let j2 = local(f, &f2, z)?;
            let bs = transversal.eval_basis_unchecked(z, 0);
            for k in bs.indices() {
                a[(i, k)] = g.alpha[0].eval(z) * bs.get(0, k);
                a[(m + i, k)] = g.alpha[1].eval(z) * bs.get(0, k);
            }
            let mut n1 = j1.d[1][0];
            vec3::axpy(&mut n1, g.beta[0].eval(z), j1.d[0][1]);
            let mut n2 = j2.d[1][0];
            vec3::axpy(&mut n2, g.beta[1].eval(z), j2.d[0][1]);
            for k in 0..3 {
                b[(i, k)] = n1[k];
                b[(m + i, k)] = -n2[k];
            }
        }
        let coef = lsq_min_norm(a.as_ref(), b.as_ref())?;
        let res = &a * &coef - &b;
        let transversal_residual = max_row_norm(&res) / scale;
        out.push(InterfaceCheck {
            interface: iface.id,
            g1_residual: g1,
            c0_residual: c0,
            alpha_min: amin,
            trace_residual,
            transversal_residual,
        });
    }
    Ok(CheckReport {
        samples,
        interfaces: out,
    })
}

fn max_row_norm(m: &Mat<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|k| m[(i, k)] * m[(i, k)]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}
