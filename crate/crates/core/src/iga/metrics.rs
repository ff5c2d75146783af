use crate::mpatch::{Jet, MultiPatchSpline, SurfaceSource};
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// First fundamental form of a patch at one parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceMetrics {
    pub g: [[f64; 2]; 2],
    pub g_inv: [[f64; 2]; 2],
    /// `|d1 F x d2 F|`
    pub area: f64,
    pub normal: Vec3,
}

impl SurfaceMetrics {
    pub fn from_jet(jet: &Jet) -> Option<Self> {
        let (f1, f2) = (jet.d[1][0], jet.d[0][1]);
        let g = [[vec3::dot(f1, f1), vec3::dot(f1, f2)], [vec3::dot(f1, f2), vec3::dot(f2, f2)]];
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let c = vec3::cross(f1, f2);
        let area = vec3::norm(c);
        if !(det > 1e-24 * (g[0][0] * g[1][1]).max(f64::MIN_POSITIVE)) || area == 0.0 {
            return None;
        }
        let g_inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
        Some(Self {
            g,
            g_inv,
            area,
            normal: vec3::scale(1.0 / area, c),
        })
    }

    /// `g^{ab} u_a u_b`, the squared length of the surface gradient.
    pub fn grad_sq(&self, u: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                s += self.g_inv[a][b] * u[a] * u[b];
            }
        }
        s
    }
}

pub fn surface_metrics(f: &MultiPatchSpline, patch: usize, xi: [f64; 2]) -> Result<SurfaceMetrics> {
    let jet = f.jet(patch, xi)?;
    SurfaceMetrics::from_jet(&jet).ok_or(Error::Regularity {
        patch,
        c1: (xi[0] >= 0.5) as u8,
        c2: (xi[1] >= 0.5) as u8,
    })
}

/// Weights of the Laplace-Beltrami operator of a pullback `psi`:
/// `Delta psi = second . (psi_11, psi_12, psi_22) + first . (psi_1, psi_2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceCoefficients {
    pub second: [f64; 3],
    pub first: [f64; 2],
}

impl LaplaceCoefficients {
    pub fn apply(&self, d: [f64; 2], dd: [f64; 3]) -> f64 {
        self.second[0] * dd[0]
            + self.second[1] * dd[1]
            + self.second[2] * dd[2]
            + self.first[0] * d[0]
            + self.first[1] * d[1]
    }
}

/// `Delta psi = g^{ab} (psi_ab - Gamma^c_ab psi_c)` with `Gamma^c_ab = g^{cd} <F_ab, F_d>`.
pub fn laplace_coefficients(jet: &Jet, m: &SurfaceMetrics) -> LaplaceCoefficients {
    let fd = [jet.d[1][0], jet.d[0][1]];
    let fab = |a: usize, b: usize| match (a, b) {
        (0, 0) => jet.d[2][0],
        (1, 1) => jet.d[0][2],
        _ => jet.d[1][1],
    };
    let gi = m.g_inv;
    let mut first = [0.0; 2];
    for a in 0..2 {
        for b in 0..2 {
            let fab = fab(a, b);
            for (c, fc) in first.iter_mut().enumerate() {
                let gamma: f64 = (0..2).map(|d| gi[c][d] * vec3::dot(fab, fd[d])).sum();
                *fc -= gi[a][b] * gamma;
            }
        }
    }
    LaplaceCoefficients {
        second: [gi[0][0], 2.0 * gi[0][1], gi[1][1]],
        first,
    }
}
