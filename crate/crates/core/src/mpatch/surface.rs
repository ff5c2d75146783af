use super::frame::{EdgeFrame, Side};
use super::source::{Jet, SurfaceSource};
use super::topology::{BoundaryCurve, Interface, Topology};
use crate::spline::{prolong_points, SpaceParams, SplineSpace1D, TensorSpace};
use crate::vec3::{self, Vec3};
use crate::{Error, Result};

/// Edge control points of glued sides must agree within this tolerance, relative to the
/// bounding-box diagonal.
pub const CONFORMITY_TOL: f64 = 1e-9;

/// Multi-patch tensor spline surface in R^3 over a common space.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPatchSpline {
    pub space: TensorSpace,
    /// Control points per patch, index `j1 * n + j2`.
    pub patches: Vec<Vec<Vec3>>,
    pub topology: Topology,
}

impl MultiPatchSpline {
    /// Checks conformity, snaps glued edges to bitwise equality and derives vertices.
    pub fn canonicalize(
        space: SplineSpace1D,
        patches: Vec<Vec<Vec3>>,
        interfaces: Vec<Interface>,
        boundaries: Option<Vec<BoundaryCurve>>,
    ) -> Result<Self> {
        let space = TensorSpace::new(space);
        let n = space.n();
        for (i, p) in patches.iter().enumerate() {
            if p.len() != n * n {
                return Err(Error::Parse(format!(
                    "patch {i} has {} control points, expected {}",
                    p.len(),
                    n * n
                )));
            }
        }
        let topology = Topology::new(patches.len(), interfaces, boundaries)?;
        let mut out = MultiPatchSpline {
            space,
            patches,
            topology,
        };
        let scale = out.bbox_diagonal().max(1.0);
        for iface in out.topology.interfaces.clone() {
            let [a, b] = iface.sides;
            let mut gap: f64 = 0.0;
            for t in 0..n {
                let pa = out.patches[a.patch][a.flat(0, t, n)];
                let pb = out.patches[b.patch][b.flat(0, t, n)];
                gap = gap.max(vec3::dist(pa, pb));
            }
            if gap > CONFORMITY_TOL * scale {
                return Err(Error::Conformity {
                    interface: iface.id,
                    gap,
                });
            }
            for t in 0..n {
                let pa = out.patches[a.patch][a.flat(0, t, n)];
                let idx = b.flat(0, t, n);
                out.patches[b.patch][idx] = pa;
            }
        }
        out.check_regular()?;
        let planar = out.is_planar();
        let this = out.clone();
        out.topology.orient_ccw(
            |c| {
                let j = this.jet(c.patch, c.param()).expect("corner inside domain");
                (j.d[1][0], j.d[0][1])
            },
            planar.then_some([0.0, 0.0, 1.0]),
        );
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn params(&self) -> SpaceParams {
        self.space.space.params()
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in self.patches.iter().flatten() {
            for c in 0..3 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        if lo[0].is_finite() {
            vec3::dist(lo, hi)
        } else {
            0.0
        }
    }

    pub fn is_planar(&self) -> bool {
        self.patches.iter().flatten().all(|p| p[2] == 0.0)
    }

    /// Rejects corners where the first derivatives are parallel.
    pub fn check_regular(&self) -> Result<()> {
        for patch in 0..self.patches.len() {
            for c2 in 0..2u8 {
                for c1 in 0..2u8 {
                    let j = self.jet(patch, [c1 as f64, c2 as f64])?;
                    let (a, b) = (j.d[1][0], j.d[0][1]);
                    let area = vec3::norm(vec3::cross(a, b));
                    if !(area > 1e-12 * vec3::norm(a) * vec3::norm(b)) {
                        return Err(Error::Regularity { patch, c1, c2 });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, patch: usize, xi: [f64; 2], a: usize, b: usize) -> Result<Vec3> {
        self.space.eval_patch(&self.patches[patch], xi, a, b)
    }

    /// Same surface represented on `levels` dyadic refinements of the knot vector.
    pub fn refine(&self, levels: u32) -> Result<Self> {
        let fine = self.space.space.refine_dyadic(levels);
        self.represent_in(fine)
    }

    /// Same surface in a nested space.
    pub fn represent_in(&self, fine: SplineSpace1D) -> Result<Self> {
        let patches = self
            .patches
            .iter()
            .map(|c| prolong_points(&self.space, &fine, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiPatchSpline {
            space: TensorSpace::new(fine),
            patches,
            topology: self.topology.clone(),
        })
    }

    /// Edge frame of a boundary curve or interface side, for convenience in tests.
    pub fn side_frame(&self, patch: usize, side: Side) -> EdgeFrame {
        EdgeFrame::new(patch, side, false)
    }
}

impl SurfaceSource for MultiPatchSpline {
    fn name(&self) -> String {
        let p = self.params();
        format!("spline S^({},{})_{}", p.p, p.r, p.k)
    }

    fn topology(&self) -> &Topology {
        &self.topology
    }

    fn jet(&self, patch: usize, xi: [f64; 2]) -> Result<Jet> {
        let s = &self.space.space;
        let bu = s.eval_basis(xi[0], 2)?;
        let bv = s.eval_basis(xi[1], 2)?;
        let coefs = &self.patches[patch];
        let mut jet = Jet::default();
        for a in 0..3 {
            for b in 0..3 - a {
                jet.d[a][b] = self.space.combine(coefs, &bu, &bv, a, b);
            }
        }
        Ok(jet)
    }

    fn spline_params(&self) -> Option<SpaceParams> {
        Some(self.params())
    }
}
