use std::sync::Arc;

use crate::vec3::Vec3;
use crate::{Error, Result};

/// Reaction coefficient used when none is given.
pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Value, ambient gradient and ambient Hessian of a function on R^3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientJet {
    pub value: f64,
    pub grad: Vec3,
    pub hess: [[f64; 3]; 3],
}

/// A source term with, optionally, the exact solution it was manufactured from.
pub trait ManufacturedSolution: Send + Sync {
    fn name(&self) -> &'static str;
    /// `Delta^2 u` (without any reaction term).
    fn source(&self, x: Vec3) -> f64;
    fn exact(&self, x: Vec3) -> Option<AmbientJet>;
    /// True if `source` equals `Delta^2 u` only on planes `x3 = const`.
    fn planar_only(&self) -> bool;
}

/// `u = cos(4 x1) sin(4 x2)`, so `Delta u = -32 u` and `Delta^2 u = 1024 u` in the plane.
pub struct Cos4Sin4;

impl ManufacturedSolution for Cos4Sin4 {
    fn name(&self) -> &'static str {
        "cos4sin4"
    }

    fn source(&self, x: Vec3) -> f64 {
        1024.0 * (4.0 * x[0]).cos() * (4.0 * x[1]).sin()
    }

    fn exact(&self, x: Vec3) -> Option<AmbientJet> {
        let (c, s) = ((4.0 * x[0]).cos(), (4.0 * x[1]).sin());
        let (sx, cy) = ((4.0 * x[0]).sin(), (4.0 * x[1]).cos());
        let u = c * s;
        Some(AmbientJet {
            value: u,
            grad: [-4.0 * sx * s, 4.0 * c * cy, 0.0],
            hess: [
                [-16.0 * u, -16.0 * sx * cy, 0.0],
                [-16.0 * sx * cy, -16.0 * u, 0.0],
                [0.0; 3],
            ],
        })
    }

    fn planar_only(&self) -> bool {
        true
    }
}

/// Source `f = cos(x1/2) cos(x2/2) cos(x3/2)` without a known solution.
pub struct CosHalfProduct;

impl ManufacturedSolution for CosHalfProduct {
    fn name(&self) -> &'static str {
        "cos-half-product"
    }

    fn source(&self, x: Vec3) -> f64 {
        (0.5 * x[0]).cos() * (0.5 * x[1]).cos() * (0.5 * x[2]).cos()
    }

    fn exact(&self, _: Vec3) -> Option<AmbientJet> {
        None
    }

    fn planar_only(&self) -> bool {
        false
    }
}

pub fn manufactured_names() -> &'static [&'static str] {
    &["cos4sin4", "cos-half-product"]
}

pub fn manufactured_by_name(name: &str) -> Result<Arc<dyn ManufacturedSolution>> {
    match name {
        "cos4sin4" => Ok(Arc::new(Cos4Sin4)),
        "cos-half-product" => Ok(Arc::new(CosHalfProduct)),
        _ => Err(Error::UnknownName {
            kind: "manufactured solution",
            name: name.into(),
        }),
    }
}

/// Boundary data: `g1` is the value (with its ambient gradient, of which only the
/// tangential part is used), `g2` the derivative along the unit conormal.
pub trait DirichletData: Send + Sync {
    fn g1(&self, x: Vec3) -> (f64, Vec3);
    fn g2(&self, x: Vec3, conormal: Vec3) -> f64;
}

pub struct ZeroDirichlet;

impl DirichletData for ZeroDirichlet {
    fn g1(&self, _: Vec3) -> (f64, Vec3) {
        (0.0, [0.0; 3])
    }

    fn g2(&self, _: Vec3, _: Vec3) -> f64 {
        0.0
    }
}

/// Dirichlet data taken from an exact solution.
pub struct ExactDirichlet(pub Arc<dyn ManufacturedSolution>);

impl DirichletData for ExactDirichlet {
    fn g1(&self, x: Vec3) -> (f64, Vec3) {
        let j = self.0.exact(x).expect("checked by ProblemSpec");
        (j.value, j.grad)
    }

    fn g2(&self, x: Vec3, conormal: Vec3) -> f64 {
        let j = self.0.exact(x).expect("checked by ProblemSpec");
        crate::vec3::dot(j.grad, conormal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    Dirichlet,
    Reaction { lambda: f64 },
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub solution: Arc<dyn ManufacturedSolution>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("kind", &self.kind)
            .field("solution", &self.solution.name())
            .finish()
    }
}

impl ProblemSpec {
    pub fn dirichlet(solution: Arc<dyn ManufacturedSolution>) -> Result<Self> {
        if solution.exact([0.0; 3]).is_none() {
            return Err(Error::ProblemMismatch(format!(
                "{} has no exact solution to take Dirichlet data from",
                solution.name()
            )));
        }
        Ok(Self {
            kind: ProblemKind::Dirichlet,
            solution,
        })
    }

    pub fn reaction(solution: Arc<dyn ManufacturedSolution>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "reaction coefficient must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            kind: ProblemKind::Reaction { lambda },
            solution,
        })
    }

    /// Right-hand side `f`, including the reaction term of an exact solution.
    pub fn rhs(&self, x: Vec3) -> f64 {
        let f = self.solution.source(x);
        match self.kind {
            ProblemKind::Dirichlet => f,
            ProblemKind::Reaction { lambda } => {
                f + self.solution.exact(x).map_or(0.0, |j| lambda * j.value)
            }
        }
    }

    /// Rejects problem/geometry combinations outside the problem's assumptions.
    pub fn check_geometry(&self, closed: bool, planar: bool) -> Result<()> {
        match self.kind {
            ProblemKind::Dirichlet if closed => Err(Error::ProblemMismatch(
                "Dirichlet problem needs a surface with boundary".into(),
            )),
            ProblemKind::Reaction { .. } if !closed => Err(Error::ProblemMismatch(
                "reaction problem needs a closed surface".into(),
            )),
            _ if self.solution.planar_only() && !planar => Err(Error::ProblemMismatch(format!(
                "{} is manufactured for planar domains only",
                self.solution.name()
            ))),
            _ => Ok(()),
        }
    }
}
