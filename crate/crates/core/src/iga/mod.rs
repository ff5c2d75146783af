//! Galerkin solver for fourth-order problems on C1 isogeometric spaces.
//!
//! Two problems are supported: the biharmonic equation `Delta^2 u = f` with Dirichlet
//! data for value and normal derivative on open surfaces, and the reaction problem
//! `Delta^2 u + lambda_r u = f` on closed surfaces. `Delta` is the Laplace-Beltrami
//! operator of the AS-G1 surface.

mod assemble;
mod metrics;
mod norms;
mod problem;
mod solve;
mod sparse;
mod study;

pub use assemble::{assemble, Assembled, QUADRATURE_EXTRA};
pub use metrics::{laplace_coefficients, surface_metrics, LaplaceCoefficients, SurfaceMetrics};
pub use norms::{error_norms, estimators_h_h2, field_norms, Norms};
pub use problem::{
    manufactured_by_name, manufactured_names, AmbientJet, CosHalfProduct, Cos4Sin4,
    DirichletData, ExactDirichlet, ManufacturedSolution, ProblemKind, ProblemSpec, ZeroDirichlet,
    DEFAULT_LAMBDA,
};
pub use solve::{
    impose_dirichlet, solve, solve_reduced, DirichletLift, IgaSolution, SolveError, LINEAR_SOLVE_TOL,
};
pub use sparse::SparseMatrix;
pub use study::{convergence_study, ConvergenceLedger, LedgerRow, Measure, StudyOptions};
