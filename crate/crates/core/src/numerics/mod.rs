//! Quadrature and constrained least-squares kernels.

mod quadrature;
mod saddle;

pub use quadrature::{gauss_legendre, QuadratureRule};
pub use saddle::{
    lsq_min_norm, nullspace, orthonormal_columns, pseudo_solve_symmetric, solve_saddle,
    solve_spd, QuadraticProgram, SaddleSolution, RANK_TOL,
};
