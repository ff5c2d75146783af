//! Analysis-suitable G1 (AS-G1) multi-patch spline surfaces.
//!
//! The crate turns a G1 multi-patch surface into an AS-G1 spline surface by a
//! staged constrained fit, builds the C1 isogeometric space on the result and
//! solves fourth-order surface problems on it.

pub mod bundled;
pub mod c1space;
pub mod construct;
pub mod error;
pub mod gluing;
pub mod iga;
pub mod io;
pub mod mpatch;
pub mod numerics;
pub mod spline;
pub mod vec3;

pub use error::{Error, Result};
