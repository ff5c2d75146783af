//! Multi-patch surfaces: topology, local edge frames, surface sources and norms.

mod frame;
mod norms;
mod source;
mod surface;
mod topology;

pub use frame::{Corner, EdgeFrame, Side};
pub use norms::{relative_errors, weighted_h1_distance_sq, weighted_h1_norm_sq, RelativeErrors};
pub use source::{
    analytic_names, analytic_source, fd_jet, infer_interfaces, CubeSphere, Jet, SurfaceSource,
};
pub use surface::MultiPatchSpline;
pub use topology::{BoundaryCurve, CurveRef, Interface, Topology, Vertex, VertexKind};
