//! Parametric surface patches, thickness profiles and quadrature.

mod patch;
mod quadrature;
mod thickness;

pub use patch::{
    make_builtin_patch, offset_jacobian, shape_operator_fd, PatchSpec, SurfacePatch, TangentFrame,
};
pub use quadrature::{integrate_surface, SurfaceNode, SurfaceQuadrature, TransversalRule};
pub use thickness::{ScalarProfile, ThicknessPair};

/// Default number of Gauss points per chart axis.
pub const DEFAULT_SURFACE_ORDER: usize = 8;
/// Default number of Gauss points through the thickness.
pub const DEFAULT_TRANSVERSAL_ORDER: usize = 4;
