//! Infinitesimal isometries, finite strains and the stretching/bending
//! tensors of the limit functional.

mod expansion;
mod isometry;
mod tensors;

pub use expansion::{
    bending_expansion_residual, midsurface_deficit_residual, stretching_expansion_residual,
};
pub use isometry::{build_isometry, IsometryField, StrainField, DEFAULT_ISOMETRY_TOL, FD_ISOMETRY_TOL};
pub use tensors::{bending_tensor, offset_gradient_term, stretching_tensor, thickness_gradient_matrix};
