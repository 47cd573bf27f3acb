//! Dimensionally reduced (von Kármán type) energies for thin shells whose
//! thickness varies slowly along an arbitrary smooth mid-surface.
//!
//! The crate evaluates the two-dimensional limit functional, builds the
//! explicit three-dimensional recovery deformations whose rescaled elastic
//! energy attains it, and runs desk-scale convergence studies comparing the
//! two.
//!
//! Module map:
//!
//! * [`geometry`]: parametric patches, thickness profiles, quadrature.
//! * [`material`]: stored energies, the quadratic forms `Q3` and `Q2`.
//! * [`fields`] and [`kinematics`]: displacement fields, infinitesimal
//!   isometries, stretching and bending tensors, expansion residuals.
//! * [`limit2d`]: the limit functional, its bending-only simplification and
//!   the total functional with loads.
//! * [`recovery3d`]: recovery deformations and the shell energy.
//! * [`loads`]: dead loads, rotation-maximized actions, Procrustes.
//! * [`studies`]: configuration, study runner, order fits and reports.

pub mod diff;
pub mod error;
pub mod fields;
pub mod gauss;
pub mod geometry;
pub mod kinematics;
pub mod limit2d;
pub mod loads;
pub mod material;
pub mod recovery3d;
pub mod studies;

pub use error::{Error, Result};

/// Point of a chart's parameter rectangle.
pub type Param = nalgebra::Vector2<f64>;
