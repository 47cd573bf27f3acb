use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::{SurfacePatch, SurfaceQuadrature};
use crate::error::{Error, Result};
use crate::Param;

/// Closed-form scalar field on the parameter rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarProfile {
    Constant {
        value: f64,
    },
    /// `c0 + c1 u₁ + c2 u₂`
    Affine { c0: f64, c1: f64, c2: f64 },
    /// `mean + amplitude · sin(k₁π u₁ + p₁) · sin(k₂π u₂ + p₂)`
    Trig {
        mean: f64,
        amplitude: f64,
        k: [f64; 2],
        #[serde(default)]
        phase: [f64; 2],
    },
}

impl ScalarProfile {
    pub fn constant(value: f64) -> Self {
        ScalarProfile::Constant { value }
    }

    pub fn value(&self, u: Param) -> f64 {
        match *self {
            ScalarProfile::Constant { value } => value,
            ScalarProfile::Affine { c0, c1, c2 } => c0 + c1 * u.x + c2 * u.y,
            ScalarProfile::Trig {
                mean,
                amplitude,
                k,
                phase,
            } => mean + amplitude * (k[0] * PI * u.x + phase[0]).sin() * (k[1] * PI * u.y + phase[1]).sin(),
        }
    }

    pub fn partials(&self, u: Param) -> Vector2<f64> {
        match *self {
            ScalarProfile::Constant { .. } => Vector2::zeros(),
            ScalarProfile::Affine { c1, c2, .. } => Vector2::new(c1, c2),
            ScalarProfile::Trig {
                amplitude, k, phase, ..
            } => {
                let a0 = k[0] * PI * u.x + phase[0];
                let a1 = k[1] * PI * u.y + phase[1];
                Vector2::new(
                    amplitude * k[0] * PI * a0.cos() * a1.sin(),
                    amplitude * k[1] * PI * a0.sin() * a1.cos(),
                )
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            ScalarProfile::Constant { .. } => true,
            ScalarProfile::Affine { c1, c2, .. } => c1 == 0.0 && c2 == 0.0,
            ScalarProfile::Trig { amplitude, .. } => amplitude == 0.0,
        }
    }
}

/// Lower and upper thickness profiles: the shell occupies
/// `−h g₁(x) < t < h g₂(x)` along the normal.
#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessPair {
    pub g1: ScalarProfile,
    pub g2: ScalarProfile,
    pub lipschitz_bound: f64,
}

impl ThicknessPair {
    pub fn new(g1: ScalarProfile, g2: ScalarProfile, lipschitz_bound: f64) -> Self {
        ThicknessPair {
            g1,
            g2,
            lipschitz_bound,
        }
    }

    /// Constant profiles `g₁ = g₂ = half`.
    pub fn symmetric(half: f64) -> Self {
        Self::new(
            ScalarProfile::constant(half),
            ScalarProfile::constant(half),
            1.0,
        )
    }

    pub fn g1(&self, u: Param) -> f64 {
        self.g1.value(u)
    }

    pub fn g2(&self, u: Param) -> f64 {
        self.g2.value(u)
    }

    /// Total relative thickness `g₁ + g₂`.
    pub fn total(&self, u: Param) -> f64 {
        self.g1(u) + self.g2(u)
    }

    /// Offset profile `g₂ − g₁`.
    pub fn offset(&self, u: Param) -> f64 {
        self.g2(u) - self.g1(u)
    }

    pub fn offset_partials(&self, u: Param) -> Vector2<f64> {
        self.g2.partials(u) - self.g1.partials(u)
    }

    /// Whether `g₂ − g₁` vanishes identically.
    pub fn is_centered(&self) -> bool {
        self.g1 == self.g2
    }

    /// Surface gradient of `g₂ − g₁` as an ambient tangent vector.
    pub fn offset_gradient(&self, patch: &SurfacePatch, u: Param) -> Vector3<f64> {
        patch.dual_basis(u) * self.offset_partials(u)
    }

    /// Checks positivity and the Lipschitz bound at every quadrature node.
    pub fn check(&self, patch: &SurfacePatch, quad: &SurfaceQuadrature) -> Result<()> {
        for (name, g) in [("thickness.g1", &self.g1), ("thickness.g2", &self.g2)] {
            for node in &quad.nodes {
                let v = g.value(node.u);
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::validation(
                        name,
                        format!("must be positive, got {v} at u = {:?}", [node.u.x, node.u.y]),
                    ));
                }
                let grad = (patch.dual_basis(node.u) * g.partials(node.u)).norm();
                if grad > self.lipschitz_bound {
                    return Err(Error::validation(
                        name,
                        format!(
                            "surface gradient {grad} exceeds lipschitz_bound {}",
                            self.lipschitz_bound
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}
