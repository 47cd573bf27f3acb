use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector3};
use serde::{Deserialize, Serialize};

use crate::diff;
use crate::error::{Error, Result};
use crate::Param;

/// Builtin patch description, addressable from study configs.
///
/// Parameter conventions:
/// * `plate`: `u = (x, y)` over `u1 × u2`, normal `+e3`.
/// * `sphere_cap`: `u = (θ, φ)` over `(0, polar_angle) × (0, 2π)`, outward normal.
/// * `cylinder`: `u = (φ, z)` over `(0, angle) × (0, height)`, outward normal.
/// * `torus_patch`: `u = (φ, v)` over `u1 × u2`, outward normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatchSpec {
    Plate {
        #[serde(default = "unit_interval")]
        u1: [f64; 2],
        #[serde(default = "unit_interval")]
        u2: [f64; 2],
    },
    SphereCap {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "half_pi")]
        polar_angle: f64,
    },
    Cylinder {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "one")]
        height: f64,
        #[serde(default = "two_pi")]
        angle: f64,
    },
    TorusPatch {
        major: f64,
        minor: f64,
        #[serde(default = "half_circle")]
        u1: [f64; 2],
        #[serde(default = "half_circle")]
        u2: [f64; 2],
    },
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}
fn one() -> f64 {
    1.0
}
fn half_pi() -> f64 {
    0.5 * PI
}
fn two_pi() -> f64 {
    2.0 * PI
}
fn half_circle() -> [f64; 2] {
    [0.0, PI]
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Plate,
    Sphere { radius: f64 },
    Cylinder { radius: f64 },
    Torus { major: f64, minor: f64 },
}

/// Orthonormal tangent frame `{e1, e2}` completed by the patch normal.
///
/// `e1` follows the first chart direction; `e2` is the Gram–Schmidt
/// completion of the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentFrame {
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    pub n: Vector3<f64>,
}

impl TangentFrame {
    /// The 3×2 matrix `[e1 e2]`.
    pub fn tangent_basis(&self) -> Matrix3x2<f64> {
        Matrix3x2::from_columns(&[self.e1, self.e2])
    }

    /// Tangential minor `Eᵀ M E` of an ambient matrix.
    pub fn minor(&self, m: &Matrix3<f64>) -> Matrix2<f64> {
        let e = self.tangent_basis();
        e.transpose() * m * e
    }

    /// Embeds a 2×2 frame matrix as the ambient tangential matrix `E F Eᵀ`.
    pub fn embed(&self, f: &Matrix2<f64>) -> Matrix3<f64> {
        let e = self.tangent_basis();
        e * f * e.transpose()
    }

    /// Tangential projector `Id − n ⊗ n`.
    pub fn projector(&self) -> Matrix3<f64> {
        Matrix3::identity() - self.n * self.n.transpose()
    }
}

/// A smooth surface given by a single chart over a parameter rectangle.
///
/// Chart, jacobian, normal and normal derivatives are analytic; the shape
/// operator `Π = ∇n` is assembled from them.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePatch {
    spec: PatchSpec,
    shape: Shape,
    lo: Param,
    hi: Param,
}

/// Builds a builtin patch after validating its parameters.
pub fn make_builtin_patch(spec: &PatchSpec) -> Result<SurfacePatch> {
    let positive = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::param(format!("{name} must be positive and finite, got {v}")))
        }
    };
    let interval = |name: &str, r: [f64; 2]| {
        if r[0].is_finite() && r[1].is_finite() && r[1] > r[0] {
            Ok(())
        } else {
            Err(Error::param(format!("{name} must be a nonempty interval, got {r:?}")))
        }
    };
    let (shape, lo, hi) = match *spec {
        PatchSpec::Plate { u1, u2 } => {
            interval("u1", u1)?;
            interval("u2", u2)?;
            (Shape::Plate, Param::new(u1[0], u2[0]), Param::new(u1[1], u2[1]))
        }
        PatchSpec::SphereCap {
            radius,
            polar_angle,
        } => {
            positive("radius", radius)?;
            if !(polar_angle > 0.0 && polar_angle <= PI) {
                return Err(Error::param(format!(
                    "polar_angle must lie in (0, π], got {polar_angle}"
                )));
            }
            (
                Shape::Sphere { radius },
                Param::new(0.0, 0.0),
                Param::new(polar_angle, 2.0 * PI),
            )
        }
        PatchSpec::Cylinder {
            radius,
            height,
            angle,
        } => {
            positive("radius", radius)?;
            positive("height", height)?;
            if !(angle > 0.0 && angle <= 2.0 * PI) {
                return Err(Error::param(format!("angle must lie in (0, 2π], got {angle}")));
            }
            (
                Shape::Cylinder { radius },
                Param::new(0.0, 0.0),
                Param::new(angle, height),
            )
        }
        PatchSpec::TorusPatch {
            major,
            minor,
            u1,
            u2,
        } => {
            positive("major", major)?;
            positive("minor", minor)?;
            if minor >= major {
                return Err(Error::param(format!(
                    "torus needs minor < major, got minor = {minor}, major = {major}"
                )));
            }
            interval("u1", u1)?;
            interval("u2", u2)?;
            (
                Shape::Torus { major, minor },
                Param::new(u1[0], u2[0]),
                Param::new(u1[1], u2[1]),
            )
        }
    };
    Ok(SurfacePatch {
        spec: spec.clone(),
        shape,
        lo,
        hi,
    })
}

impl SurfacePatch {
    pub fn plate(u1: [f64; 2], u2: [f64; 2]) -> Result<Self> {
        make_builtin_patch(&PatchSpec::Plate { u1, u2 })
    }

    pub fn sphere_cap(radius: f64, polar_angle: f64) -> Result<Self> {
        make_builtin_patch(&PatchSpec::SphereCap {
            radius,
            polar_angle,
        })
    }

    pub fn cylinder(radius: f64, height: f64, angle: f64) -> Result<Self> {
        make_builtin_patch(&PatchSpec::Cylinder {
            radius,
            height,
            angle,
        })
    }

    pub fn torus_patch(major: f64, minor: f64, u1: [f64; 2], u2: [f64; 2]) -> Result<Self> {
        make_builtin_patch(&PatchSpec::TorusPatch {
            major,
            minor,
            u1,
            u2,
        })
    }

    pub fn spec(&self) -> &PatchSpec {
        &self.spec
    }

    /// Lower and upper corners of the parameter rectangle.
    pub fn domain(&self) -> (Param, Param) {
        (self.lo, self.hi)
    }

    /// Shorter side of the parameter rectangle.
    pub fn parameter_scale(&self) -> f64 {
        let d = self.hi - self.lo;
        d.x.min(d.y)
    }

    /// Diagonal length of the parameter rectangle.
    pub fn chart_diameter(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    /// Step used by fourth-order differences of fields on this patch.
    pub fn fd_step(&self) -> f64 {
        1e-3 * self.parameter_scale()
    }

    /// Whether `u` lies in the rectangle shrunk by `margin`.
    pub fn contains(&self, u: Param, margin: f64) -> bool {
        u.x - margin >= self.lo.x
            && u.x + margin <= self.hi.x
            && u.y - margin >= self.lo.y
            && u.y + margin <= self.hi.y
    }

    pub fn chart(&self, u: Param) -> Vector3<f64> {
        match self.shape {
            Shape::Plate => Vector3::new(u.x, u.y, 0.0),
            Shape::Sphere { radius } => {
                let (st, ct) = u.x.sin_cos();
                let (sp, cp) = u.y.sin_cos();
                radius * Vector3::new(st * cp, st * sp, ct)
            }
            Shape::Cylinder { radius } => {
                let (sp, cp) = u.x.sin_cos();
                Vector3::new(radius * cp, radius * sp, u.y)
            }
            Shape::Torus { major, minor } => {
                let (sp, cp) = u.x.sin_cos();
                let (sv, cv) = u.y.sin_cos();
                let rho = major + minor * cv;
                Vector3::new(rho * cp, rho * sp, minor * sv)
            }
        }
    }

    /// Chart jacobian `[∂₁X ∂₂X]`.
    pub fn jacobian(&self, u: Param) -> Matrix3x2<f64> {
        match self.shape {
            Shape::Plate => Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0),
            Shape::Sphere { radius } => {
                let (st, ct) = u.x.sin_cos();
                let (sp, cp) = u.y.sin_cos();
                let d_theta = radius * Vector3::new(ct * cp, ct * sp, -st);
                let d_phi = radius * Vector3::new(-st * sp, st * cp, 0.0);
                Matrix3x2::from_columns(&[d_theta, d_phi])
            }
            Shape::Cylinder { radius } => {
                let (sp, cp) = u.x.sin_cos();
                Matrix3x2::from_columns(&[
                    Vector3::new(-radius * sp, radius * cp, 0.0),
                    Vector3::new(0.0, 0.0, 1.0),
                ])
            }
            Shape::Torus { major, minor } => {
                let (sp, cp) = u.x.sin_cos();
                let (sv, cv) = u.y.sin_cos();
                let rho = major + minor * cv;
                Matrix3x2::from_columns(&[
                    Vector3::new(-rho * sp, rho * cp, 0.0),
                    Vector3::new(-minor * sv * cp, -minor * sv * sp, minor * cv),
                ])
            }
        }
    }

    /// Second chart partials: entry `i` holds `[∂ᵢ∂₁X ∂ᵢ∂₂X]`.
    pub fn chart_second(&self, u: Param) -> [Matrix3x2<f64>; 2] {
        match self.shape {
            Shape::Plate => [Matrix3x2::zeros(); 2],
            Shape::Sphere { radius } => {
                let (st, ct) = u.x.sin_cos();
                let (sp, cp) = u.y.sin_cos();
                let tt = -radius * Vector3::new(st * cp, st * sp, ct);
                let tp = radius * Vector3::new(-ct * sp, ct * cp, 0.0);
                let pp = radius * Vector3::new(-st * cp, -st * sp, 0.0);
                [
                    Matrix3x2::from_columns(&[tt, tp]),
                    Matrix3x2::from_columns(&[tp, pp]),
                ]
            }
            Shape::Cylinder { radius } => {
                let (sp, cp) = u.x.sin_cos();
                let pp = Vector3::new(-radius * cp, -radius * sp, 0.0);
                let z = Vector3::zeros();
                [
                    Matrix3x2::from_columns(&[pp, z]),
                    Matrix3x2::from_columns(&[z, z]),
                ]
            }
            Shape::Torus { major, minor } => {
                let (sp, cp) = u.x.sin_cos();
                let (sv, cv) = u.y.sin_cos();
                let rho = major + minor * cv;
                let pp = Vector3::new(-rho * cp, -rho * sp, 0.0);
                let pv = Vector3::new(minor * sv * sp, -minor * sv * cp, 0.0);
                let vv = Vector3::new(-minor * cv * cp, -minor * cv * sp, -minor * sv);
                [
                    Matrix3x2::from_columns(&[pp, pv]),
                    Matrix3x2::from_columns(&[pv, vv]),
                ]
            }
        }
    }

    pub fn normal(&self, u: Param) -> Vector3<f64> {
        match self.shape {
            Shape::Plate => Vector3::z(),
            Shape::Sphere { radius } => self.chart(u) / radius,
            Shape::Cylinder { .. } => {
                let (sp, cp) = u.x.sin_cos();
                Vector3::new(cp, sp, 0.0)
            }
            Shape::Torus { .. } => {
                let (sp, cp) = u.x.sin_cos();
                let (sv, cv) = u.y.sin_cos();
                Vector3::new(cv * cp, cv * sp, sv)
            }
        }
    }

    /// Normal partials `[∂₁n ∂₂n]`.
    pub fn normal_partials(&self, u: Param) -> Matrix3x2<f64> {
        match self.shape {
            Shape::Plate => Matrix3x2::zeros(),
            Shape::Sphere { radius } => self.jacobian(u) / radius,
            Shape::Cylinder { .. } => {
                let (sp, cp) = u.x.sin_cos();
                Matrix3x2::from_columns(&[Vector3::new(-sp, cp, 0.0), Vector3::zeros()])
            }
            Shape::Torus { .. } => {
                let (sp, cp) = u.x.sin_cos();
                let (sv, cv) = u.y.sin_cos();
                Matrix3x2::from_columns(&[
                    Vector3::new(-cv * sp, cv * cp, 0.0),
                    Vector3::new(-sv * cp, -sv * sp, cv),
                ])
            }
        }
    }

    /// First fundamental form `JᵀJ`.
    pub fn metric(&self, u: Param) -> Matrix2<f64> {
        let j = self.jacobian(u);
        j.transpose() * j
    }

    /// Dual tangent basis `J G⁻¹`; the surface gradient of a field with
    /// chart partials `D` is `D (J G⁻¹)ᵀ`.
    pub fn dual_basis(&self, u: Param) -> Matrix3x2<f64> {
        let j = self.jacobian(u);
        let g_inv = (j.transpose() * j)
            .try_inverse()
            .expect("chart metric is nondegenerate in the open rectangle");
        j * g_inv
    }

    /// Surface gradient (ambient 3×3, zero on the normal) from chart partials.
    pub fn surface_gradient(&self, u: Param, partials: &Matrix3x2<f64>) -> Matrix3<f64> {
        partials * self.dual_basis(u).transpose()
    }

    /// Shape operator `Π = ∇n` as an ambient 3×3 matrix vanishing on `n`.
    pub fn shape_operator(&self, u: Param) -> Matrix3<f64> {
        self.surface_gradient(u, &self.normal_partials(u))
    }

    pub fn frame(&self, u: Param) -> TangentFrame {
        let j = self.jacobian(u);
        let e1 = j.column(0).normalize();
        let c2 = j.column(1);
        let e2 = (c2 - e1 * e1.dot(&c2)).normalize();
        TangentFrame {
            e1,
            e2,
            n: self.normal(u),
        }
    }

    /// Shape operator in the orthonormal tangent frame.
    pub fn shape_operator_tan(&self, u: Param) -> Matrix2<f64> {
        self.frame(u).minor(&self.shape_operator(u))
    }

    /// Principal curvatures in ascending order.
    pub fn principal_curvatures(&self, u: Param) -> [f64; 2] {
        let s = self.shape_operator_tan(u);
        let s = 0.5 * (s + s.transpose());
        let ev = s.symmetric_eigenvalues();
        let (a, b) = (ev[0], ev[1]);
        if a <= b {
            [a, b]
        } else {
            [b, a]
        }
    }
}

/// Central-difference estimate of `∇n` in the tangent frame at `u`.
///
/// Cross-checks the analytic shape operator; `step` is the parameter
/// increment.
pub fn shape_operator_fd(patch: &SurfacePatch, u: Param, step: f64) -> Result<Matrix2<f64>> {
    if !(step > 0.0) || !patch.contains(u, step) {
        return Err(Error::Domain {
            u: [u.x, u.y],
            margin: step,
        });
    }
    let dn0 = diff::central2(|p| patch.normal(p), u, 0, step);
    let dn1 = diff::central2(|p| patch.normal(p), u, 1, step);
    let dn = Matrix3x2::from_columns(&[dn0, dn1]);
    let pi = patch.surface_gradient(u, &dn);
    Ok(patch.frame(u).minor(&pi))
}

/// `Id + tΠ(x)` (identity on the normal) and its determinant.
pub fn offset_jacobian(patch: &SurfacePatch, u: Param, t: f64) -> Result<(Matrix3<f64>, f64)> {
    let m = Matrix3::identity() + patch.shape_operator(u) * t;
    let det = m.determinant();
    if !(det > 0.0) {
        return Err(Error::ThicknessTooLarge {
            u: [u.x, u.y],
            t,
            det,
        });
    }
    Ok((m, det))
}
