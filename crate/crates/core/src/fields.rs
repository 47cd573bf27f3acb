//! Vector fields on a patch: displacements, strain generators and loads.

use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{Matrix3, Matrix3x2, Vector3};
use serde::{Deserialize, Serialize};

use crate::diff;
use crate::error::Result;
use crate::geometry::SurfacePatch;
use crate::Param;

/// A vector field on the parameter rectangle with chart partials up to
/// second order.
///
/// Derivatives default to fourth-order central differences with
/// [`VectorField::fd_step`]; analytic fields override them.
pub trait VectorField: Send + Sync + Debug {
    fn value(&self, u: Param) -> Vector3<f64>;

    fn fd_step(&self) -> f64 {
        1e-3
    }

    /// `[∂₁f ∂₂f]`.
    fn partials(&self, u: Param) -> Matrix3x2<f64> {
        let [a, b] = diff::partials4(|p| self.value(p), u, self.fd_step());
        Matrix3x2::from_columns(&[a, b])
    }

    /// Entry `i` holds `[∂ᵢ∂₁f ∂ᵢ∂₂f]`.
    fn second_partials(&self, u: Param) -> [Matrix3x2<f64>; 2] {
        diff::partials4(|p| self.partials(p), u, self.fd_step())
    }

    /// Whether the derivatives are exact.
    fn is_analytic(&self) -> bool {
        false
    }
}

/// Shared handle used throughout the crate.
pub type FieldRef = Arc<dyn VectorField>;

/// A field given by a closure; derivatives by finite differences.
pub struct FnField<F> {
    f: F,
    step: f64,
}

impl<F> FnField<F>
where
    F: Fn(Param) -> Vector3<f64> + Send + Sync,
{
    pub fn new(f: F, step: f64) -> Self {
        FnField { f, step }
    }
}

impl<F> Debug for FnField<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnField").field("step", &self.step).finish()
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(Param) -> Vector3<f64> + Send + Sync,
{
    fn value(&self, u: Param) -> Vector3<f64> {
        (self.f)(u)
    }

    fn fd_step(&self) -> f64 {
        self.step
    }
}

/// One separable trigonometric mode
/// `amplitude · sin(k₁π u₁ + p₁) · sin(k₂π u₂ + p₂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigMode {
    pub amplitude: [f64; 3],
    pub k: [f64; 2],
    #[serde(default)]
    pub phase: [f64; 2],
}

/// Builtin field families addressable from study configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    /// Rigid motion `x ↦ ω × x + b` evaluated on the chart.
    Rigid {
        rotation: [f64; 3],
        #[serde(default)]
        translation: [f64; 3],
    },
    /// Sum of trigonometric modes in the chart parameters.
    Trig { modes: Vec<TrigMode> },
    Sum { components: Vec<FieldSpec> },
}

impl FieldSpec {
    /// `(0, 0, sin(πu₁) sin(πu₂))`.
    pub fn plate_bump() -> Self {
        FieldSpec::Trig {
            modes: vec![TrigMode {
                amplitude: [0.0, 0.0, 1.0],
                k: [1.0, 1.0],
                phase: [0.0, 0.0],
            }],
        }
    }

    pub fn rigid(rotation: [f64; 3], translation: [f64; 3]) -> Self {
        FieldSpec::Rigid {
            rotation,
            translation,
        }
    }

    pub fn build(&self, patch: &SurfacePatch) -> Result<FieldRef> {
        Ok(Arc::new(BuiltinField {
            spec: self.clone(),
            patch: patch.clone(),
        }))
    }
}

/// Skew matrix `W` with `W x = ω × x`.
pub fn skew(omega: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -omega.z, omega.y, //
        omega.z, 0.0, -omega.x, //
        -omega.y, omega.x, 0.0,
    )
}

/// A builtin field with analytic derivatives.
#[derive(Debug, Clone)]
pub struct BuiltinField {
    spec: FieldSpec,
    patch: SurfacePatch,
}

impl BuiltinField {
    pub fn new(spec: FieldSpec, patch: &SurfacePatch) -> Self {
        BuiltinField {
            spec,
            patch: patch.clone(),
        }
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }
}

fn mode_terms(m: &TrigMode, u: Param) -> ([f64; 2], [f64; 2]) {
    let a = m.k[0] * PI * u.x + m.phase[0];
    let b = m.k[1] * PI * u.y + m.phase[1];
    (a.sin_cos().into(), b.sin_cos().into())
}

fn eval_value(spec: &FieldSpec, patch: &SurfacePatch, u: Param) -> Vector3<f64> {
    match spec {
        FieldSpec::Zero => Vector3::zeros(),
        FieldSpec::Rigid {
            rotation,
            translation,
        } => Vector3::from(*rotation).cross(&patch.chart(u)) + Vector3::from(*translation),
        FieldSpec::Trig { modes } => modes
            .iter()
            .map(|m| {
                let ([sa, _], [sb, _]) = mode_terms(m, u);
                Vector3::from(m.amplitude) * (sa * sb)
            })
            .sum(),
        FieldSpec::Sum { components } => components.iter().map(|c| eval_value(c, patch, u)).sum(),
    }
}

fn eval_partials(spec: &FieldSpec, patch: &SurfacePatch, u: Param) -> Matrix3x2<f64> {
    match spec {
        FieldSpec::Zero => Matrix3x2::zeros(),
        FieldSpec::Rigid { rotation, .. } => skew(&Vector3::from(*rotation)) * patch.jacobian(u),
        FieldSpec::Trig { modes } => {
            let mut out = Matrix3x2::zeros();
            for m in modes {
                let ([sa, ca], [sb, cb]) = mode_terms(m, u);
                let amp = Vector3::from(m.amplitude);
                let (ka, kb) = (m.k[0] * PI, m.k[1] * PI);
                out.set_column(0, &(out.column(0) + amp * (ka * ca * sb)));
                out.set_column(1, &(out.column(1) + amp * (kb * sa * cb)));
            }
            out
        }
        FieldSpec::Sum { components } => components
            .iter()
            .fold(Matrix3x2::zeros(), |acc, c| acc + eval_partials(c, patch, u)),
    }
}

fn eval_second(spec: &FieldSpec, patch: &SurfacePatch, u: Param) -> [Matrix3x2<f64>; 2] {
    match spec {
        FieldSpec::Zero => [Matrix3x2::zeros(); 2],
        FieldSpec::Rigid { rotation, .. } => {
            let w = skew(&Vector3::from(*rotation));
            let sec = patch.chart_second(u);
            [w * sec[0], w * sec[1]]
        }
        FieldSpec::Trig { modes } => {
            let mut d11 = Vector3::zeros();
            let mut d12 = Vector3::zeros();
            let mut d22 = Vector3::zeros();
            for m in modes {
                let ([sa, ca], [sb, cb]) = mode_terms(m, u);
                let amp = Vector3::from(m.amplitude);
                let (ka, kb) = (m.k[0] * PI, m.k[1] * PI);
                d11 -= amp * (ka * ka * sa * sb);
                d12 += amp * (ka * kb * ca * cb);
                d22 -= amp * (kb * kb * sa * sb);
            }
            [
                Matrix3x2::from_columns(&[d11, d12]),
                Matrix3x2::from_columns(&[d12, d22]),
            ]
        }
        FieldSpec::Sum { components } => components.iter().fold([Matrix3x2::zeros(); 2], |acc, c| {
            let s = eval_second(c, patch, u);
            [acc[0] + s[0], acc[1] + s[1]]
        }),
    }
}

impl VectorField for BuiltinField {
    fn value(&self, u: Param) -> Vector3<f64> {
        eval_value(&self.spec, &self.patch, u)
    }

    fn fd_step(&self) -> f64 {
        self.patch.fd_step()
    }

    fn partials(&self, u: Param) -> Matrix3x2<f64> {
        eval_partials(&self.spec, &self.patch, u)
    }

    fn second_partials(&self, u: Param) -> [Matrix3x2<f64>; 2] {
        eval_second(&self.spec, &self.patch, u)
    }

    fn is_analytic(&self) -> bool {
        true
    }
}

/// The zero field.
pub fn zero_field() -> FieldRef {
    Arc::new(ZeroField)
}

#[derive(Debug, Clone, Copy)]
struct ZeroField;

impl VectorField for ZeroField {
    fn value(&self, _u: Param) -> Vector3<f64> {
        Vector3::zeros()
    }
    fn partials(&self, _u: Param) -> Matrix3x2<f64> {
        Matrix3x2::zeros()
    }
    fn second_partials(&self, _u: Param) -> [Matrix3x2<f64>; 2] {
        [Matrix3x2::zeros(); 2]
    }
    fn is_analytic(&self) -> bool {
        true
    }
}
