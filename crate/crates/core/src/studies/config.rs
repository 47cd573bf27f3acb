use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldRef, FieldSpec, FnField, TrigMode};
use crate::geometry::{
    make_builtin_patch, PatchSpec, ScalarProfile, SurfacePatch, SurfaceQuadrature, ThicknessPair,
    DEFAULT_SURFACE_ORDER, DEFAULT_TRANSVERSAL_ORDER,
};
use crate::kinematics::DEFAULT_ISOMETRY_TOL;
use crate::loads::{LoadField, LoadScaling};
use crate::material::{Material, MaterialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    GammaLimit,
    ExpansionOrder,
    Q2Check,
    LoadAlign,
}

impl StudyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StudyKind::GammaLimit => "gamma-limit",
            StudyKind::ExpansionOrder => "expansion-order",
            StudyKind::Q2Check => "q2-check",
            StudyKind::LoadAlign => "load-align",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThicknessSpec {
    #[serde(default = "half")]
    pub g1: ScalarProfile,
    #[serde(default = "half")]
    pub g2: ScalarProfile,
    #[serde(default = "one")]
    pub lipschitz_bound: f64,
}

impl Default for ThicknessSpec {
    fn default() -> Self {
        ThicknessSpec {
            g1: half(),
            g2: half(),
            lipschitz_bound: 1.0,
        }
    }
}

impl ThicknessSpec {
    pub fn build(&self) -> ThicknessPair {
        ThicknessPair::new(self.g1.clone(), self.g2.clone(), self.lipschitz_bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSpec {
    /// The infinitesimal isometry `V`.
    #[serde(default = "FieldSpec::plate_bump")]
    pub v: FieldSpec,
    /// The generator `w` of `B_tan = sym∇w` (and the second-order field of
    /// the expansion studies).
    #[serde(default = "zero_spec")]
    pub w: FieldSpec,
}

impl Default for FieldsSpec {
    fn default() -> Self {
        FieldsSpec {
            v: FieldSpec::plate_bump(),
            w: FieldSpec::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpec {
    /// `lim e_h / h⁴ = κ²`; `e_h = κ²h⁴` when `κ > 0`.
    #[serde(default = "one")]
    pub kappa: f64,
    /// `e_h = h^α` when `κ = 0`.
    #[serde(default = "five")]
    pub alpha: f64,
}

impl Default for EnergySpec {
    fn default() -> Self {
        EnergySpec { kappa: 1.0, alpha: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default = "default_h")]
    pub h: Vec<f64>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec { h: default_h() }
    }
}

/// `h = 2⁻ᵏ` for `k = from..=to`.
pub fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 0.5f64.powi(k)).collect()
}

/// Builtin surface loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadFieldSpec {
    Constant { value: [f64; 3] },
    /// `f(x) = scale · x`.
    Radial {
        #[serde(default = "one")]
        scale: f64,
    },
    /// Any builtin field family in the chart parameters.
    Field { field: FieldSpec },
}

impl LoadFieldSpec {
    pub fn build(&self, patch: &SurfacePatch) -> Result<FieldRef> {
        Ok(match self {
            LoadFieldSpec::Constant { value } => {
                let v = Vector3::from(*value);
                std::sync::Arc::new(FnField::new(move |_| v, patch.fd_step()))
            }
            LoadFieldSpec::Radial { scale } => {
                let (p, s) = (patch.clone(), *scale);
                std::sync::Arc::new(FnField::new(move |u| p.chart(u) * s, patch.fd_step()))
            }
            LoadFieldSpec::Field { field } => field.build(patch)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    pub field: LoadFieldSpec,
    #[serde(default = "example_scaling")]
    pub scaling: LoadScaling,
}

impl LoadSpec {
    pub fn build(&self, patch: &SurfacePatch) -> Result<LoadField> {
        Ok(LoadField::new(self.field.build(patch)?, self.scaling))
    }

    /// `(0, 0, cos 2πu₁ cos 2πu₂)`: balanced and without moment on the unit plate.
    pub fn plate_wave() -> Self {
        LoadSpec {
            field: LoadFieldSpec::Field {
                field: FieldSpec::Trig {
                    modes: vec![TrigMode {
                        amplitude: [0.0, 0.0, 1.0],
                        k: [2.0, 2.0],
                        phase: [0.5 * PI, 0.5 * PI],
                    }],
                },
            },
            scaling: LoadScaling::Example,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default = "default_surface_order")]
    pub surface: usize,
    #[serde(default = "default_transversal_order")]
    pub transversal: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            surface: DEFAULT_SURFACE_ORDER,
            transversal: DEFAULT_TRANSVERSAL_ORDER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub isometry: f64,
    /// Relative gap `|E/e − I|/I` allowed at the smallest `h`.
    pub gap_smallest_h: f64,
    /// Relative gap allowed for the extrapolated value.
    pub gap_extrapolated: f64,
    pub stretch_slope: f64,
    pub bend_slope: f64,
    pub min_r_squared: f64,
    /// Residuals at or below this are treated as exact zeros.
    pub exact_floor: f64,
    /// Minimal fitted order of the averaged-displacement distance.
    pub averaged_order: f64,
    /// Averaged-strain errors at or below this count as converged.
    pub averaged_strain_floor: f64,
    pub q2_closed_form: f64,
    pub q2_brute_force: f64,
    /// Allowed excess of a sampled action over `m^h`, relative to `|m^h|`.
    pub action: f64,
    pub compatibility: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            isometry: DEFAULT_ISOMETRY_TOL,
            gap_smallest_h: 0.05,
            gap_extrapolated: 0.02,
            stretch_slope: 2.9,
            bend_slope: 1.9,
            min_r_squared: 0.99,
            exact_floor: 1e-12,
            averaged_order: 0.5,
            averaged_strain_floor: 1e-9,
            q2_closed_form: 1e-10,
            q2_brute_force: 1e-8,
            action: 1e-9,
            compatibility: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtrapolationSpec {
    /// Assumed leading order `p` of the gap `E/e − I ≈ C hᵖ`.
    pub order: f64,
}

impl Default for ExtrapolationSpec {
    fn default() -> Self {
        ExtrapolationSpec { order: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSpec {
    pub seed: u64,
    /// Random tangential inputs per material in a q2-check.
    pub q2_samples: usize,
    /// Random rotations per moment matrix in a load-align study.
    pub rotations: usize,
    /// Random moment matrices checked in a load-align study.
    pub matrices: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            seed: 2024,
            q2_samples: 200,
            rotations: 100_000,
            matrices: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_output")]
    pub path: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { path: default_output() }
    }
}

/// A declarative convergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub kind: StudyKind,
    #[serde(default = "default_patch")]
    pub patch: PatchSpec,
    #[serde(default)]
    pub thickness: ThicknessSpec,
    #[serde(default = "default_material")]
    pub material: MaterialSpec,
    #[serde(default)]
    pub fields: FieldsSpec,
    #[serde(default)]
    pub energy: EnergySpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<LoadSpec>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub extrapolation: ExtrapolationSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn half() -> ScalarProfile {
    ScalarProfile::constant(0.5)
}
fn one() -> f64 {
    1.0
}
fn five() -> f64 {
    5.0
}
fn zero_spec() -> FieldSpec {
    FieldSpec::Zero
}
fn default_h() -> Vec<f64> {
    dyadic(3, 7)
}
fn example_scaling() -> LoadScaling {
    LoadScaling::Example
}
fn default_surface_order() -> usize {
    DEFAULT_SURFACE_ORDER
}
fn default_transversal_order() -> usize {
    DEFAULT_TRANSVERSAL_ORDER
}
fn default_output() -> String {
    "report.csv".into()
}
fn default_name() -> String {
    "study".into()
}
fn default_patch() -> PatchSpec {
    PatchSpec::Plate {
        u1: [0.0, 1.0],
        u2: [0.0, 1.0],
    }
}
fn default_material() -> MaterialSpec {
    MaterialSpec::Isotropic { mu: 1.0, lambda: 1.0 }
}

impl StudyConfig {
    /// A config of the given kind with every other entry at its default.
    pub fn with_kind(kind: StudyKind) -> Self {
        StudyConfig {
            name: default_name(),
            kind,
            patch: default_patch(),
            thickness: ThicknessSpec::default(),
            material: default_material(),
            fields: FieldsSpec::default(),
            energy: EnergySpec::default(),
            schedule: ScheduleSpec::default(),
            load: None,
            quadrature: QuadratureSpec::default(),
            tolerances: Tolerances::default(),
            extrapolation: ExtrapolationSpec::default(),
            sampling: SamplingSpec::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            path: String::new(),
            message: e.to_string(),
        })
    }

    /// Checks physical and structural validity; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let patch = make_builtin_patch(&self.patch).map_err(|e| Error::validation("patch", e.to_string()))?;
        if self.quadrature.surface == 0 {
            return Err(Error::validation("quadrature.surface", "must be at least 1"));
        }
        if self.quadrature.transversal == 0 {
            return Err(Error::validation("quadrature.transversal", "must be at least 1"));
        }
        let quad = SurfaceQuadrature::new(&patch, self.quadrature.surface);
        if !(self.thickness.lipschitz_bound.is_finite() && self.thickness.lipschitz_bound > 0.0) {
            return Err(Error::validation("thickness.lipschitz_bound", "must be positive"));
        }
        self.thickness.build().check(&patch, &quad)?;
        Material::from_spec(&self.material).map_err(|e| Error::validation("material", e.to_string()))?;

        let EnergySpec { kappa, alpha } = self.energy;
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::validation("energy.kappa", format!("must be finite and nonnegative, got {kappa}")));
        }
        if kappa == 0.0 && !(alpha.is_finite() && alpha > 4.0) {
            return Err(Error::validation("energy.alpha", format!("must exceed 4 when kappa = 0, got {alpha}")));
        }

        let h = &self.schedule.h;
        if h.len() < 4 {
            return Err(Error::validation(
                "schedule.h",
                format!("needs at least 4 values for slope fits, got {}", h.len()),
            ));
        }
        if let Some(bad) = h.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::validation("schedule.h", format!("values must lie in (0, 1), got {bad}")));
        }
        if h.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::validation("schedule.h", "must be strictly decreasing"));
        }

        let t = &self.tolerances;
        let positive = [
            ("tolerances.isometry", t.isometry),
            ("tolerances.gap_smallest_h", t.gap_smallest_h),
            ("tolerances.gap_extrapolated", t.gap_extrapolated),
            ("tolerances.exact_floor", t.exact_floor),
            ("tolerances.averaged_order", t.averaged_order),
            ("tolerances.averaged_strain_floor", t.averaged_strain_floor),
            ("tolerances.q2_closed_form", t.q2_closed_form),
            ("tolerances.q2_brute_force", t.q2_brute_force),
            ("tolerances.action", t.action),
            ("tolerances.compatibility", t.compatibility),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(key, format!("must be positive, got {v}")));
            }
        }
        if !(t.min_r_squared > 0.0 && t.min_r_squared <= 1.0) {
            return Err(Error::validation("tolerances.min_r_squared", "must lie in (0, 1]"));
        }
        if !(self.extrapolation.order.is_finite() && self.extrapolation.order > 0.0) {
            return Err(Error::validation("extrapolation.order", "must be positive"));
        }
        if self.kind == StudyKind::LoadAlign && self.load.is_none() {
            return Err(Error::validation("load", "a load-align study needs a load block"));
        }
        if let Some(LoadSpec {
            scaling: LoadScaling::Power { coefficient, exponent },
            ..
        }) = &self.load
        {
            if !(coefficient.is_finite() && exponent.is_finite()) {
                return Err(Error::validation("load.scaling", "coefficient and exponent must be finite"));
            }
        }
        if self.output.path.is_empty() {
            return Err(Error::validation("output.path", "must not be empty"));
        }
        Ok(())
    }
}

/// Parses and validates a TOML study document.
pub fn parse_config(text: &str) -> Result<StudyConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Parse {
        path: String::new(),
        message: e.to_string(),
    })?;
    let cfg: StudyConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}
