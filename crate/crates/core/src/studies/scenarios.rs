use std::f64::consts::PI;

use super::config::{dyadic, LoadSpec, StudyConfig, StudyKind, ThicknessSpec};
use crate::fields::{FieldSpec, TrigMode};
use crate::geometry::{PatchSpec, ScalarProfile};
use crate::material::MaterialSpec;

/// Builtin scenario names, in listing order.
pub const SCENARIOS: [(&str, &str); 9] = [
    ("plate-gamma", "plate, V = (0,0,sin πu₁ sin πu₂), w = 0, κ = 1: E/e against I"),
    ("sphere-gamma", "unit sphere cap, rigid V, w = 0: E/e against the stretching-only I"),
    ("plate-expansion", "plate bump V with a second-order field: expansion residual slopes"),
    ("sphere-expansion", "sphere cap, rigid V, variable thickness: expansion residual slopes"),
    ("cylinder-expansion", "cylinder, rigid V, variable thickness: expansion residual slopes"),
    ("q2-isotropic", "Q2 reduction for μ = λ = 1 against closed form and brute force"),
    ("q2-incompressible-free", "Q2 reduction for μ = 1, λ = 0"),
    ("q2-stiff", "Q2 reduction for μ = 2, λ = 0.5"),
    ("plate-load", "plate bump V under a balanced wave load: J^h/e against J, Procrustes vs sampling"),
];

pub fn scenario_names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(n, _)| *n)
}

/// A field `w` with all three components and no symmetry.
pub fn second_order_field() -> FieldSpec {
    FieldSpec::Trig {
        modes: vec![TrigMode {
            amplitude: [0.2, -0.1, 0.05],
            k: [1.0, 1.0],
            phase: [0.2, 0.4],
        }],
    }
}

/// `g₁` affine, `g₂` oscillating, so that `g₂ − g₁` varies.
pub fn variable_thickness() -> ThicknessSpec {
    ThicknessSpec {
        g1: ScalarProfile::Affine { c0: 0.4, c1: 0.1, c2: -0.05 },
        g2: ScalarProfile::Trig {
            mean: 0.6,
            amplitude: 0.05,
            k: [1.0, 1.0],
            phase: [0.3, 0.0],
        },
        lipschitz_bound: 5.0,
    }
}

pub fn sphere_cap() -> PatchSpec {
    PatchSpec::SphereCap {
        radius: 1.0,
        polar_angle: 1.0,
    }
}

pub fn cylinder() -> PatchSpec {
    PatchSpec::Cylinder {
        radius: 1.0,
        height: 1.0,
        angle: PI,
    }
}

fn q2(name: &str, mu: f64, lambda: f64) -> StudyConfig {
    let mut c = StudyConfig::with_kind(StudyKind::Q2Check);
    c.name = name.into();
    c.material = MaterialSpec::Isotropic { mu, lambda };
    c
}

fn expansion(name: &str, patch: PatchSpec, v: FieldSpec, thickness: ThicknessSpec) -> StudyConfig {
    let mut c = StudyConfig::with_kind(StudyKind::ExpansionOrder);
    c.name = name.into();
    c.patch = patch;
    c.fields.v = v;
    c.fields.w = second_order_field();
    c.thickness = thickness;
    c.schedule.h = dyadic(3, 9);
    c
}

/// The builtin scenario of the given name, with its output path set to
/// `<name>.csv`.
pub fn builtin_scenario(name: &str) -> Option<StudyConfig> {
    let rigid = FieldSpec::rigid([0.3, -0.2, 1.0], [0.0; 3]);
    let mut cfg = match name {
        "plate-gamma" => {
            let mut c = StudyConfig::with_kind(StudyKind::GammaLimit);
            c.name = name.into();
            c
        }
        "sphere-gamma" => {
            let mut c = StudyConfig::with_kind(StudyKind::GammaLimit);
            c.name = name.into();
            c.patch = sphere_cap();
            c.fields.v = rigid;
            c
        }
        "plate-expansion" => expansion(name, PatchSpec::Plate { u1: [0.0, 1.0], u2: [0.0, 1.0] }, FieldSpec::plate_bump(), ThicknessSpec::default()),
        "sphere-expansion" => expansion(name, sphere_cap(), rigid, variable_thickness()),
        "cylinder-expansion" => expansion(name, cylinder(), FieldSpec::rigid([0.2, 1.0, -0.4], [0.0; 3]), variable_thickness()),
        "q2-isotropic" => q2(name, 1.0, 1.0),
        "q2-incompressible-free" => q2(name, 1.0, 0.0),
        "q2-stiff" => q2(name, 2.0, 0.5),
        "plate-load" => {
            let mut c = StudyConfig::with_kind(StudyKind::LoadAlign);
            c.name = name.into();
            c.load = Some(LoadSpec::plate_wave());
            c
        }
        _ => return None,
    };
    cfg.output.path = format!("{name}.csv");
    Some(cfg)
}
