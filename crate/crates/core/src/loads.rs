//! Dead loads: thickness extension, the rotation-maximized action `m^h`,
//! the total energy `J^h`, and the maximizer set of the linear action in
//! the Example scaling `f^h = h√e f`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldRef, VectorField};
use crate::geometry::{offset_jacobian, SurfacePatch, SurfaceQuadrature, ThicknessPair, TransversalRule};
use crate::material::{rotation_from_axis_angle, Material};
use crate::recovery3d::{eval_shell_energy, RecoveryDeformation};
use crate::Param;

/// How the surface force scales with `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadScaling {
    /// `f^h = h √e_h f`.
    Example,
    /// `f^h = coefficient · h^exponent · f`.
    Power { coefficient: f64, exponent: f64 },
}

impl LoadScaling {
    pub fn factor(&self, h: f64, e_h: f64) -> f64 {
        match *self {
            LoadScaling::Example => h * e_h.sqrt(),
            LoadScaling::Power { coefficient, exponent } => coefficient * h.powf(exponent),
        }
    }
}

/// A limit load `f` on the surface with its scaling declaration.
#[derive(Debug, Clone)]
pub struct LoadField {
    pub f: FieldRef,
    pub scaling: LoadScaling,
}

impl LoadField {
    pub fn new(f: FieldRef, scaling: LoadScaling) -> Self {
        LoadField { f, scaling }
    }

    /// `f^h(x)` on the mid-surface.
    pub fn surface_value(&self, u: Param, h: f64, e_h: f64) -> Vector3<f64> {
        self.f.value(u) * self.scaling.factor(h, e_h)
    }

    /// `|∫(g₁+g₂) f|` relative to `∫(g₁+g₂)|f|`.
    pub fn compatibility_defect(&self, thick: &ThicknessPair, quad: &SurfaceQuadrature) -> f64 {
        let mut net = Vector3::zeros();
        let mut mass = 0.0;
        for node in &quad.nodes {
            let g = thick.total(node.u) * node.weight;
            let f = self.f.value(node.u);
            net += f * g;
            mass += f.norm() * g;
        }
        if mass == 0.0 {
            0.0
        } else {
            net.norm() / mass
        }
    }

    /// Errors unless `∫(g₁+g₂) f = 0` to `tol` of the load's `L¹` mass.
    pub fn check_compatible(&self, thick: &ThicknessPair, quad: &SurfaceQuadrature, tol: f64) -> Result<()> {
        let defect = self.compatibility_defect(thick, quad);
        if defect <= tol {
            Ok(())
        } else {
            Err(Error::param(format!(
                "load is not compatible: |∫(g1+g2) f| is {defect:e} of its L1 mass"
            )))
        }
    }
}

/// `f^h(x + tn) = det(Id + tΠ(x))⁻¹ f^h(x)` for a physical offset `t`.
pub fn extend_load(patch: &SurfacePatch, f_surface: &dyn VectorField, u: Param, t: f64) -> Result<Vector3<f64>> {
    let (_, det) = offset_jacobian(patch, u, t)?;
    Ok(f_surface.value(u) / det)
}

/// Kind of the maximizer set of `Q ↦ Σ Qᵢⱼ Mᵢⱼ` over `SO(3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaximizerKind {
    Unique,
    OneParameterFamily,
    TwoParameterFamily,
    AllRotations,
}

/// Solution of `max_{Q ∈ SO(3)} Σ Qᵢⱼ Mᵢⱼ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Procrustes {
    pub rotation: Matrix3<f64>,
    pub value: f64,
    pub singular_values: Vector3<f64>,
    pub kind: MaximizerKind,
}

impl Procrustes {
    pub fn is_unique(&self) -> bool {
        self.kind == MaximizerKind::Unique
    }
}

/// `Σ Qᵢⱼ Mᵢⱼ`.
pub fn linear_action(q: &Matrix3<f64>, m: &Matrix3<f64>) -> f64 {
    q.component_mul(m).sum()
}

/// Maximizes `Σ Qᵢⱼ Mᵢⱼ` over rotations. Ties are broken toward the
/// rotation nearest to `Id`.
pub fn procrustes(m: &Matrix3<f64>, tol: f64) -> Result<Procrustes> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("moment matrix has non-finite entries"));
    }
    let svd = m.svd(true, true);
    let (mut u, mut v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut sigma = svd.singular_values;
    // descending order
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let perm = Matrix3::from_fn(|i, j| if idx[j] == i { 1.0 } else { 0.0 });
    u *= perm;
    v_t = perm.transpose() * v_t;
    sigma = perm.transpose() * sigma;
    let d = (u * v_t).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let q0 = u * correction * v_t;
    let value = sigma[0] + sigma[1] + d * sigma[2];
    let scale = tol * sigma[0].max(1.0);

    let kind = if sigma[0] <= scale {
        MaximizerKind::AllRotations
    } else if sigma[1] + d * sigma[2] > scale {
        MaximizerKind::Unique
    } else if d < 0.0 && sigma[0] - sigma[2] <= scale {
        MaximizerKind::TwoParameterFamily
    } else {
        MaximizerKind::OneParameterFamily
    };

    let rotation = match kind {
        MaximizerKind::Unique => q0,
        MaximizerKind::AllRotations => Matrix3::identity(),
        // every maximizer maps v₁ to u₁: Q(θ) = Q₀ R(v₁, θ); maximize tr
        MaximizerKind::OneParameterFamily => {
            let axis = v_t.row(0).transpose();
            let k = crate::fields::skew(&axis);
            let a = q0.trace() - axis.dot(&(q0 * axis));
            let b = (q0 * k).trace();
            let theta = b.atan2(a);
            q0 * rotation_from_axis_angle(&axis, theta)
        }
        // M = −σR with R a rotation; maximizers are R·(half-turn about a)
        MaximizerKind::TwoParameterFamily => {
            let r = -(m / sigma[0]);
            let sym = 0.5 * (r + r.transpose());
            let eig = sym.symmetric_eigen();
            let (imax, _) = eig.eigenvalues.argmax();
            let a = eig.eigenvectors.column(imax).into_owned();
            r * (2.0 * a * a.transpose() - Matrix3::identity())
        }
    };
    Ok(Procrustes {
        rotation,
        value,
        singular_values: sigma,
        kind,
    })
}

/// `m^h` with its moment matrix and optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationActionResult {
    /// `N = (1/h)∫_{S^h} z f^h(z)ᵀ dz`.
    pub moment_matrix: Matrix3<f64>,
    pub optimal_rotation: Matrix3<f64>,
    pub m_h: f64,
    pub kind: MaximizerKind,
}

impl RotationActionResult {
    /// `(1/h)∫_{S^h} f^h·Qz = tr(Q N)`.
    pub fn action(&self, q: &Matrix3<f64>) -> f64 {
        (q * self.moment_matrix).trace()
    }
}

/// `N = (1/h)∫_{S^h} z f^h(z)ᵀ dz` by surface × transversal quadrature.
#[allow(clippy::too_many_arguments)]
pub fn moment_matrix(
    patch: &SurfacePatch,
    load: &LoadField,
    thick: &ThicknessPair,
    h: f64,
    e_h: f64,
    squad: &SurfaceQuadrature,
    trule: &TransversalRule,
) -> Result<Matrix3<f64>> {
    let mut n_mat = Matrix3::zeros();
    for node in &squad.nodes {
        let u = node.u;
        let n = patch.normal(u);
        let fh = load.surface_value(u, h, e_h);
        for (t, wt) in trule.nodes(thick.g1(u), thick.g2(u)) {
            // dz = h det(Id + htΠ) dt dS, and the extension divides by det
            let (_, det) = offset_jacobian(patch, u, h * t)?;
            let z = node.x + n * (h * t);
            n_mat += z * (fh / det).transpose() * (wt * det * node.weight);
        }
    }
    if n_mat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            what: "moment matrix".into(),
            u: [f64::NAN, f64::NAN],
        });
    }
    Ok(n_mat)
}

#[allow(clippy::too_many_arguments)]
pub fn maximize_action(
    patch: &SurfacePatch,
    load: &LoadField,
    thick: &ThicknessPair,
    h: f64,
    e_h: f64,
    squad: &SurfaceQuadrature,
    trule: &TransversalRule,
) -> Result<RotationActionResult> {
    let n = moment_matrix(patch, load, thick, h, e_h, squad, trule)?;
    action_from_moment(&n)
}

/// Solves `max_Q tr(Q N)` for a given moment matrix.
pub fn action_from_moment(n: &Matrix3<f64>) -> Result<RotationActionResult> {
    let sol = procrustes(&n.transpose(), 1e-10)?;
    Ok(RotationActionResult {
        moment_matrix: *n,
        optimal_rotation: sol.rotation,
        m_h: sol.value,
        kind: sol.kind,
    })
}

/// The maximizer set `M` of `Q ↦ ∫(g₁+g₂) f·Qx` with `r ≡ 0` on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizerSet {
    /// `∫_S (g₁+g₂) x fᵀ`.
    pub moment_matrix: Matrix3<f64>,
    /// A member of `M` (the one nearest to `Id` when not unique).
    pub optimizer: Matrix3<f64>,
    pub max_value: f64,
    pub kind: MaximizerKind,
    pub r_value: f64,
}

pub fn example_maximizer_set(
    patch: &SurfacePatch,
    load: &LoadField,
    thick: &ThicknessPair,
    quad: &SurfaceQuadrature,
) -> Result<MaximizerSet> {
    if load.scaling != LoadScaling::Example {
        return Err(Error::UnsupportedCase(
            "the maximizer set is only characterized for the scaling f^h = h√e f".into(),
        ));
    }
    if !thick.is_centered() {
        return Err(Error::UnsupportedCase(
            "the maximizer set is only characterized for g1 = g2".into(),
        ));
    }
    let _ = patch;
    let mut n = Matrix3::zeros();
    for node in &quad.nodes {
        n += node.x * load.f.value(node.u).transpose() * (thick.total(node.u) * node.weight);
    }
    let act = action_from_moment(&n)?;
    Ok(MaximizerSet {
        moment_matrix: n,
        optimizer: act.optimal_rotation,
        max_value: act.m_h,
        kind: act.kind,
        r_value: 0.0,
    })
}

/// `J^h(y) = E^h(y) + m^h − (1/h)∫_{S^h} f^h·y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalEnergyValue {
    pub elastic: f64,
    pub m_h: f64,
    pub work: f64,
    pub total: f64,
}

pub fn eval_j_h(
    rec: &RecoveryDeformation,
    material: &Material,
    load: &LoadField,
    squad: &SurfaceQuadrature,
    trule: &TransversalRule,
) -> Result<TotalEnergyValue> {
    let patch = rec.patch();
    let thick = rec.thickness();
    let (h, e_h) = (rec.h, rec.e_h);
    load.check_compatible(thick, squad, 1e-8)?;
    let elastic = eval_shell_energy(rec, material, squad, trule)?.energy;
    let act = maximize_action(patch, load, thick, h, e_h, squad, trule)?;
    let mut work = 0.0;
    for node in &squad.nodes {
        let u = node.u;
        let fiber = rec.fiber(u)?;
        let fh = load.surface_value(u, h, e_h);
        let mut along = 0.0;
        for (t, wt) in trule.nodes(thick.g1(u), thick.g2(u)) {
            let y = fiber.x + fiber.n * (h * t) + rec.offset_displacement(&fiber, t);
            along += wt * fh.dot(&y);
        }
        work += node.weight * along;
    }
    if !work.is_finite() {
        return Err(Error::Evaluation {
            what: "work of the load".into(),
            u: [f64::NAN, f64::NAN],
        });
    }
    Ok(TotalEnergyValue {
        elastic,
        m_h: act.m_h,
        work,
        total: elastic + act.m_h - work,
    })
}

/// A uniformly distributed rotation.
pub fn random_rotation<R: rand::Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        gaussian(rng),
        gaussian(rng),
        gaussian(rng),
        gaussian(rng),
    ));
    q.to_rotation_matrix().into_inner()
}

fn gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    use rand_distr::Distribution;
    rand_distr::StandardNormal.sample(rng)
}
