//! Explicit recovery deformations on the shell `S^h` and their energy.
//!
//! Points of `S^h` are written `x + h t n(x)` with `t ∈ (−g₁(x), g₂(x))`,
//! and `s = t − (g₂ − g₁)/2`. The deformation is
//!
//! ```text
//! y(x + htn) = x + htn + (√e/h) V + √e w
//!            + s √e A n − h s √e (∇w)ᵀn + h s √e d⁰ + ½ s² h √e d¹
//! ```
//!
//! where `A n = ΠV_tan − ∇(V·n)` for an infinitesimal isometry.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::diff;
use crate::error::{Error, Result};
use crate::fields::FieldRef;
use crate::geometry::{
    offset_jacobian, SurfacePatch, SurfaceQuadrature, ThicknessPair, TransversalRule,
};
use crate::kinematics::{bending_tensor, stretching_tensor, thickness_gradient_matrix, IsometryField, StrainField};
use crate::material::{reduce_q2_in_frame, Material, QuadForm3, StoredEnergy};
use crate::Param;

/// The correction fields `d⁰`, `d¹`, evaluable anywhere on the chart.
#[derive(Debug, Clone)]
pub struct DFields {
    q3: QuadForm3,
    iso: IsometryField,
    strain: StrainField,
    thick: ThicknessPair,
    kappa: f64,
}

pub fn build_d_fields(
    patch: &SurfacePatch,
    material: &Material,
    iso: &IsometryField,
    strain: &StrainField,
    thick: &ThicknessPair,
    kappa: f64,
) -> Result<DFields> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::param(format!("kappa must be finite and nonnegative, got {kappa}")));
    }
    if iso.patch() != patch {
        return Err(Error::param("isometry field lives on a different patch"));
    }
    let q3 = material.q3();
    // surfaces a degenerate material before any evaluation
    let (lo, hi) = patch.domain();
    reduce_q2_in_frame(&q3, &patch.frame((lo + hi) * 0.5))?;
    Ok(DFields {
        q3,
        iso: iso.clone(),
        strain: strain.clone(),
        thick: thick.clone(),
        kappa,
    })
}

impl DFields {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `(d⁰(u), d¹(u))`.
    pub fn eval(&self, u: Param) -> Result<(Vector3<f64>, Vector3<f64>)> {
        let patch = self.iso.patch();
        let frame = patch.frame(u);
        let q2 = reduce_q2_in_frame(&self.q3, &frame)?;
        let n = frame.n;
        let a = self.iso.a(u);
        let a2 = a * a;
        let k = self.kappa;

        let stretch = stretching_tensor(&self.iso, &self.strain, &self.thick, k, u);
        let offset = a * thickness_gradient_matrix(patch, &self.thick, u);
        let d0 = 2.0 * q2.minimizer(&stretch) + k * a2 * n - 0.5 * k * n.dot(&(a2 * n)) * n
            + 0.5 * offset.transpose() * n;

        let pi = patch.shape_operator(u);
        let grad_an = self.iso.a_normal_gradient(u);
        let d1 = 2.0 * q2.minimizer(&bending_tensor(&self.iso, u)) + (a * pi).transpose() * n
            - grad_an.transpose() * n;
        Ok((d0, d1))
    }

    pub fn d0(&self, u: Param) -> Result<Vector3<f64>> {
        Ok(self.eval(u)?.0)
    }

    pub fn d1(&self, u: Param) -> Result<Vector3<f64>> {
        Ok(self.eval(u)?.1)
    }
}

/// `e_h = κ²h⁴`, or `h^α` in the linear regime `κ = 0`.
pub fn energy_scale(h: f64, kappa: f64, alpha: f64) -> f64 {
    if kappa > 0.0 {
        kappa * kappa * h.powi(4)
    } else {
        h.powf(alpha)
    }
}

/// Everything needed at one surface point to evaluate `y` and `∇y` along
/// the fibre `t ∈ (−g₁, g₂)`.
#[derive(Debug, Clone)]
pub struct Fiber {
    pub u: Param,
    pub x: Vector3<f64>,
    pub n: Vector3<f64>,
    jac: Matrix3x2<f64>,
    dn: Matrix3x2<f64>,
    /// `(√e/h) V + √e w` and its chart partials.
    lead: Vector3<f64>,
    dlead: Matrix3x2<f64>,
    offset: f64,
    doffset: Vector2<f64>,
    /// `P = √e(A n − h (∇w)ᵀn + h d⁰)` and `D = h √e d¹`, with partials.
    p: Vector3<f64>,
    dp: [Vector3<f64>; 2],
    d: Vector3<f64>,
    dd: [Vector3<f64>; 2],
}

/// The recovery deformation `y^h` for one `h`.
#[derive(Debug, Clone)]
pub struct RecoveryDeformation {
    pub h: f64,
    pub e_h: f64,
    pub kappa: f64,
    patch: SurfacePatch,
    thick: ThicknessPair,
    iso: IsometryField,
    w: FieldRef,
    d: DFields,
}

#[allow(clippy::too_many_arguments)]
pub fn build_recovery(
    patch: &SurfacePatch,
    material: &Material,
    iso: &IsometryField,
    strain: &StrainField,
    thick: &ThicknessPair,
    h: f64,
    e_h: f64,
    kappa: f64,
) -> Result<RecoveryDeformation> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::param(format!("h must lie in (0, 1), got {h}")));
    }
    if !(e_h > 0.0 && e_h.is_finite()) {
        return Err(Error::param(format!("e_h must be positive, got {e_h}")));
    }
    let w = strain
        .generator()
        .cloned()
        .ok_or_else(|| Error::UnsupportedCase("the recovery deformation needs B_tan = sym∇w with an explicit w".into()))?;
    let d = build_d_fields(patch, material, iso, strain, thick, kappa)?;
    Ok(RecoveryDeformation {
        h,
        e_h,
        kappa,
        patch: patch.clone(),
        thick: thick.clone(),
        iso: iso.clone(),
        w,
        d,
    })
}

fn nan3() -> Vector3<f64> {
    Vector3::repeat(f64::NAN)
}

impl RecoveryDeformation {
    pub fn patch(&self) -> &SurfacePatch {
        &self.patch
    }

    pub fn thickness(&self) -> &ThicknessPair {
        &self.thick
    }

    pub fn d_fields(&self) -> &DFields {
        &self.d
    }

    fn root_e(&self) -> f64 {
        self.e_h.sqrt()
    }

    /// `(P, D)` at `u`.
    fn corrections(&self, u: Param) -> Result<(Vector3<f64>, Vector3<f64>)> {
        let (d0, d1) = self.d.eval(u)?;
        let n = self.patch.normal(u);
        let grad_w = self.patch.surface_gradient(u, &self.w.partials(u));
        let q = grad_w.transpose() * n;
        let re = self.root_e();
        let p = re * (self.iso.a_normal(u) - self.h * q + self.h * d0);
        Ok((p, self.h * re * d1))
    }

    pub fn fiber(&self, u: Param) -> Result<Fiber> {
        let patch = &self.patch;
        let re = self.root_e();
        let h = self.h;
        let (p, d) = self.corrections(u)?;
        let step = patch.fd_step();
        let both = |q: Param| match self.corrections(q) {
            Ok((p, d)) => Matrix3x2::from_columns(&[p, d]),
            Err(_) => Matrix3x2::repeat(f64::NAN),
        };
        let [d1, d2] = diff::partials4(both, u, step);
        let dp = [d1.column(0).into_owned(), d2.column(0).into_owned()];
        let dd = [d1.column(1).into_owned(), d2.column(1).into_owned()];
        if !(d1.iter().chain(d2.iter()).all(|c| c.is_finite())) {
            return Err(Error::Evaluation {
                what: "derivatives of the recovery corrections".into(),
                u: [u.x, u.y],
            });
        }
        let v = self.iso.field();
        Ok(Fiber {
            u,
            x: patch.chart(u),
            n: patch.normal(u),
            jac: patch.jacobian(u),
            dn: patch.normal_partials(u),
            lead: v.value(u) * (re / h) + self.w.value(u) * re,
            dlead: v.partials(u) * (re / h) + self.w.partials(u) * re,
            offset: self.thick.offset(u),
            doffset: self.thick.offset_partials(u),
            p,
            dp,
            d,
            dd,
        })
    }

    /// `y(x + htn) − (x + htn)` on a fibre.
    pub fn offset_displacement(&self, fiber: &Fiber, t: f64) -> Vector3<f64> {
        let s = t - 0.5 * fiber.offset;
        fiber.lead + fiber.p * s + fiber.d * (0.5 * s * s)
    }

    pub fn evaluate(&self, u: Param, t: f64) -> Result<Vector3<f64>> {
        let fiber = self.fiber(u)?;
        Ok(fiber.x + fiber.n * (self.h * t) + self.offset_displacement(&fiber, t))
    }

    /// Partials of `y` along the chart and `t`, as columns `[∂₁y ∂₂y ∂ₜy]`.
    pub fn coordinate_partials(&self, fiber: &Fiber, t: f64) -> Matrix3<f64> {
        let frame = self.reference_partials(fiber, t);
        frame + self.offset_partials(fiber, t)
    }

    /// Partials of `x + htn`.
    fn reference_partials(&self, fiber: &Fiber, t: f64) -> Matrix3<f64> {
        let h = self.h;
        Matrix3::from_columns(&[
            fiber.jac.column(0) + fiber.dn.column(0) * (h * t),
            fiber.jac.column(1) + fiber.dn.column(1) * (h * t),
            fiber.n * h,
        ])
    }

    /// Partials of `y − (x + htn)`.
    fn offset_partials(&self, fiber: &Fiber, t: f64) -> Matrix3<f64> {
        let s = t - 0.5 * fiber.offset;
        let mut cols = [Vector3::zeros(); 3];
        for (i, col) in cols.iter_mut().take(2).enumerate() {
            let ds = -0.5 * fiber.doffset[i];
            *col = fiber.dlead.column(i) + fiber.p * ds + fiber.dp[i] * s + fiber.d * (s * ds) + fiber.dd[i] * (0.5 * s * s);
        }
        cols[2] = fiber.p + fiber.d * s;
        Matrix3::from_columns(&cols)
    }

    /// `∇y − Id` at `x + htn`, formed without cancellation against `Id`.
    pub fn gradient_offset(&self, fiber: &Fiber, t: f64) -> Result<Matrix3<f64>> {
        let z = self.reference_partials(fiber, t);
        let z_inv = z.try_inverse().ok_or(Error::ThicknessTooLarge {
            u: [fiber.u.x, fiber.u.y],
            t: self.h * t,
            det: 0.0,
        })?;
        Ok(self.offset_partials(fiber, t) * z_inv)
    }

    /// `∇y` at `x + htn`.
    pub fn gradient(&self, u: Param, t: f64) -> Result<Matrix3<f64>> {
        let fiber = self.fiber(u)?;
        Ok(Matrix3::identity() + self.gradient_offset(&fiber, t)?)
    }
}

/// `E_h = (1/h)∫_{S^h} W(∇y)` and `E_h / e_h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellEnergyValue {
    pub energy: f64,
    pub normalized: f64,
}

pub fn eval_shell_energy(
    rec: &RecoveryDeformation,
    material: &Material,
    squad: &SurfaceQuadrature,
    trule: &TransversalRule,
) -> Result<ShellEnergyValue> {
    eval_rotated_shell_energy(rec, material, squad, trule, &Matrix3::identity())
}

/// Energy of `R ∘ y` for a fixed rotation `R`.
pub fn eval_rotated_shell_energy(
    rec: &RecoveryDeformation,
    material: &Material,
    squad: &SurfaceQuadrature,
    trule: &TransversalRule,
    rotation: &Matrix3<f64>,
) -> Result<ShellEnergyValue> {
    let w = material
        .energy()
        .ok_or_else(|| Error::UnsupportedCase("shell energy needs a stored-energy density, not a bare Q3".into()))?;
    let energy = shell_energy_sum(rec, w, squad, trule, rotation)?;
    Ok(ShellEnergyValue {
        energy,
        normalized: energy / rec.e_h,
    })
}

fn shell_energy_sum(
    rec: &RecoveryDeformation,
    w: &dyn StoredEnergy,
    squad: &SurfaceQuadrature,
    trule: &TransversalRule,
    rotation: &Matrix3<f64>,
) -> Result<f64> {
    let h = rec.h;
    let rotated = *rotation != Matrix3::identity();
    let rot_offset = rotation - Matrix3::identity();
    let mut total = 0.0;
    for (k, node) in squad.nodes.iter().enumerate() {
        let fiber = rec.fiber(node.u)?;
        let (g1, g2) = (rec.thick.g1(node.u), rec.thick.g2(node.u));
        let mut fibre_sum = 0.0;
        for (j, (t, wt)) in trule.nodes(g1, g2).into_iter().enumerate() {
            let (_, det) = offset_jacobian(&rec.patch, node.u, h * t)?;
            let d = rec.gradient_offset(&fiber, t)?;
            let f = if rotated {
                Matrix3::identity() + rot_offset + rotation * d
            } else {
                Matrix3::identity() + d
            };
            let value = w.energy(&f);
            if !value.is_finite() {
                return Err(Error::EnergyBlowup {
                    node: k,
                    t_node: j,
                    u: [node.u.x, node.u.y],
                    value,
                });
            }
            fibre_sum += wt * det * value;
        }
        total += node.weight * fibre_sum;
    }
    Ok(total)
}

/// `V^h[y](x) = (h/√e) ⨍ y(x + htn) − (x + htn) dt` at one point.
pub fn averaged_displacement_at(rec: &RecoveryDeformation, u: Param, trule: &TransversalRule) -> Result<Vector3<f64>> {
    let re = rec.root_e();
    let lead = rec.iso.field().value(u) * (re / rec.h) + rec.w.value(u) * re;
    let (p, d) = rec.corrections(u)?;
    let (g1, g2) = (rec.thick.g1(u), rec.thick.g2(u));
    let center = 0.5 * rec.thick.offset(u);
    let mut sum = Vector3::zeros();
    for (t, wt) in trule.nodes(g1, g2) {
        let s = t - center;
        sum += (lead + p * s + d * (0.5 * s * s)) * wt;
    }
    Ok(sum * (rec.h / (re * (g1 + g2))))
}

/// `V^h[y]` at every node of the rule.
pub fn averaged_displacement(
    rec: &RecoveryDeformation,
    squad: &SurfaceQuadrature,
    trule: &TransversalRule,
) -> Result<Vec<Vector3<f64>>> {
    squad.nodes.iter().map(|n| averaged_displacement_at(rec, n.u, trule)).collect()
}

/// Diagnostics of the averaged displacement against the inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedDiagnostics {
    /// Discrete `L²` distance between `V^h[y]` and `V`.
    pub displacement_l2: f64,
    /// Max over nodes of `|(1/h) sym∇V^h[y] − B_tan|` in the node frame.
    pub strain_max: f64,
}

pub fn averaged_diagnostics(
    rec: &RecoveryDeformation,
    strain: &StrainField,
    squad: &SurfaceQuadrature,
    trule: &TransversalRule,
) -> Result<AveragedDiagnostics> {
    let patch = &rec.patch;
    let h = rec.h;
    let v = rec.iso.field();
    let step = patch.fd_step();
    let mut l2 = 0.0;
    let mut strain_max = 0.0f64;
    for node in &squad.nodes {
        let u = node.u;
        let vh = averaged_displacement_at(rec, u, trule)?;
        l2 += node.weight * (vh - v.value(u)).norm_squared();
        // (V^h − V)/h is differentiated numerically; ∇V is exact
        let excess = |q: Param| match averaged_displacement_at(rec, q, trule) {
            Ok(x) => (x - v.value(q)) / h,
            Err(_) => nan3(),
        };
        let [e1, e2] = diff::partials4(excess, u, step);
        let grad = patch.surface_gradient(u, &Matrix3x2::from_columns(&[e1, e2]))
            + patch.surface_gradient(u, &v.partials(u)) / h;
        let m = node.frame.minor(&grad);
        let sym: Matrix2<f64> = 0.5 * (m + m.transpose());
        let err = (sym - strain.b_tan(u, &node.frame)).norm();
        if !err.is_finite() {
            return Err(Error::Evaluation {
                what: "averaged strain".into(),
                u: [u.x, u.y],
            });
        }
        strain_max = strain_max.max(err);
    }
    Ok(AveragedDiagnostics {
        displacement_l2: l2.sqrt(),
        strain_max,
    })
}

/// `sup ‖∇y − Id‖` over the nodes of both rules.
pub fn max_gradient_deviation(
    rec: &RecoveryDeformation,
    squad: &SurfaceQuadrature,
    trule: &TransversalRule,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for node in &squad.nodes {
        let fiber = rec.fiber(node.u)?;
        for (t, _) in trule.nodes(rec.thick.g1(node.u), rec.thick.g2(node.u)) {
            worst = worst.max(rec.gradient_offset(&fiber, t)?.norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::fields::{FieldSpec, TrigMode};
    use crate::geometry::ScalarProfile;
    use crate::kinematics::{build_isometry, DEFAULT_ISOMETRY_TOL};
    use crate::limit2d::eval_i;
    use crate::material::make_isotropic;

    fn material(mu: f64, lambda: f64) -> Material {
        Material::Isotropic(make_isotropic(mu, lambda).unwrap())
    }

    fn iso(p: &SurfacePatch, spec: FieldSpec) -> IsometryField {
        let q = SurfaceQuadrature::new(p, 6);
        build_isometry(p, spec.build(p).unwrap(), &q, DEFAULT_ISOMETRY_TOL).unwrap()
    }

    fn unit_plate() -> SurfacePatch {
        SurfacePatch::plate([0.0, 1.0], [0.0, 1.0]).unwrap()
    }

    fn in_plane_w() -> FieldSpec {
        FieldSpec::Trig {
            modes: vec![TrigMode {
                amplitude: [0.2, -0.1, 0.05],
                k: [1.0, 1.0],
                phase: [0.2, 0.4],
            }],
        }
    }

    fn variable_thickness() -> ThicknessPair {
        ThicknessPair::new(
            ScalarProfile::Affine { c0: 0.4, c1: 0.1, c2: -0.05 },
            ScalarProfile::Trig { mean: 0.6, amplitude: 0.05, k: [1.0, 1.0], phase: [0.3, 0.0] },
            2.0,
        )
    }

    #[test]
    fn zero_inputs_give_zero_d_fields() {
        let p = SurfacePatch::sphere_cap(1.0, 1.0).unwrap();
        let d = build_d_fields(&p, &material(1.0, 1.0), &iso(&p, FieldSpec::Zero), &StrainField::zero(&p), &ThicknessPair::symmetric(0.5), 1.0).unwrap();
        let (d0, d1) = d.eval(Param::new(0.4, 2.0)).unwrap();
        assert_eq!(d0, Vector3::zeros());
        assert_eq!(d1, Vector3::zeros());
    }

    #[test]
    fn rigid_sphere_d_fields() {
        let p = SurfacePatch::sphere_cap(1.0, 1.2).unwrap();
        let omega = Vector3::new(0.3, -0.4, 0.8);
        let v = iso(&p, FieldSpec::rigid([omega.x, omega.y, omega.z], [0.0; 3]));
        let kappa = 1.3;
        let w_mat = crate::fields::skew(&omega);
        let w2 = w_mat * w_mat;
        // B_tan = (κ/2)(W²)_tan cancels the A² part of the stretching tensor
        let strain = StrainField::direct(move |_| w2 * (0.5 * kappa));
        let d = build_d_fields(&p, &material(1.0, 1.0), &v, &strain, &ThicknessPair::symmetric(0.5), kappa).unwrap();
        for u in [Param::new(0.3, 0.5), Param::new(1.0, 4.0)] {
            let n = p.normal(u);
            let (d0, d1) = d.eval(u).unwrap();
            let expected = kappa * w2 * n - 0.5 * kappa * n.dot(&(w2 * n)) * n;
            assert!((d0 - expected).norm() < 1e-12, "{d0} vs {expected}");
            assert!(d1.norm() < 1e-12);
        }
    }

    #[test]
    fn plate_without_lambda_has_frame_only_d1() {
        let p = unit_plate();
        let v = iso(&p, FieldSpec::plate_bump());
        let d = build_d_fields(&p, &material(1.0, 0.0), &v, &StrainField::zero(&p), &ThicknessPair::symmetric(0.5), 1.0).unwrap();
        let u = Param::new(0.3, 0.7);
        let (_, d1) = d.eval(u).unwrap();
        // c vanishes for tangential inputs when λ = 0, and on the plate
        // Π = 0 and nᵀ∇(An) = 0 since An stays in-plane
        assert!(d1.norm() < 1e-12, "{d1}");
        // d0 = 2c(½∇w⊗∇w) + κA²n − (κ/2)(nᵀA²n)n; with λ = 0 only the frame terms stay
        let (d0, _) = d.eval(u).unwrap();
        let gw = Vector3::new(PI * (PI * u.x).cos() * (PI * u.y).sin(), PI * (PI * u.x).sin() * (PI * u.y).cos(), 0.0);
        let expected = Vector3::new(0.0, 0.0, -0.5 * gw.norm_squared());
        assert!((d0 - expected).norm() < 1e-12, "{d0} vs {expected}");
    }

    #[test]
    fn normal_term_equals_a_n() {
        // ΠV_tan − ∇(V·n) = A n for infinitesimal isometries
        let cases = [
            (unit_plate(), FieldSpec::plate_bump()),
            (SurfacePatch::sphere_cap(1.5, 1.0).unwrap(), FieldSpec::rigid([0.2, 0.9, -0.3], [1.0, 0.0, 0.5])),
            (SurfacePatch::cylinder(2.0, 1.0, PI).unwrap(), FieldSpec::rigid([1.0, 0.0, 0.2], [0.0; 3])),
        ];
        for (p, spec) in cases {
            let v = iso(&p, spec);
            for u in [Param::new(0.3, 0.4), Param::new(0.7, 0.6)] {
                let n = p.normal(u);
                let vv = v.displacement(u);
                let pi = p.shape_operator(u);
                let v_tan = vv - n * n.dot(&vv);
                let dot = |q: Param| Vector3::new(v.displacement(q).dot(&p.normal(q)), 0.0, 0.0);
                let [a, b] = diff::partials4(dot, u, 1e-3);
                let grad = p.dual_basis(u) * Vector2::new(a.x, b.x);
                let lhs = pi * v_tan - grad;
                assert!((lhs - v.a_normal(u)).norm() < 1e-9, "{lhs} vs {}", v.a_normal(u));
            }
        }
    }

    #[test]
    fn identity_when_nothing_moves() {
        let p = SurfacePatch::sphere_cap(1.0, 1.0).unwrap();
        let m = material(1.0, 1.0);
        let rec = build_recovery(&p, &m, &iso(&p, FieldSpec::Zero), &StrainField::zero(&p), &ThicknessPair::symmetric(0.5), 0.1, 1e-4, 1.0).unwrap();
        let u = Param::new(0.5, 1.0);
        let y = rec.evaluate(u, 0.3).unwrap();
        assert!((y - (p.chart(u) + p.normal(u) * 0.03)).norm() < 1e-15);
        assert!((rec.gradient(u, 0.3).unwrap() - Matrix3::identity()).norm() < 1e-15);
        let e = eval_shell_energy(&rec, &m, &SurfaceQuadrature::new(&p, 4), &TransversalRule::new(3)).unwrap();
        assert_eq!(e.energy, 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cases = [
            (unit_plate(), FieldSpec::plate_bump(), variable_thickness()),
            (SurfacePatch::sphere_cap(1.0, 1.0).unwrap(), FieldSpec::rigid([0.1, 0.5, 0.7], [0.0; 3]), variable_thickness()),
            (SurfacePatch::cylinder(1.5, 1.0, PI).unwrap(), FieldSpec::rigid([0.0, 1.0, 0.0], [0.0; 3]), ThicknessPair::symmetric(0.5)),
        ];
        for (p, spec, thick) in cases {
            let v = iso(&p, spec);
            let strain = StrainField::from_generator(&p, in_plane_w().build(&p).unwrap());
            let h = 0.1;
            let rec = build_recovery(&p, &material(1.0, 1.0), &v, &strain, &thick, h, h.powi(4), 1.0).unwrap();
            let (lo, hi) = p.domain();
            for _ in 0..20 {
                let u = Param::new(rng.random_range(lo.x + 0.1..hi.x - 0.1), rng.random_range(lo.y + 0.1..hi.y - 0.1));
                let t = rng.random_range(-thick.g1(u)..thick.g2(u));
                let fiber = rec.fiber(u).unwrap();
                let analytic = rec.coordinate_partials(&fiber, t);
                let step = 1e-4;
                let [du1, du2] = diff::partials4(|q| rec.evaluate(q, t).unwrap(), u, step);
                let dt = (rec.evaluate(u, t + step).unwrap() - rec.evaluate(u, t - step).unwrap()) / (2.0 * step);
                let fd = Matrix3::from_columns(&[du1, du2, dt]);
                let err = (analytic - fd).norm() / analytic.norm();
                assert!(err < 1e-6, "{:?}: relative error {err}", p.spec());
            }
        }
    }

    #[test]
    fn rotation_leaves_energy_unchanged() {
        let p = unit_plate();
        let m = material(1.0, 1.0);
        let v = iso(&p, FieldSpec::plate_bump());
        let strain = StrainField::from_generator(&p, in_plane_w().build(&p).unwrap());
        let h = 0.125;
        let rec = build_recovery(&p, &m, &v, &strain, &variable_thickness(), h, h.powi(4), 1.0).unwrap();
        let sq = SurfaceQuadrature::new(&p, 6);
        let tr = TransversalRule::new(3);
        let base = eval_shell_energy(&rec, &m, &sq, &tr).unwrap();
        let r = crate::material::rotation_from_axis_angle(&Vector3::new(1.0, -2.0, 0.5), 0.9);
        let rotated = eval_rotated_shell_energy(&rec, &m, &sq, &tr, &r).unwrap();
        assert!((base.energy - rotated.energy).abs() <= 1e-10 * base.energy, "{} vs {}", base.energy, rotated.energy);
    }

    #[test]
    fn tabulated_material_has_no_shell_energy() {
        let p = unit_plate();
        let m = Material::Tabulated(crate::material::QuadForm3::isotropic(1.0, 1.0));
        let rec = build_recovery(&p, &m, &iso(&p, FieldSpec::Zero), &StrainField::zero(&p), &ThicknessPair::symmetric(0.5), 0.1, 1e-4, 1.0).unwrap();
        let err = eval_shell_energy(&rec, &m, &SurfaceQuadrature::new(&p, 2), &TransversalRule::new(2)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedCase(_)));
    }

    #[test]
    fn plate_energy_approaches_limit() {
        let p = unit_plate();
        let m = material(1.0, 1.0);
        let v = iso(&p, FieldSpec::plate_bump());
        let strain = StrainField::zero(&p);
        let thick = ThicknessPair::symmetric(0.5);
        let sq = SurfaceQuadrature::new(&p, 8);
        let tr = TransversalRule::new(4);
        let limit = eval_i(&p, &thick, &m, &v, &strain, 1.0, &sq).unwrap().total;
        let mut last = f64::INFINITY;
        for k in 3..=6 {
            let h = 0.5f64.powi(k);
            let rec = build_recovery(&p, &m, &v, &strain, &thick, h, h.powi(4), 1.0).unwrap();
            let e = eval_shell_energy(&rec, &m, &sq, &tr).unwrap();
            let gap = (e.normalized - limit).abs() / limit;
            assert!(gap < last, "h = {h}: gap {gap} (previous {last})");
            last = gap;
        }
        assert!(last < 0.05, "{last}");
    }

    #[test]
    fn averaged_displacement_recovers_v_and_strain() {
        let m = material(1.0, 1.0);
        let cases = [
            (unit_plate(), FieldSpec::plate_bump(), ThicknessPair::symmetric(0.5)),
            (SurfacePatch::sphere_cap(1.0, 1.0).unwrap(), FieldSpec::rigid([0.3, 0.1, 1.0], [0.0; 3]), variable_thickness()),
        ];
        for (p, spec, thick) in cases {
            let v = iso(&p, spec);
            let strain = StrainField::from_generator(&p, in_plane_w().build(&p).unwrap());
            let sq = SurfaceQuadrature::new(&p, 5);
            let tr = TransversalRule::new(3);
            let mut last = (f64::INFINITY, f64::INFINITY);
            for k in 3..=7 {
                let h = 0.5f64.powi(k);
                let rec = build_recovery(&p, &m, &v, &strain, &thick, h, h.powi(4), 1.0).unwrap();
                let diag = averaged_diagnostics(&rec, &strain, &sq, &tr).unwrap();
                // the plate strain error is exact up to roundoff
                let strain_ok = diag.strain_max < last.1 || diag.strain_max < 1e-9;
                assert!(diag.displacement_l2 < last.0 && strain_ok, "{:?}, h = {h}: {diag:?}", p.spec());
                last = (diag.displacement_l2, diag.strain_max);
            }
        }
    }
}
