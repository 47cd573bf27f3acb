//! The limit functional
//!
//! `I(V, B) = ½∫(g₁+g₂) Q₂(stretching) + (1/24)∫(g₁+g₂)³ Q₂(bending)`,
//!
//! its bending-only form `Ĩ`, and the total functional with a dead load
//! `J(V, B, Q̄) = I(V, B) − ∫(g₁+g₂) f·Q̄V + r(Q̄)`.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::geometry::{integrate_surface, SurfacePatch, SurfaceQuadrature, ThicknessPair};
use crate::kinematics::{bending_tensor, stretching_tensor, IsometryField, StrainField};
use crate::material::{reduce_q2_in_frame, Material, QuadForm2};

/// Terms of `I` or `J`. `total = stretching + bending − load_term + relaxation_term`;
/// without a load the last two are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LimitEnergyBreakdown {
    pub stretching: f64,
    pub bending: f64,
    pub total: f64,
    /// `∫(g₁+g₂) f·Q̄V`.
    pub load_term: f64,
    pub relaxation_term: f64,
}

/// `Q2` at every node of the rule, in the node's frame.
pub fn node_forms(material: &Material, quad: &SurfaceQuadrature) -> Result<Vec<QuadForm2>> {
    let q3 = material.q3();
    quad.nodes.iter().map(|n| reduce_q2_in_frame(&q3, &n.frame)).collect()
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("kappa must be finite and nonnegative, got {kappa}")))
    }
}

/// `I(V, B_tan)`.
pub fn eval_i(
    patch: &SurfacePatch,
    thick: &ThicknessPair,
    material: &Material,
    iso: &IsometryField,
    strain: &StrainField,
    kappa: f64,
    quad: &SurfaceQuadrature,
) -> Result<LimitEnergyBreakdown> {
    check_kappa(kappa)?;
    let forms = node_forms(material, quad)?;
    let mut index = 0usize..;
    let stretching = integrate_surface(patch, quad, |node| {
        let q2 = &forms[index.next().unwrap()];
        let g = thick.total(node.u);
        0.5 * g * q2.apply_tangential(&stretching_tensor(iso, strain, thick, kappa, node.u))
    })?;
    let bending = bending_integral(patch, thick, iso, quad, &forms)?;
    Ok(LimitEnergyBreakdown {
        stretching,
        bending,
        total: stretching + bending,
        load_term: 0.0,
        relaxation_term: 0.0,
    })
}

fn bending_integral(
    patch: &SurfacePatch,
    thick: &ThicknessPair,
    iso: &IsometryField,
    quad: &SurfaceQuadrature,
    forms: &[QuadForm2],
) -> Result<f64> {
    let mut index = 0usize..;
    integrate_surface(patch, quad, |node| {
        let q2 = &forms[index.next().unwrap()];
        let g = thick.total(node.u);
        g * g * g / 24.0 * q2.apply_tangential(&bending_tensor(iso, node.u))
    })
}

/// `Ĩ(V)`: the bending part of `I` alone.
pub fn eval_i_tilde(
    patch: &SurfacePatch,
    thick: &ThicknessPair,
    material: &Material,
    iso: &IsometryField,
    quad: &SurfaceQuadrature,
) -> Result<f64> {
    let forms = node_forms(material, quad)?;
    bending_integral(patch, thick, iso, quad, &forms)
}

/// Orthogonality and orientation check for a would-be rotation.
pub fn check_rotation(q: &Matrix3<f64>, tol: f64) -> Result<()> {
    let orth = (q.transpose() * q - Matrix3::identity()).amax();
    let det = q.determinant();
    if orth <= tol && (det - 1.0).abs() <= tol {
        Ok(())
    } else {
        Err(Error::param(format!(
            "matrix is not a rotation (orthogonality residual {orth:e}, det {det})"
        )))
    }
}

/// `J(V, B_tan, Q̄)` with `r(Q̄)` supplied by the caller.
#[allow(clippy::too_many_arguments)]
pub fn eval_j(
    patch: &SurfacePatch,
    thick: &ThicknessPair,
    material: &Material,
    iso: &IsometryField,
    strain: &StrainField,
    kappa: f64,
    f: &dyn VectorField,
    qbar: &Matrix3<f64>,
    r_value: f64,
    quad: &SurfaceQuadrature,
) -> Result<LimitEnergyBreakdown> {
    check_rotation(qbar, 1e-10)?;
    if !r_value.is_finite() {
        return Err(Error::param(format!("relaxation value must be finite, got {r_value}")));
    }
    let mut out = eval_i(patch, thick, material, iso, strain, kappa, quad)?;
    out.load_term = integrate_surface(patch, quad, |node| {
        thick.total(node.u) * f.value(node.u).dot(&(qbar * iso.displacement(node.u)))
    })?;
    out.relaxation_term = r_value;
    out.total = out.stretching + out.bending - out.load_term + r_value;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use nalgebra::{Matrix2, Vector3};
    use proptest::prelude::*;

    use super::*;
    use crate::fields::{zero_field, FieldSpec, FnField, TrigMode};
    use crate::gauss::GaussLegendre;
    use crate::geometry::ScalarProfile;
    use crate::kinematics::{build_isometry, DEFAULT_ISOMETRY_TOL};
    use crate::material::{isotropic_q2_closed_form, make_isotropic};

    fn iso_material(mu: f64, lambda: f64) -> Material {
        Material::Isotropic(make_isotropic(mu, lambda).unwrap())
    }

    fn unit_plate() -> SurfacePatch {
        SurfacePatch::plate([0.0, 1.0], [0.0, 1.0]).unwrap()
    }

    fn iso(p: &SurfacePatch, spec: FieldSpec, quad: &SurfaceQuadrature) -> IsometryField {
        build_isometry(p, spec.build(p).unwrap(), quad, DEFAULT_ISOMETRY_TOL).unwrap()
    }

    #[test]
    fn zero_inputs_give_zero() {
        let p = unit_plate();
        let q = SurfaceQuadrature::new(&p, 6);
        let i = eval_i(
            &p,
            &ThicknessPair::symmetric(0.5),
            &iso_material(1.0, 1.0),
            &iso(&p, FieldSpec::Zero, &q),
            &StrainField::zero(&p),
            1.0,
            &q,
        )
        .unwrap();
        assert_eq!(i, LimitEnergyBreakdown::default());
    }

    #[test]
    fn sphere_rigid_rotation_about_axis() {
        // -(1/2)(W²)_tan = diag(cos²θ, 1)/2 in the (e_θ, e_φ) frame, so with
        // x = cos θ the integrand is (2/3)x⁴ + (1/3)x² + 2/3.
        let theta = 1.0f64;
        let p = SurfacePatch::sphere_cap(1.0, theta).unwrap();
        let q = SurfaceQuadrature::new(&p, 16);
        let v = iso(&p, FieldSpec::rigid([0.0, 0.0, 1.0], [0.0; 3]), &q);
        let out = eval_i(
            &p,
            &ThicknessPair::symmetric(0.5),
            &iso_material(1.0, 1.0),
            &v,
            &StrainField::zero(&p),
            1.0,
            &q,
        )
        .unwrap();
        let c = theta.cos();
        let antiderivative = 2.0 / 15.0 * (1.0 - c.powi(5)) + (1.0 - c.powi(3)) / 9.0 + 2.0 / 3.0 * (1.0 - c);
        let expected = PI * antiderivative;
        assert!(out.bending.abs() < 1e-15, "{}", out.bending);
        assert!((out.stretching - expected).abs() < 1e-11 * expected, "{} vs {expected}", out.stretching);
    }

    #[test]
    fn flat_plate_von_karman_value() {
        let p = unit_plate();
        let order = 12;
        let q = SurfaceQuadrature::new(&p, order);
        let v = iso(&p, FieldSpec::plate_bump(), &q);
        let in_plane = FieldSpec::Trig {
            modes: vec![TrigMode {
                amplitude: [0.2, -0.3, 0.0],
                k: [1.0, 2.0],
                phase: [0.3, 0.0],
            }],
        };
        let strain = StrainField::from_generator(&p, in_plane.build(&p).unwrap());
        let (mu, lambda) = (1.0, 1.0);
        let out = eval_i(&p, &ThicknessPair::symmetric(0.5), &iso_material(mu, lambda), &v, &strain, 1.0, &q).unwrap();

        // plain flat-plate quantities written out by hand
        let gl = GaussLegendre::new(order);
        let (mut stretch, mut bend) = (0.0, 0.0);
        for (x, wx) in gl.on_interval(0.0, 1.0) {
            for (y, wy) in gl.on_interval(0.0, 1.0) {
                let (s1, c1) = (PI * x).sin_cos();
                let (s2, c2) = (PI * y).sin_cos();
                let grad_w = nalgebra::Vector2::new(PI * c1 * s2, PI * s1 * c2);
                let hess = Matrix2::new(-PI * PI * s1 * s2, PI * PI * c1 * c2, PI * PI * c1 * c2, -PI * PI * s1 * s2);
                let a1 = 0.3 + PI * x;
                let a2 = 2.0 * PI * y;
                // v = (0.2, -0.3) sin(πx + 0.3) sin(2πy)
                let dv = Matrix2::new(
                    0.2 * PI * a1.cos() * a2.sin(),
                    0.2 * 2.0 * PI * a1.sin() * a2.cos(),
                    -0.3 * PI * a1.cos() * a2.sin(),
                    -0.3 * 2.0 * PI * a1.sin() * a2.cos(),
                );
                let e = 0.5 * (dv + dv.transpose()) + 0.5 * grad_w * grad_w.transpose();
                stretch += wx * wy * 0.5 * isotropic_q2_closed_form(mu, lambda, &e);
                bend += wx * wy / 24.0 * isotropic_q2_closed_form(mu, lambda, &hess);
            }
        }
        assert!((out.stretching - stretch).abs() < 1e-12 * stretch, "{} vs {stretch}", out.stretching);
        assert!((out.bending - bend).abs() < 1e-12 * bend);
        assert_eq!(out.total, out.stretching + out.bending);
    }

    #[test]
    fn i_tilde_plate_bump() {
        let p = unit_plate();
        let q = SurfaceQuadrature::new(&p, 20);
        let v = iso(&p, FieldSpec::plate_bump(), &q);
        let m = iso_material(1.0, 1.0);
        let thick = ThicknessPair::symmetric(0.5);
        let value = eval_i_tilde(&p, &thick, &m, &v, &q).unwrap();
        // ∫Q2(∇²w) = 2π⁴ + (2/3)π⁴ on the unit square
        let exact = PI.powi(4) / 9.0;
        assert!((value - exact).abs() < 1e-12 * exact, "{value} vs {exact}");
        let bending = eval_i(&p, &thick, &m, &v, &StrainField::zero(&p), 1.0, &q).unwrap().bending;
        assert_eq!(value, bending);
        let doubled = eval_i_tilde(&p, &ThicknessPair::symmetric(1.0), &m, &v, &q).unwrap();
        assert!((doubled - 8.0 * value).abs() < 1e-12 * value);
    }

    #[test]
    fn rigid_sphere_has_no_bending_energy() {
        let p = SurfacePatch::sphere_cap(1.0, 1.2).unwrap();
        let q = SurfaceQuadrature::new(&p, 8);
        let v = iso(&p, FieldSpec::rigid([0.3, -0.2, 0.9], [0.0; 3]), &q);
        let value = eval_i_tilde(&p, &ThicknessPair::symmetric(0.5), &iso_material(1.0, 1.0), &v, &q).unwrap();
        assert!(value < 1e-20, "{value}");
    }

    #[test]
    fn j_reductions() {
        let p = unit_plate();
        let q = SurfaceQuadrature::new(&p, 10);
        let v = iso(&p, FieldSpec::plate_bump(), &q);
        let m = iso_material(1.0, 1.0);
        let thick = ThicknessPair::symmetric(0.5);
        let strain = StrainField::zero(&p);
        let id = Matrix3::identity();
        let i = eval_i(&p, &thick, &m, &v, &strain, 1.0, &q).unwrap();
        let j0 = eval_j(&p, &thick, &m, &v, &strain, 1.0, zero_field().as_ref(), &id, 0.0, &q).unwrap();
        assert_eq!(j0.total, i.total);
        assert_eq!(j0.load_term, 0.0);

        let up = FnField::new(|_| Vector3::new(0.0, 0.0, 1.0), 1e-3);
        let j1 = eval_j(&p, &thick, &m, &v, &strain, 1.0, &up, &id, 0.0, &q).unwrap();
        // ∫ sin(πx) sin(πy) = 4/π²
        assert!((j1.load_term - 4.0 / (PI * PI)).abs() < 1e-12);
        assert!((j1.total - (i.total - j1.load_term)).abs() < 1e-14);

        let zero_v = iso(&p, FieldSpec::Zero, &q);
        let j2 = eval_j(&p, &thick, &m, &zero_v, &strain, 1.0, &up, &id, 0.25, &q).unwrap();
        assert_eq!(j2.load_term, 0.0);
        assert_eq!(j2.total, 0.25);

        let err = eval_j(&p, &thick, &m, &v, &strain, 1.0, &up, &(id * 1.1), 0.0, &q).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
        let reflection = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(eval_j(&p, &thick, &m, &v, &strain, 1.0, &up, &reflection, 0.0, &q).is_err());
    }

    #[test]
    fn quadrature_order_stability() {
        use crate::geometry::DEFAULT_SURFACE_ORDER;
        let m = iso_material(1.0, 1.0);
        let thick = ThicknessPair::symmetric(0.5);
        let sphere = SurfacePatch::sphere_cap(1.0, 1.0).unwrap();
        // (patch, V, κ, first order): integrands with high angular content
        // need more than the default number of points
        let cases = [
            (unit_plate(), FieldSpec::plate_bump(), 0.0, DEFAULT_SURFACE_ORDER),
            (sphere.clone(), FieldSpec::rigid([0.0, 0.0, 1.0], [0.0; 3]), 1.0, DEFAULT_SURFACE_ORDER),
            (unit_plate(), FieldSpec::plate_bump(), 1.0, 16),
            (sphere, FieldSpec::rigid([0.2, -0.5, 1.0], [0.0; 3]), 1.0, 16),
        ];
        for (p, spec, kappa, order) in cases {
            let value = |order| {
                let q = SurfaceQuadrature::new(&p, order);
                let v = iso(&p, spec.clone(), &q);
                eval_i(&p, &thick, &m, &v, &StrainField::zero(&p), kappa, &q).unwrap().total
            };
            let (a, b) = (value(order), value(order + 4));
            assert!((a - b).abs() < 1e-8 * b, "{:?}, order {order}: {a} vs {b}", p.spec());
        }
    }

    #[test]
    fn centered_thickness_only_sees_the_sum() {
        let p = SurfacePatch::sphere_cap(1.0, 1.0).unwrap();
        let q = SurfaceQuadrature::new(&p, 8);
        let v = iso(&p, FieldSpec::rigid([0.3, 0.4, 0.5], [0.0; 3]), &q);
        let m = iso_material(1.0, 0.5);
        let strain = StrainField::zero(&p);
        let a = eval_i(&p, &ThicknessPair::symmetric(0.5), &m, &v, &strain, 1.0, &q).unwrap();
        let pair = ThicknessPair::new(ScalarProfile::constant(0.5), ScalarProfile::constant(0.5), 1.0);
        let b = eval_i(&p, &pair, &m, &v, &strain, 1.0, &q).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_kappa() {
        let p = unit_plate();
        let q = SurfaceQuadrature::new(&p, 4);
        let v = iso(&p, FieldSpec::Zero, &q);
        let m = iso_material(1.0, 1.0);
        for kappa in [-1.0, f64::NAN] {
            let err = eval_i(&p, &ThicknessPair::symmetric(0.5), &m, &v, &StrainField::zero(&p), kappa, &q);
            assert!(err.is_err());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn limit_energy_is_nonnegative(
            a in -1.0f64..1.0, b in -1.0f64..1.0, k1 in 1.0f64..3.0,
            kappa in 0.0f64..2.0, mu in 0.2f64..3.0, lambda in 0.0f64..3.0,
        ) {
            let p = unit_plate();
            let q = SurfaceQuadrature::new(&p, 6);
            let v = FieldSpec::Trig { modes: vec![TrigMode { amplitude: [0.0, 0.0, a], k: [k1, 1.0], phase: [0.0, 0.0] }] };
            let w = FieldSpec::Trig { modes: vec![TrigMode { amplitude: [b, a, 0.0], k: [1.0, k1], phase: [0.1, 0.0] }] };
            let v = iso(&p, v, &q);
            let strain = StrainField::from_generator(&p, w.build(&p).unwrap());
            let out = eval_i(&p, &ThicknessPair::symmetric(0.5), &iso_material(mu, lambda), &v, &strain, kappa, &q).unwrap();
            prop_assert!(out.stretching >= 0.0 && out.bending >= 0.0);
            prop_assert_eq!(out.total, out.stretching + out.bending);
        }
    }
}
