//! Stored-energy densities and their quadratic forms.
//!
//! `Q3(F) = D²W(Id)(F, F)` is stored as a symmetric 6×6 matrix acting on
//! Mandel coordinates of `sym F`:
//! `(S₁₁, S₂₂, S₃₃, √2 S₂₃, √2 S₁₃, √2 S₁₂)`, so that `|S|² = |v|²`.
//! `Q2(x, ·)` relaxes `Q3` over normal corrections `c ⊗ n + n ⊗ c` and is
//! stored on the 2D Mandel coordinates `(F₁₁, F₂₂, √2 F₁₂)` of the
//! tangential minor in a fixed orthonormal frame.

use std::f64::consts::SQRT_2;
use std::fmt::Debug;

use nalgebra::{Matrix2, Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TangentFrame;

/// A frame-indifferent stored-energy density `W: ℝ^{3×3} → [0, ∞)`.
pub trait StoredEnergy: Send + Sync + Debug {
    fn energy(&self, f: &Matrix3<f64>) -> f64;

    /// Constant `C` with `W(F) ≥ C dist²(F, SO(3))` near `SO(3)`.
    fn coercivity_constant(&self) -> f64;

    /// Closed-form `D²W(Id)` when known.
    fn hessian_at_identity(&self) -> Option<QuadForm3> {
        None
    }
}

/// `W(F) = (μ/4)|FᵀF − Id|² + (λ/8)(tr(FᵀF − Id))²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicEnergy {
    pub mu: f64,
    pub lambda: f64,
}

pub fn make_isotropic(mu: f64, lambda: f64) -> Result<IsotropicEnergy> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::param(format!("mu must be positive, got {mu}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::param(format!("lambda must be nonnegative, got {lambda}")));
    }
    Ok(IsotropicEnergy { mu, lambda })
}

impl StoredEnergy for IsotropicEnergy {
    fn energy(&self, f: &Matrix3<f64>) -> f64 {
        // FᵀF − Id = sym-part doubling plus the quadratic term, formed
        // without cancellation against the identity
        let d = f - Matrix3::identity();
        let strain = d + d.transpose() + d.transpose() * d;
        let tr = strain.trace();
        0.25 * self.mu * strain.norm_squared() + 0.125 * self.lambda * tr * tr
    }

    fn coercivity_constant(&self) -> f64 {
        0.25 * self.mu
    }

    fn hessian_at_identity(&self) -> Option<QuadForm3> {
        Some(QuadForm3::isotropic(self.mu, self.lambda))
    }
}

/// Mandel coordinates of `sym F`.
pub fn mandel(f: &Matrix3<f64>) -> Vector6<f64> {
    let s = 0.5 * (f + f.transpose());
    Vector6::new(
        s[(0, 0)],
        s[(1, 1)],
        s[(2, 2)],
        SQRT_2 * s[(1, 2)],
        SQRT_2 * s[(0, 2)],
        SQRT_2 * s[(0, 1)],
    )
}

/// Symmetric matrix with the given Mandel coordinates.
pub fn from_mandel(v: &Vector6<f64>) -> Matrix3<f64> {
    let r = 1.0 / SQRT_2;
    Matrix3::new(
        v[0],
        r * v[5],
        r * v[4],
        r * v[5],
        v[1],
        r * v[3],
        r * v[4],
        r * v[3],
        v[2],
    )
}

fn mandel2(f: &Matrix2<f64>) -> Vector3<f64> {
    Vector3::new(f[(0, 0)], f[(1, 1)], SQRT_2 * 0.5 * (f[(0, 1)] + f[(1, 0)]))
}

/// The Hessian quadratic form `Q3` on symmetric matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm3 {
    pub matrix: Matrix6<f64>,
}

impl QuadForm3 {
    /// Wraps a symmetric 6×6 Mandel matrix.
    pub fn new(matrix: Matrix6<f64>) -> Result<Self> {
        let asym = (matrix - matrix.transpose()).amax();
        if asym > 1e-12 * matrix.amax().max(1.0) {
            return Err(Error::param(format!("Q3 matrix is not symmetric ({asym:e})")));
        }
        let q = QuadForm3 { matrix };
        if q.min_eigenvalue() <= 0.0 {
            return Err(Error::DegenerateMaterial(
                "Q3 is not positive definite on symmetric matrices".into(),
            ));
        }
        Ok(q)
    }

    /// `2μ|sym F|² + λ(tr F)²`.
    pub fn isotropic(mu: f64, lambda: f64) -> Self {
        let mut m = Matrix6::identity() * (2.0 * mu);
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += lambda;
            }
        }
        QuadForm3 { matrix: m }
    }

    /// From the 21 upper-triangular entries, row by row.
    pub fn from_upper_triangle(entries: &[f64]) -> Result<Self> {
        if entries.len() != 21 {
            return Err(Error::param(format!(
                "Q3 needs 21 upper-triangular entries, got {}",
                entries.len()
            )));
        }
        let mut m = Matrix6::zeros();
        let mut k = 0;
        for i in 0..6 {
            for j in i..6 {
                m[(i, j)] = entries[k];
                m[(j, i)] = entries[k];
                k += 1;
            }
        }
        Self::new(m)
    }

    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(21);
        for i in 0..6 {
            for j in i..6 {
                out.push(self.matrix[(i, j)]);
            }
        }
        out
    }

    pub fn apply(&self, f: &Matrix3<f64>) -> f64 {
        let v = mandel(f);
        v.dot(&(self.matrix * v))
    }

    pub fn bilinear(&self, f: &Matrix3<f64>, g: &Matrix3<f64>) -> f64 {
        mandel(f).dot(&(self.matrix * mandel(g)))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.symmetric_eigenvalues().min()
    }
}

/// Assembles `Q3` from central second differences of `W` at the identity.
pub fn q3_from_energy(energy: &dyn StoredEnergy, step: f64) -> Result<QuadForm3> {
    let basis: Vec<Matrix3<f64>> = (0..6)
        .map(|k| {
            let mut v = Vector6::zeros();
            v[k] = 1.0;
            from_mandel(&v)
        })
        .collect();
    let id = Matrix3::identity();
    let w = |m: Matrix3<f64>| energy.energy(&(id + m));
    let w0 = w(Matrix3::zeros());
    let mut m = Matrix6::zeros();
    for k in 0..6 {
        for l in 0..6 {
            let (a, b) = (basis[k] * step, basis[l] * step);
            m[(k, l)] = if k == l {
                (w(a) - 2.0 * w0 + w(-a)) / (step * step)
            } else {
                (w(a + b) - w(a - b) - w(b - a) + w(-a - b)) / (4.0 * step * step)
            };
        }
    }
    let asymmetry = (m - m.transpose()).amax();
    if !(asymmetry <= 1e-8) {
        return Err(Error::DifferentiationFailure { asymmetry });
    }
    let m = 0.5 * (m + m.transpose());
    Ok(QuadForm3 { matrix: m })
}

/// The relaxed tangential form `Q2(x, ·)` and the minimizer map `c(x, ·)`
/// for one tangent frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm2 {
    pub frame: TangentFrame,
    /// Form on 2D Mandel coordinates of the tangential minor.
    pub form: Matrix3<f64>,
    /// Linear map from 2D Mandel coordinates to the ambient vector `c`.
    pub minimizer_map: Matrix3<f64>,
}

impl QuadForm2 {
    pub fn apply_tangential(&self, f_tan: &Matrix2<f64>) -> f64 {
        let v = mandel2(f_tan);
        v.dot(&(self.form * v))
    }

    /// `c(x, F_tan)`: the unique minimizer of `Q3(F_tan + c⊗n + n⊗c)`.
    pub fn minimizer(&self, f_tan: &Matrix2<f64>) -> Vector3<f64> {
        self.minimizer_map * mandel2(f_tan)
    }

    /// `Q2` of the tangential minor of an ambient matrix.
    pub fn apply_ambient(&self, f: &Matrix3<f64>) -> f64 {
        self.apply_tangential(&self.frame.minor(f))
    }

    pub fn minimizer_ambient(&self, f: &Matrix3<f64>) -> Vector3<f64> {
        self.minimizer(&self.frame.minor(f))
    }
}

/// Orthonormal frame completing a unit normal.
pub fn frame_from_normal(n: &Vector3<f64>) -> TangentFrame {
    let n = n.normalize();
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (helper - n * n.dot(&helper)).normalize();
    let e2 = n.cross(&e1);
    TangentFrame { e1, e2, n }
}

/// Reduces `Q3` for the normal `n`, using [`frame_from_normal`].
pub fn reduce_q2(q3: &QuadForm3, n: &Vector3<f64>) -> Result<QuadForm2> {
    reduce_q2_in_frame(q3, &frame_from_normal(n))
}

/// Reduces `Q3` in a given frame by solving the 3×3 normal-coupling system.
pub fn reduce_q2_in_frame(q3: &QuadForm3, frame: &TangentFrame) -> Result<QuadForm2> {
    let n = frame.n;
    let coupling: Vec<Vector6<f64>> = (0..3)
        .map(|i| {
            let mut e = Vector3::zeros();
            e[i] = 1.0;
            mandel(&(e * n.transpose() + n * e.transpose()))
        })
        .collect();
    let r = 1.0 / SQRT_2;
    let tangential = [
        mandel(&(frame.e1 * frame.e1.transpose())),
        mandel(&(frame.e2 * frame.e2.transpose())),
        mandel(&((frame.e1 * frame.e2.transpose() + frame.e2 * frame.e1.transpose()) * r)),
    ];
    let m = &q3.matrix;
    let mut k = Matrix3::zeros();
    let mut b = Matrix3::zeros();
    let mut qtt = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            k[(i, j)] = coupling[i].dot(&(m * coupling[j]));
            b[(i, j)] = coupling[i].dot(&(m * tangential[j]));
            qtt[(i, j)] = tangential[i].dot(&(m * tangential[j]));
        }
    }
    let chol = k.cholesky().ok_or_else(|| {
        Error::DegenerateMaterial(format!("coupling block not positive definite for n = {n:?}"))
    })?;
    let minimizer_map = -chol.solve(&b);
    let form = qtt + b.transpose() * minimizer_map;
    let form = 0.5 * (form + form.transpose());
    Ok(QuadForm2 {
        frame: *frame,
        form,
        minimizer_map,
    })
}

/// `2μ|sym F|² + (2μλ/(2μ+λ))(tr F)²`: the isotropic `Q2` in closed form.
pub fn isotropic_q2_closed_form(mu: f64, lambda: f64, f_tan: &Matrix2<f64>) -> f64 {
    let s = 0.5 * (f_tan + f_tan.transpose());
    let tr = s.trace();
    2.0 * mu * s.norm_squared() + 2.0 * mu * lambda / (2.0 * mu + lambda) * tr * tr
}

/// Material block of a study: a density `W`, or a bare `Q3` without `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialSpec {
    Isotropic { mu: f64, lambda: f64 },
    Q3 { matrix: Vec<f64> },
}

/// A resolved material.
#[derive(Debug, Clone)]
pub enum Material {
    Isotropic(IsotropicEnergy),
    Tabulated(QuadForm3),
}

impl Material {
    pub fn from_spec(spec: &MaterialSpec) -> Result<Self> {
        match spec {
            MaterialSpec::Isotropic { mu, lambda } => Ok(Material::Isotropic(make_isotropic(*mu, *lambda)?)),
            MaterialSpec::Q3 { matrix } => Ok(Material::Tabulated(QuadForm3::from_upper_triangle(matrix)?)),
        }
    }

    pub fn q3(&self) -> QuadForm3 {
        match self {
            Material::Isotropic(w) => QuadForm3::isotropic(w.mu, w.lambda),
            Material::Tabulated(q) => *q,
        }
    }

    /// The density, when the material has one.
    pub fn energy(&self) -> Option<&dyn StoredEnergy> {
        match self {
            Material::Isotropic(w) => Some(w),
            Material::Tabulated(_) => None,
        }
    }
}

/// Rotation by `angle` about `axis`.
pub fn rotation_from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle).into_inner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(i: usize, j: usize) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        m[(i, j)] = 1.0;
        m
    }

    #[test]
    fn isotropic_is_stress_free_and_frame_indifferent() {
        let w = make_isotropic(1.3, 0.7).unwrap();
        assert_eq!(w.energy(&Matrix3::identity()), 0.0);
        let r = rotation_from_axis_angle(&Vector3::new(0.3, -1.0, 0.4), 1.1);
        assert!(w.energy(&r) < 1e-12);
        let f = Matrix3::new(1.1, 0.2, 0.0, -0.1, 0.9, 0.3, 0.05, 0.0, 1.2);
        assert!((w.energy(&(r * f)) - w.energy(&f)).abs() <= 1e-10 * w.energy(&f));
    }

    #[test]
    fn isotropic_hessian_by_difference_quotient() {
        let w = make_isotropic(1.0, 1.0).unwrap();
        let e11 = e(0, 0);
        let q = QuadForm3::isotropic(1.0, 1.0).apply(&e11);
        assert!((q - 3.0).abs() < 1e-14);
        let s = 1e-4;
        let fd = 2.0 * w.energy(&(Matrix3::identity() + e11 * s)) / (s * s);
        assert!((fd - 3.0).abs() < 1e-3);
    }

    #[test]
    fn skew_matrices_carry_no_energy() {
        let q = QuadForm3::isotropic(1.0, 0.0);
        assert_eq!(q.apply(&(e(0, 1) - e(1, 0))), 0.0);
    }

    #[test]
    fn q3_from_energy_matches_closed_form() {
        let w = make_isotropic(1.0, 0.0).unwrap();
        let q = q3_from_energy(&w, 1e-4).unwrap();
        assert!((q.apply(&(e(0, 1) + e(1, 0))) - 4.0).abs() < 1e-6);
        assert!(q.apply(&(e(0, 2) - e(2, 0))).abs() < 1e-6);
        let w = make_isotropic(1.0, 1.0).unwrap();
        let q = q3_from_energy(&w, 1e-4).unwrap();
        assert!((q.apply(&Matrix3::identity()) - 15.0).abs() < 1e-6);
        let exact = w.hessian_at_identity().unwrap();
        assert!((q.matrix - exact.matrix).amax() < 1e-6);
    }

    #[test]
    fn coercivity_near_rotations() {
        let w = make_isotropic(2.0, 0.5).unwrap();
        let r = rotation_from_axis_angle(&Vector3::new(1.0, 2.0, -0.5), 0.8);
        for k in 0..20 {
            let p = Matrix3::from_fn(|i, j| ((i * 3 + j + k) as f64 * 0.37).sin() * 0.05);
            let f = r * (Matrix3::identity() + p);
            // distance to SO(3) via polar decomposition
            let svd = f.svd(true, true);
            let q = svd.u.unwrap() * svd.v_t.unwrap();
            let dist2 = (f - q).norm_squared();
            assert!(w.energy(&f) >= w.coercivity_constant() * dist2 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn reduce_isotropic_identity_minor() {
        let q3 = QuadForm3::isotropic(1.0, 1.0);
        let q2 = reduce_q2(&q3, &Vector3::z()).unwrap();
        let id = Matrix2::identity();
        assert!((q2.apply_tangential(&id) - 20.0 / 3.0).abs() < 1e-13);
        let c = q2.minimizer(&id);
        assert!((c - Vector3::new(0.0, 0.0, -1.0 / 3.0)).norm() < 1e-14);
        assert_eq!(q2.apply_tangential(&Matrix2::zeros()), 0.0);
        assert_eq!(q2.minimizer(&Matrix2::zeros()), Vector3::zeros());
    }

    #[test]
    fn reduce_decoupled_for_zero_lambda() {
        let q2 = reduce_q2(&QuadForm3::isotropic(1.0, 0.0), &Vector3::new(0.3, -0.2, 0.9)).unwrap();
        let f = Matrix2::new(1.0, 0.0, 0.0, 0.0);
        assert!((q2.apply_tangential(&f) - 2.0).abs() < 1e-13);
        assert!(q2.minimizer(&f).norm() < 1e-14);
    }

    #[test]
    fn degenerate_coupling_is_rejected() {
        // no shear stiffness at all: Q3 only sees the diagonal
        let mut m = Matrix6::zeros();
        for i in 0..3 {
            m[(i, i)] = 1.0;
        }
        let q3 = QuadForm3 { matrix: m };
        assert!(matches!(
            reduce_q2(&q3, &Vector3::z()),
            Err(Error::DegenerateMaterial(_))
        ));
        assert!(QuadForm3::new(m).is_err());
    }

    #[test]
    fn upper_triangle_round_trip() {
        let q = QuadForm3::isotropic(1.5, 0.25);
        let back = QuadForm3::from_upper_triangle(&q.upper_triangle()).unwrap();
        assert_eq!(q, back);
        assert!(QuadForm3::from_upper_triangle(&[1.0; 20]).is_err());
    }

    #[test]
    fn invalid_isotropic_parameters() {
        assert!(make_isotropic(0.0, 1.0).is_err());
        assert!(make_isotropic(1.0, -0.1).is_err());
    }

    fn arb_f2() -> impl Strategy<Value = Matrix2<f64>> {
        prop::array::uniform4(-2.0f64..2.0).prop_map(|a| Matrix2::new(a[0], a[1], a[2], a[3]))
    }

    fn arb_normal() -> impl Strategy<Value = Vector3<f64>> {
        prop::array::uniform3(-1.0f64..1.0)
            .prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-2)
            .prop_map(|a| Vector3::new(a[0], a[1], a[2]).normalize())
    }

    fn anisotropic_q3() -> QuadForm3 {
        let a = Matrix6::from_fn(|i, j| ((i * 7 + j * 3) as f64 * 0.61).sin() * 0.4);
        QuadForm3::new(a * a.transpose() + Matrix6::identity()).unwrap()
    }

    proptest! {
        #[test]
        fn relaxation_bound(f in arb_f2(), n in arb_normal(), c in prop::array::uniform3(-2.0f64..2.0)) {
            for q3 in [QuadForm3::isotropic(1.0, 1.0), anisotropic_q3()] {
                let q2 = reduce_q2(&q3, &n).unwrap();
                let ft = q2.frame.embed(&f);
                let c = Vector3::new(c[0], c[1], c[2]);
                let trial = q3.apply(&(ft + c * n.transpose() + n * c.transpose()));
                let value = q2.apply_tangential(&f);
                prop_assert!(value <= trial + 1e-10 * trial.abs().max(1.0));
                let cm = q2.minimizer(&f);
                let at_min = q3.apply(&(ft + cm * n.transpose() + n * cm.transpose()));
                prop_assert!((at_min - value).abs() <= 1e-10 * value.abs().max(1.0));
            }
        }

        #[test]
        fn minimizer_is_linear(f in arb_f2(), g in arb_f2(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let q2 = reduce_q2_in_frame(&anisotropic_q3(), &frame_from_normal(&Vector3::new(0.2, 0.5, 1.0))).unwrap();
            let lhs = q2.minimizer(&(f * a + g * b));
            let rhs = q2.minimizer(&f) * a + q2.minimizer(&g) * b;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn depends_only_on_symmetric_part(f in arb_f2(), n in arb_normal()) {
            let q2 = reduce_q2(&anisotropic_q3(), &n).unwrap();
            let s = 0.5 * (f + f.transpose());
            prop_assert!((q2.apply_tangential(&f) - q2.apply_tangential(&s)).abs() <= 1e-12 * (1.0 + q2.apply_tangential(&s)));
        }

        #[test]
        fn flipping_the_normal(f in arb_f2(), n in arb_normal()) {
            let q3 = anisotropic_q3();
            let frame = frame_from_normal(&n);
            let flipped = TangentFrame { n: -frame.n, ..frame };
            let a = reduce_q2_in_frame(&q3, &frame).unwrap();
            let b = reduce_q2_in_frame(&q3, &flipped).unwrap();
            prop_assert!((a.apply_tangential(&f) - b.apply_tangential(&f)).abs() <= 1e-10 * (1.0 + a.apply_tangential(&f)));
            prop_assert!((a.minimizer(&f) + b.minimizer(&f)).norm() <= 1e-10 * (1.0 + a.minimizer(&f).norm()));
        }

        #[test]
        fn isotropic_closed_form(f in arb_f2(), n in arb_normal(), mu in 0.1f64..5.0, lambda in 0.0f64..5.0) {
            let q2 = reduce_q2(&QuadForm3::isotropic(mu, lambda), &n).unwrap();
            let exact = isotropic_q2_closed_form(mu, lambda, &f);
            prop_assert!((q2.apply_tangential(&f) - exact).abs() <= 1e-10 * exact.max(1e-300));
        }

        #[test]
        fn q2_positive_definite_on_symmetric(n in arb_normal()) {
            let q2 = reduce_q2(&anisotropic_q3(), &n).unwrap();
            prop_assert!(q2.form.symmetric_eigenvalues().min() > 0.0);
        }
    }
}
