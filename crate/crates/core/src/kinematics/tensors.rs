use nalgebra::{Matrix2, Matrix3};

use super::{IsometryField, StrainField};
use crate::geometry::{SurfacePatch, ThicknessPair};
use crate::Param;

fn sym2(m: Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (m + m.transpose())
}

/// `∇((g₂ − g₁) n) = n ⊗ ∇(g₂ − g₁) + (g₂ − g₁) Π`.
pub fn thickness_gradient_matrix(patch: &SurfacePatch, thick: &ThicknessPair, u: Param) -> Matrix3<f64> {
    let n = patch.normal(u);
    n * thick.offset_gradient(patch, u).transpose() + patch.shape_operator(u) * thick.offset(u)
}

/// `sym(A ∇((g₂ − g₁) n))_tan`; vanishes when `g₁ = g₂`.
pub fn offset_gradient_term(iso: &IsometryField, thick: &ThicknessPair, u: Param) -> Matrix2<f64> {
    if thick.is_centered() {
        return Matrix2::zeros();
    }
    let patch = iso.patch();
    let m = iso.a(u) * thickness_gradient_matrix(patch, thick, u);
    sym2(patch.frame(u).minor(&m))
}

/// Stretching tensor
/// `B_tan − (κ/2)(A²)_tan − ½ sym(A ∇((g₂ − g₁) n))_tan` in the frame at `u`.
pub fn stretching_tensor(
    iso: &IsometryField,
    strain: &StrainField,
    thick: &ThicknessPair,
    kappa: f64,
    u: Param,
) -> Matrix2<f64> {
    let frame = iso.patch().frame(u);
    let a = iso.a(u);
    let a2 = frame.minor(&(a * a));
    strain.b_tan(u, &frame) - sym2(a2) * (0.5 * kappa) - offset_gradient_term(iso, thick, u) * 0.5
}

/// Bending tensor `sym(∇(A n) − A Π)_tan` in the frame at `u`.
pub fn bending_tensor(iso: &IsometryField, u: Param) -> Matrix2<f64> {
    let patch = iso.patch();
    let m = iso.a_normal_gradient(u) - iso.a(u) * patch.shape_operator(u);
    sym2(patch.frame(u).minor(&m))
}
