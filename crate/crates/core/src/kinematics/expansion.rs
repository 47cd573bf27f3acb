//! Numerical checks of the second-order stretching and first-order bending
//! expansions of the deformed geometric mid-surface.
//!
//! With `φ̃ʰ = id + (h/2)(g₂ − g₁) n` and `φʰ = φ̃ʰ + hV + h²w`:
//!
//! * `|∂_τφʰ|² − |∂_τφ̃ʰ|² − 2h² τᵀ(sym∇w − ½A² − ½ sym(A∇((g₂−g₁)n)))τ = O(h³)`
//! * the pulled-back shape operators of `φʰ(S)` and `φ̃ʰ(S)` differ by
//!   `h(∂_τ(An) − AΠτ) + O(h²)`.

use nalgebra::{Matrix2, Matrix3x2};

use super::{thickness_gradient_matrix, IsometryField};
use crate::diff;
use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::geometry::{SurfacePatch, SurfaceQuadrature, ThicknessPair};
use crate::Param;

/// Chart partials of `φ̃ʰ ∘ X`.
fn midsurface_partials(patch: &SurfacePatch, thick: &ThicknessPair, h: f64, u: Param) -> Matrix3x2<f64> {
    let n = patch.normal(u);
    let dn = patch.normal_partials(u);
    let d = thick.offset(u);
    let dd = thick.offset_partials(u);
    patch.jacobian(u) + (n * dd.transpose() + dn * d) * (0.5 * h)
}

fn deformed_partials(
    patch: &SurfacePatch,
    iso: &IsometryField,
    w: &dyn VectorField,
    thick: &ThicknessPair,
    h: f64,
    u: Param,
) -> Matrix3x2<f64> {
    midsurface_partials(patch, thick, h, u) + iso.field().partials(u) * h + w.partials(u) * (h * h)
}

/// Chart matrix `S` of the shape operator of a parametrized surface:
/// `∂ᵢ n = Σₖ S_{ki} ∂ₖY`.
fn weingarten<F>(partials: F, u: Param, step: f64) -> Result<Matrix2<f64>>
where
    F: Fn(Param) -> Matrix3x2<f64>,
{
    let normal = |p: Param| {
        let j = partials(p);
        j.column(0).cross(&j.column(1)).normalize()
    };
    let [d0, d1] = diff::partials4(normal, u, step);
    let j = partials(u);
    let g = j.transpose() * j;
    let g_inv = g.try_inverse().filter(|_| g.determinant() > 0.0).ok_or(Error::Evaluation {
        what: "deformed metric".into(),
        u: [u.x, u.y],
    })?;
    let s = g_inv * j.transpose() * Matrix3x2::from_columns(&[d0, d1]);
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            what: "deformed shape operator".into(),
            u: [u.x, u.y],
        });
    }
    Ok(s)
}

/// Chart coordinates of the orthonormal frame vectors: `αₐ = G⁻¹ Jᵀ eₐ`.
fn frame_coordinates(patch: &SurfacePatch, u: Param) -> [nalgebra::Vector2<f64>; 2] {
    let frame = patch.frame(u);
    let dual = patch.dual_basis(u);
    [dual.transpose() * frame.e1, dual.transpose() * frame.e2]
}

/// Max over nodes and frame tangents of the stretching-identity remainder.
pub fn stretching_expansion_residual(
    iso: &IsometryField,
    w: &dyn VectorField,
    thick: &ThicknessPair,
    h: f64,
    quad: &SurfaceQuadrature,
) -> f64 {
    let patch = iso.patch();
    let mut worst = 0.0f64;
    for node in &quad.nodes {
        let u = node.u;
        let mid = midsurface_partials(patch, thick, h, u);
        let dv = iso.field().partials(u);
        let dw = w.partials(u);
        let a = iso.a(u);
        let grad_w = patch.surface_gradient(u, &dw);
        let m = a * thickness_gradient_matrix(patch, thick, u);
        let frame = node.frame;
        for (alpha, tau) in frame_coordinates(patch, u).iter().zip([frame.e1, frame.e2]) {
            let base = mid * alpha;
            let delta = (dv * h + dw * (h * h)) * alpha;
            // |a|² − |b|² = (a − b)·(a + b), formed without cancellation
            let lhs = delta.dot(&(base * 2.0 + delta));
            let quad_form = tau.dot(&(grad_w * tau)) - 0.5 * tau.dot(&(a * a * tau)) - 0.5 * tau.dot(&(m * tau));
            let predicted = 2.0 * h * h * quad_form;
            worst = worst.max((lhs - predicted).abs());
        }
    }
    worst
}

/// Max over nodes and frame tangents of the bending-identity remainder.
pub fn bending_expansion_residual(
    iso: &IsometryField,
    w: &dyn VectorField,
    thick: &ThicknessPair,
    h: f64,
    quad: &SurfaceQuadrature,
) -> Result<f64> {
    let patch = iso.patch();
    let step = patch.fd_step();
    let mut worst = 0.0f64;
    for node in &quad.nodes {
        let u = node.u;
        let s_def = weingarten(|p| deformed_partials(patch, iso, w, thick, h, p), u, step)?;
        let s_mid = weingarten(|p| midsurface_partials(patch, thick, h, p), u, step)?;
        let j = patch.jacobian(u);
        let predicted = iso.a_normal_gradient(u) - iso.a(u) * patch.shape_operator(u);
        let frame = node.frame;
        for (alpha, tau) in frame_coordinates(patch, u).iter().zip([frame.e1, frame.e2]) {
            let lhs = j * ((s_def - s_mid) * alpha);
            let r = (lhs - predicted * tau * h).norm();
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// Max over nodes of `|∂_τV · ∂_τφ̃ʰ + (h/2) τᵀ sym(A∇((g₂−g₁)n)) τ|`, the
/// first-order isometry deficit of `V` on the geometric mid-surface.
pub fn midsurface_deficit_residual(
    iso: &IsometryField,
    thick: &ThicknessPair,
    h: f64,
    quad: &SurfaceQuadrature,
) -> f64 {
    let patch = iso.patch();
    let mut worst = 0.0f64;
    for node in &quad.nodes {
        let u = node.u;
        let mid = midsurface_partials(patch, thick, h, u);
        let dv = iso.field().partials(u);
        let m = iso.a(u) * thickness_gradient_matrix(patch, thick, u);
        let frame = node.frame;
        for (alpha, tau) in frame_coordinates(patch, u).iter().zip([frame.e1, frame.e2]) {
            let lhs: f64 = (dv * alpha).dot(&(mid * alpha));
            let corr = 0.5 * h * tau.dot(&(m * tau));
            worst = worst.max((lhs + corr).abs());
        }
    }
    worst
}
