use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector3};

use crate::error::{Error, Result};
use crate::fields::FieldRef;
use crate::geometry::{SurfacePatch, SurfaceQuadrature, TangentFrame};
use crate::Param;

/// Isometry tolerance for fields with analytic derivatives.
pub const DEFAULT_ISOMETRY_TOL: f64 = 1e-8;
/// Isometry tolerance for fields differentiated numerically.
pub const FD_ISOMETRY_TOL: f64 = 1e-5;

fn skew_part(m: &Matrix3<f64>) -> Matrix3<f64> {
    0.5 * (m - m.transpose())
}

/// An infinitesimal isometry `V` with its skew field `A`: `∂_τ V = A τ`.
#[derive(Debug, Clone)]
pub struct IsometryField {
    patch: SurfacePatch,
    field: FieldRef,
    tol: f64,
}

/// Checks that `V` is an infinitesimal isometry at every node of `quad`
/// and wraps it.
pub fn build_isometry(
    patch: &SurfacePatch,
    field: FieldRef,
    quad: &SurfaceQuadrature,
    tol: f64,
) -> Result<IsometryField> {
    let iso = IsometryField {
        patch: patch.clone(),
        field,
        tol,
    };
    let mut worst: Option<(usize, f64)> = None;
    for (i, node) in quad.nodes.iter().enumerate() {
        let r = iso.isometry_residual(node.u);
        if !r.is_finite() {
            return Err(Error::Evaluation {
                what: "isometry residual".into(),
                u: [node.u.x, node.u.y],
            });
        }
        if worst.is_none_or(|(_, w)| r > w) {
            worst = Some((i, r));
        }
    }
    if let Some((node, residual)) = worst {
        if residual > tol {
            let u = quad.nodes[node].u;
            return Err(Error::NotAnIsometry {
                node,
                u: [u.x, u.y],
                residual,
                tol,
            });
        }
    }
    Ok(iso)
}

impl IsometryField {
    pub fn patch(&self) -> &SurfacePatch {
        &self.patch
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn displacement(&self, u: Param) -> Vector3<f64> {
        self.field.value(u)
    }

    /// Surface gradient `∇V` (zero on the normal).
    pub fn gradient(&self, u: Param) -> Matrix3<f64> {
        self.patch.surface_gradient(u, &self.field.partials(u))
    }

    /// `|sym(∇V)_tan|` in the orthonormal frame.
    pub fn isometry_residual(&self, u: Param) -> f64 {
        let m = self.patch.frame(u).minor(&self.gradient(u));
        (0.5 * (m + m.transpose())).norm()
    }

    fn raw_assembly(&self, t: &Matrix3<f64>, n: &Vector3<f64>) -> Matrix3<f64> {
        // tangential columns from ∇V; the normal column fixed by skewness
        t - t.transpose() * n * n.transpose()
    }

    /// The skew field `A(x)`.
    pub fn a(&self, u: Param) -> Matrix3<f64> {
        let t = self.gradient(u);
        skew_part(&self.raw_assembly(&t, &self.patch.normal(u)))
    }

    /// `A n`.
    pub fn a_normal(&self, u: Param) -> Vector3<f64> {
        self.a(u) * self.patch.normal(u)
    }

    /// Chart partials `∂ᵢA`, by differentiating the assembly of `A`.
    pub fn a_partials(&self, u: Param) -> [Matrix3<f64>; 2] {
        let p = &self.patch;
        let j = p.jacobian(u);
        let g_inv = (j.transpose() * j).try_inverse().expect("nondegenerate metric");
        let dual = j * g_inv;
        let d = self.field.partials(u);
        let dd = self.field.second_partials(u);
        let dj = p.chart_second(u);
        let n = p.normal(u);
        let dn = p.normal_partials(u);
        let t = d * dual.transpose();
        let mut out = [Matrix3::zeros(); 2];
        for i in 0..2 {
            let dg = dj[i].transpose() * j + j.transpose() * dj[i];
            let d_ginv = -g_inv * dg * g_inv;
            let d_dual: Matrix3x2<f64> = dj[i] * g_inv + j * d_ginv;
            let dt = dd[i] * dual.transpose() + d * d_dual.transpose();
            let dni = dn.column(i).into_owned();
            let draw = dt
                - dt.transpose() * n * n.transpose()
                - t.transpose() * dni * n.transpose()
                - t.transpose() * n * dni.transpose();
            out[i] = skew_part(&draw);
        }
        out
    }

    /// Chart partials of `A n`.
    pub fn a_normal_partials(&self, u: Param) -> Matrix3x2<f64> {
        let a = self.a(u);
        let da = self.a_partials(u);
        let n = self.patch.normal(u);
        let dn = self.patch.normal_partials(u);
        Matrix3x2::from_columns(&[da[0] * n + a * dn.column(0), da[1] * n + a * dn.column(1)])
    }

    /// Surface gradient `∇(A n)`.
    pub fn a_normal_gradient(&self, u: Param) -> Matrix3<f64> {
        self.patch.surface_gradient(u, &self.a_normal_partials(u))
    }

    /// `(∇_tan A) n` as the ambient matrix `τ ↦ (∂_τ A) n`.
    pub fn tangential_a_gradient_normal(&self, u: Param) -> Matrix3<f64> {
        let da = self.a_partials(u);
        let n = self.patch.normal(u);
        let cols = Matrix3x2::from_columns(&[da[0] * n, da[1] * n]);
        self.patch.surface_gradient(u, &cols)
    }
}

/// A finite-strain input `B_tan`.
///
/// Usually `sym ∇w` of a generator `w`; a direct ambient tangential field
/// is accepted where no generator is needed.
#[derive(Clone)]
pub enum StrainField {
    Generator { patch: SurfacePatch, w: FieldRef },
    Direct(Arc<dyn Fn(Param) -> Matrix3<f64> + Send + Sync>),
}

impl std::fmt::Debug for StrainField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrainField::Generator { w, .. } => f.debug_struct("Generator").field("w", w).finish(),
            StrainField::Direct(_) => f.write_str("Direct(..)"),
        }
    }
}

impl StrainField {
    pub fn from_generator(patch: &SurfacePatch, w: FieldRef) -> Self {
        StrainField::Generator {
            patch: patch.clone(),
            w,
        }
    }

    /// `B_tan` given as an ambient matrix field; only its symmetric
    /// tangential minor is used.
    pub fn direct(f: impl Fn(Param) -> Matrix3<f64> + Send + Sync + 'static) -> Self {
        StrainField::Direct(Arc::new(f))
    }

    pub fn zero(patch: &SurfacePatch) -> Self {
        Self::from_generator(patch, crate::fields::zero_field())
    }

    pub fn generator(&self) -> Option<&FieldRef> {
        match self {
            StrainField::Generator { w, .. } => Some(w),
            StrainField::Direct(_) => None,
        }
    }

    /// `B_tan` in the given frame.
    pub fn b_tan(&self, u: Param, frame: &TangentFrame) -> Matrix2<f64> {
        let m = match self {
            StrainField::Generator { patch, w } => frame.minor(&patch.surface_gradient(u, &w.partials(u))),
            StrainField::Direct(f) => frame.minor(&f(u)),
        };
        0.5 * (m + m.transpose())
    }
}
