use nalgebra::Vector3;

use super::{SurfacePatch, TangentFrame};
use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::Param;

/// One node of a surface rule: the area weight includes `√det G`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceNode {
    pub u: Param,
    pub x: Vector3<f64>,
    pub frame: TangentFrame,
    pub weight: f64,
}

/// Tensor Gauss–Legendre rule over a patch's parameter rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceQuadrature {
    pub order: usize,
    pub nodes: Vec<SurfaceNode>,
}

impl SurfaceQuadrature {
    /// `order` points per chart axis.
    pub fn new(patch: &SurfacePatch, order: usize) -> Self {
        let rule = GaussLegendre::new(order);
        let (lo, hi) = patch.domain();
        let mut nodes = Vec::with_capacity(order * order);
        for (a, wa) in rule.on_interval(lo.x, hi.x) {
            for (b, wb) in rule.on_interval(lo.y, hi.y) {
                let u = Param::new(a, b);
                let area = patch.metric(u).determinant().sqrt();
                nodes.push(SurfaceNode {
                    u,
                    x: patch.chart(u),
                    frame: patch.frame(u),
                    weight: wa * wb * area,
                });
            }
        }
        SurfaceQuadrature { order, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Total area seen by the rule.
    pub fn area(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }
}

/// `∫_S f dS` by the surface rule; `f` receives the node.
pub fn integrate_surface<F>(patch: &SurfacePatch, quad: &SurfaceQuadrature, mut f: F) -> Result<f64>
where
    F: FnMut(&SurfaceNode) -> f64,
{
    let _ = patch;
    let mut sum = 0.0;
    for node in &quad.nodes {
        let v = f(node);
        if !v.is_finite() {
            return Err(Error::Evaluation {
                what: "surface integrand".into(),
                u: [node.u.x, node.u.y],
            });
        }
        sum += node.weight * v;
    }
    Ok(sum)
}

/// Gauss rule through the thickness, mapped per surface node onto
/// `(−g₁(x), g₂(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransversalRule {
    pub order: usize,
    rule: GaussLegendre,
}

impl TransversalRule {
    pub fn new(order: usize) -> Self {
        TransversalRule {
            order,
            rule: GaussLegendre::new(order),
        }
    }

    /// `(t, weight)` pairs on `(−g1, g2)`; the weights sum to `g1 + g2`.
    pub fn nodes(&self, g1: f64, g2: f64) -> Vec<(f64, f64)> {
        self.rule.on_interval(-g1, g2).collect()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn plate_area_is_one() {
        let p = SurfacePatch::plate([0.0, 1.0], [0.0, 1.0]).unwrap();
        let q = SurfaceQuadrature::new(&p, 8);
        let a = integrate_surface(&p, &q, |_| 1.0).unwrap();
        assert!((a - 1.0).abs() < 1e-14);
        assert!(q.nodes.iter().all(|n| n.weight > 0.0));
    }

    #[test]
    fn cylinder_area_is_two_pi() {
        let p = SurfacePatch::cylinder(1.0, 1.0, 2.0 * PI).unwrap();
        let q = SurfaceQuadrature::new(&p, 8);
        let a = integrate_surface(&p, &q, |_| 1.0).unwrap();
        assert!((a - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn height_over_hemisphere_is_pi() {
        let p = SurfacePatch::sphere_cap(1.0, 0.5 * PI).unwrap();
        let q = SurfaceQuadrature::new(&p, 8);
        let v = integrate_surface(&p, &q, |n| n.x.z).unwrap();
        assert!((v - PI).abs() < 1e-12);
    }

    #[test]
    fn full_sphere_area() {
        let p = SurfacePatch::sphere_cap(2.0, PI).unwrap();
        let q = SurfaceQuadrature::new(&p, 12);
        let a = integrate_surface(&p, &q, |_| 1.0).unwrap();
        assert!((a - 16.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let p = SurfacePatch::plate([0.0, 1.0], [0.0, 1.0]).unwrap();
        let q = SurfaceQuadrature::new(&p, 3);
        let err = integrate_surface(&p, &q, |n| if n.u.x > 0.5 { f64::NAN } else { 1.0 }).unwrap_err();
        assert!(matches!(err, Error::Evaluation { .. }));
    }

    #[test]
    fn quadrature_error_decreases_with_order() {
        let patches = [
            SurfacePatch::plate([0.0, 1.0], [0.0, 1.0]).unwrap(),
            SurfacePatch::sphere_cap(1.0, 1.0).unwrap(),
            SurfacePatch::cylinder(1.5, 2.0, PI).unwrap(),
            SurfacePatch::torus_patch(3.0, 1.0, [0.0, 1.5], [0.0, 2.0]).unwrap(),
        ];
        for p in patches {
            let f = |n: &SurfaceNode| (n.x.x + 0.5 * n.x.y).exp() * (1.0 + n.x.z * n.x.z).recip();
            let reference = integrate_surface(&p, &SurfaceQuadrature::new(&p, 40), f).unwrap();
            let mut last = f64::INFINITY;
            for order in [2, 6, 12, 20] {
                let v = integrate_surface(&p, &SurfaceQuadrature::new(&p, order), f).unwrap();
                let err = (v - reference).abs();
                assert!(err < last || err < 1e-11, "order {order} on {:?}: {err} !< {last}", p.spec());
                last = err;
            }
        }
    }

    #[test]
    fn transversal_rule_reproduces_thickness() {
        let r = TransversalRule::new(4);
        let nodes = r.nodes(0.4, 0.7);
        let s: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((s - 1.1).abs() < 1e-15);
        assert!(nodes.iter().all(|&(t, w)| w > 0.0 && t > -0.4 && t < 0.7));
        let m: f64 = nodes.iter().map(|(t, w)| w * t * t * t).sum();
        assert!((m - (0.7f64.powi(4) - 0.4f64.powi(4)) / 4.0).abs() < 1e-15);
    }
}
