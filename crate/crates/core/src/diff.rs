//! Central finite differences on the parameter rectangle.

use std::ops::{Add, Mul, Sub};

use crate::Param;

/// Values that can be combined linearly by a difference stencil.
pub trait Stencil: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T> Stencil for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

fn axis(i: usize) -> Param {
    if i == 0 {
        Param::new(1.0, 0.0)
    } else {
        Param::new(0.0, 1.0)
    }
}

/// Second-order central difference along parameter axis `i`.
pub fn central2<T: Stencil>(f: impl Fn(Param) -> T, u: Param, i: usize, step: f64) -> T {
    let e = axis(i) * step;
    (f(u + e) - f(u - e)) * (0.5 / step)
}

/// Fourth-order central difference along parameter axis `i`.
pub fn central4<T: Stencil>(f: impl Fn(Param) -> T, u: Param, i: usize, step: f64) -> T {
    let e = axis(i) * step;
    let near = f(u + e) - f(u - e);
    let far = f(u + e * 2.0) - f(u - e * 2.0);
    (near * 8.0 - far) * (1.0 / (12.0 * step))
}

/// Both parameter partials by the fourth-order stencil.
pub fn partials4<T: Stencil>(f: impl Fn(Param) -> T, u: Param, step: f64) -> [T; 2] {
    [central4(&f, u, 0, step), central4(&f, u, 1, step)]
}
