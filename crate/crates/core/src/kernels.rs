//! Per-frequency arithmetic kernels, generic over the scalar so the same
//! code can run on `Complex64` or on an operation-counting wrapper.

use std::cell::Cell;
use std::ops::{Add, Div, Mul, Sub};

use num_complex::Complex64;

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn from_c64(c: Complex64) -> Self;
    fn sqrt(self) -> Self;
}

impl Scalar for Complex64 {
    fn from_c64(c: Complex64) -> Self {
        c
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
}

thread_local! {
    static OPS: Cell<u64> = const { Cell::new(0) };
}

/// Complex value that counts every arithmetic operation performed on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Counted(pub Complex64);

impl Counted {
    pub fn reset() {
        OPS.with(|c| c.set(0));
    }

    pub fn count() -> u64 {
        OPS.with(Cell::get)
    }

    fn tick() {
        OPS.with(|c| c.set(c.get() + 1));
    }
}

macro_rules! counted_op {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Counted {
            type Output = Counted;
            fn $f(self, r: Counted) -> Counted {
                Counted::tick();
                Counted(self.0 $op r.0)
            }
        }
    };
}

counted_op!(Add, add, +);
counted_op!(Sub, sub, -);
counted_op!(Mul, mul, *);
counted_op!(Div, div, /);

impl Scalar for Counted {
    fn from_c64(c: Complex64) -> Self {
        Counted(c)
    }
    fn sqrt(self) -> Self {
        Counted::tick();
        Counted(self.0.sqrt())
    }
}

/// Row-major 2x2.
pub type Mat<T> = [T; 4];

pub fn matmul<T: Scalar>(z: &Mat<T>, y: &Mat<T>) -> Mat<T> {
    [
        z[0] * y[0] + z[1] * y[2],
        z[0] * y[1] + z[1] * y[3],
        z[2] * y[0] + z[3] * y[2],
        z[2] * y[1] + z[3] * y[3],
    ]
}

/// `det(I + Z Y)` expanded as `(1 + G11)(1 + G22) - G12 G21`.
pub fn return_difference<T: Scalar>(z: &Mat<T>, y: &Mat<T>) -> T {
    let g = matmul(z, y);
    let one = T::from_c64(Complex64::new(1.0, 0.0));
    (one + g[0]) * (one + g[3]) - g[1] * g[2]
}

/// Eigenvalues of `G = Z Y` from `l^2 - tr l + det = 0`.
pub fn eigenvalues<T: Scalar>(z: &Mat<T>, y: &Mat<T>) -> (T, T) {
    let g = matmul(z, y);
    let tr = g[0] + g[3];
    let det = g[0] * g[3] - g[1] * g[2];
    let half = T::from_c64(Complex64::new(0.5, 0.0));
    let four = T::from_c64(Complex64::new(4.0, 0.0));
    let root = (tr * tr - four * det).sqrt();
    ((tr + root) * half, (tr - root) * half)
}
