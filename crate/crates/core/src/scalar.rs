//! Scalar abstraction shared by the numerical kernels.
//!
//! Everything that does pure arithmetic on coefficient tensors (evaluation,
//! derivative contraction, singular values, the condition functionals and the
//! alternating maximization) is written against [`Scalar`], so the same code
//! runs in `f32` and `f64`. Sampling and the Monte Carlo harness work in `f64`
//! and cast at the boundary.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Real floating point scalar: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or parameter.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Scales `v` to unit length in place and returns the original norm.
pub(crate) fn normalize<T: Scalar>(v: &mut [T]) -> T {
    let nrm = norm(v);
    if nrm > T::zero() {
        for e in v.iter_mut() {
            *e /= nrm;
        }
    }
    nrm
}

/// `a -= c * b`
pub(crate) fn axpy<T: Scalar>(a: &mut [T], c: T, b: &[T]) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x -= c * y;
    }
}
