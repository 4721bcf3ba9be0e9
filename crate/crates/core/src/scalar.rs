//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point type the library is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count or index into the working scalar.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("integer representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Complex companion of a real scalar.
pub type Cplx<T> = Complex<T>;

/// Squared modulus without the square root.
#[inline]
pub fn norm_sqr<T: Real>(z: Cplx<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// Hermitian inner product `<x, y> = sum conj(x_i) y_i`.
pub fn dot<T: Real>(x: &[Cplx<T>], y: &[Cplx<T>]) -> Cplx<T> {
    debug_assert_eq!(x.len(), y.len());
    let mut re = T::zero();
    let mut im = T::zero();
    for (a, b) in x.iter().zip(y) {
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    Complex::new(re, im)
}

pub fn norm2<T: Real>(x: &[Cplx<T>]) -> T {
    x.iter().map(|z| norm_sqr(*z)).sum::<T>().sqrt()
}

/// `y += alpha * x`
pub fn axpy<T: Real>(alpha: Cplx<T>, x: &[Cplx<T>], y: &mut [Cplx<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

pub fn scale<T: Real>(alpha: T, x: &mut [Cplx<T>]) {
    for xi in x.iter_mut() {
        *xi = *xi * alpha;
    }
}
