//! Real scalar abstraction shared by every numeric routine.
//!
//! Amplitudes are always `Complex<R>`; `R` selects the working precision.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::ToPrimitive;

/// Real floating-point type the engine can run on (`f32`, `f64`).
pub trait Real: RealField + Copy + ToPrimitive + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Machine epsilon of the type.
    fn eps() -> Self;

    fn precision_name() -> &'static str;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    fn eps() -> Self {
        f64::EPSILON
    }

    fn precision_name() -> &'static str {
        "f64"
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    fn eps() -> Self {
        f32::EPSILON
    }

    fn precision_name() -> &'static str {
        "f32"
    }
}

/// Complex amplitude over `R`.
pub type Cplx<R> = Complex<R>;

#[inline]
pub(crate) fn cre<R: Real>(x: R) -> Complex<R> {
    Complex::new(x, R::zero())
}

#[inline]
pub(crate) fn czero<R: Real>() -> Complex<R> {
    Complex::new(R::zero(), R::zero())
}

#[inline]
pub(crate) fn cone<R: Real>() -> Complex<R> {
    Complex::new(R::one(), R::zero())
}

/// Converts an `f64` complex number into working precision.
#[inline]
pub fn cfrom<R: Real>(z: Complex<f64>) -> Complex<R> {
    Complex::new(R::lit(z.re), R::lit(z.im))
}

/// Widens a working-precision complex number to `f64`.
#[inline]
pub fn cto64<R: Real>(z: Complex<R>) -> Complex<f64> {
    Complex::new(z.re.as_f64(), z.im.as_f64())
}

/// Modulus `|z|` without requiring `num_traits::Float` on `R`.
#[inline]
pub fn cabs<R: Real>(z: Complex<R>) -> R {
    z.re.hypot(z.im)
}
