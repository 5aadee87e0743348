//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All spectral code is written against [`Real`], which is implemented for
//! `f32` and `f64`. Exact combinatorial quantities (multinomial coefficients,
//! norms `h_l`) are carried as arbitrary-precision integers and rationals and
//! only converted to the scalar type at the last step.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_bigint::{BigInt, BigUint};
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + num_traits::NumAssign
    + Sum
    + Debug
    + Display
    + std::fmt::LowerExp
    + Default
    + Send
    + Sync
    + serde::Serialize
    + serde::de::DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    /// Lossy conversion from a count.
    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn of_big_uint(x: &BigUint) -> Self {
        Self::of(x.to_f64().unwrap_or(f64::INFINITY))
    }

    fn of_big_int(x: &BigInt) -> Self {
        Self::of(x.to_f64().unwrap_or(f64::NAN))
    }

    fn of_rational(x: &BigRational) -> Self {
        Self::of(rational_to_f64(x))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type ComplexValue<T> = Complex<T>;

/// Converts an exact rational to `f64`, staying accurate when numerator and
/// denominator individually overflow `f64`.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    // Shift both operands down to ~64 significant bits before dividing.
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let shift_n = (nb - 64).max(0);
    let shift_d = (db - 64).max(0);
    let n = (x.numer() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (x.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    (n / d) * 2f64.powi((shift_n - shift_d) as i32)
}

pub(crate) fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn rational_conversion_survives_huge_operands() {
        let big = BigInt::from(10u32).pow(400);
        let r = BigRational::new(big.clone() * 3, big * 4);
        assert_eq!(rational_to_f64(&r), 0.75);
        let r = BigRational::new(BigInt::from(3), BigInt::from(10u32).pow(400));
        assert_eq!(rational_to_f64(&r), 0.0);
    }
}
