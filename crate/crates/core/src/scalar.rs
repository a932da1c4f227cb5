//! Numeric backends for probability vectors.
//!
//! Everything in the engine is generic over [`Scalar`], which is implemented
//! for `f64` (the fast path) and [`Rational`] (arbitrary-precision exact
//! arithmetic, used as a brute-force oracle).

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Exact rational number with arbitrary-precision numerator and denominator.
pub type Rational = BigRational;

/// A probability value the engine can sort, sum and multiply.
pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// Human-readable backend name, written into export metadata.
    const BACKEND: &'static str;

    /// `true` when arithmetic is exact and comparisons need no slack.
    const EXACT: bool;

    /// Absolute slack for normalization and fixed-point checks.
    ///
    /// `1e-12` for floats, zero for exact rationals.
    fn tolerance() -> Self;

    fn to_f64(&self) -> f64;

    /// Lossless conversion from a float, if the backend supports one.
    ///
    /// Returns `None` for the rational backend: a float-parameterized value
    /// (for instance `e^ε`) has no faithful rational representation.
    fn from_f64(value: f64) -> Option<Self>;

    fn from_usize(value: usize) -> Self;
}

impl Scalar for f64 {
    const BACKEND: &'static str = "f64";
    const EXACT: bool = false;

    fn tolerance() -> Self {
        1e-12
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64(value: f64) -> Option<Self> {
        Some(value)
    }

    fn from_usize(value: usize) -> Self {
        value as f64
    }
}

impl Scalar for Rational {
    const BACKEND: &'static str = "rational";
    const EXACT: bool = true;

    fn tolerance() -> Self {
        Rational::zero()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64(_value: f64) -> Option<Self> {
        None
    }

    fn from_usize(value: usize) -> Self {
        Rational::from_integer(BigInt::from(value))
    }
}

/// Builds the exact rational `numer / denom`.
///
/// # Panics
///
/// Panics if `denom` is zero.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Sum of a slice in the backend's arithmetic.
pub fn sum<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |acc, v| acc + v.clone())
}

/// `2^exp` as a backend value.
pub(crate) fn pow2<T: Scalar>(exp: usize) -> T {
    let two = T::one() + T::one();
    (0..exp).fold(T::one(), |acc, _| acc * two.clone())
}

/// Converts a whole vector to floats.
pub fn to_f64_vec<T: Scalar>(values: &[T]) -> Vec<f64> {
    values.iter().map(Scalar::to_f64).collect()
}

pub(crate) fn is_one<T: Scalar>(value: &T) -> bool {
    (value.clone() - T::one()).abs() <= T::tolerance()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trips_to_float() {
        assert_eq!(Scalar::to_f64(&ratio(3, 5)), 0.6);
        assert_eq!(Scalar::to_f64(&ratio(27, 65)), 27.0 / 65.0);
    }

    #[test]
    fn rational_rejects_float_parameterization() {
        assert!(<Rational as Scalar>::from_f64(0.5).is_none());
        assert_eq!(<f64 as Scalar>::from_f64(0.5), Some(0.5));
    }

    #[test]
    fn powers_of_two() {
        assert_eq!(pow2::<f64>(5), 32.0);
        assert_eq!(pow2::<Rational>(3), ratio(8, 1));
    }
}
