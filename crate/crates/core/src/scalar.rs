//! Scalar traits.
//!
//! [`Field`] covers everything the jet ring and the nilpotent exponential need
//! (exact rationals qualify). [`Scalar`] adds the transcendental functions and
//! is what the solvers, estimators and oracles run on.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, Signed};

/// Coefficient type for truncated power series and superdiagonal matrices.
pub trait Field:
    Copy + Num + Signed + PartialOrd + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// `false` for NaN and infinities; exact types are always finite.
    fn is_finite_value(self) -> bool;

    /// Lossy conversion used in diagnostics.
    fn to_f64_lossy(self) -> f64;

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("integer not representable in scalar type")
    }
}

/// Floating-point scalar: f32 or f64.
pub trait Scalar: Field + Float + FloatConst + NumCast {
    /// Converts an f64 literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("literal not representable")
    }
}

macro_rules! impl_float_field {
    ($f:ty) => {
        impl Field for $f {
            #[inline]
            fn is_finite_value(self) -> bool {
                self.is_finite()
            }
            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }
        }
        impl Scalar for $f {}
    };
}

impl_float_field!(f32);
impl_float_field!(f64);

macro_rules! impl_ratio_field {
    ($i:ty) => {
        impl Field for Ratio<$i> {
            #[inline]
            fn is_finite_value(self) -> bool {
                true
            }
            #[inline]
            fn to_f64_lossy(self) -> f64 {
                *self.numer() as f64 / *self.denom() as f64
            }
        }
    };
}

impl_ratio_field!(i64);
impl_ratio_field!(i128);
