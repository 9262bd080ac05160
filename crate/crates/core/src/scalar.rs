//! Scalar abstractions shared by every numerical module.
//!
//! [`Scalar`] is the minimal field-like interface needed by the exact matrix
//! primitives (minors, cofactors, determinants). It is implemented for `f32`,
//! `f64` and [`Rational64`], so identities such as `det F = adj F . F` can be
//! checked exactly on rationals. [`Real`] adds the floating-point operations
//! (square roots, norms, tolerances) required by the constructions.

use std::fmt::{Debug, Display};

use num_rational::Rational64;
use num_traits::{Float, FromPrimitive, Num};

/// Field element usable by the exact matrix primitives.
pub trait Scalar:
    Num + PartialOrd + Copy + Debug + Display + std::ops::Neg<Output = Self> + Send + Sync + 'static
{
    /// `false` for NaN and infinities; always `true` for exact types.
    fn is_finite_value(&self) -> bool;

    /// Absolute value. Named apart from `Float::abs` so both traits can be in scope.
    fn magnitude(&self) -> Self {
        if *self < Self::zero() {
            -*self
        } else {
            *self
        }
    }
}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Rational64 {
    fn is_finite_value(&self) -> bool {
        true
    }
}

/// Floating-point scalar used by everything beyond the exact primitives.
pub trait Real: Scalar + Float + FromPrimitive {
    /// Converts an `f64` literal (tolerances, constants) into `Self`.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
