//! Scalar abstraction that lets the solver and network run either on
//! plain `f64` or on tape variables that record operations for
//! reverse-mode differentiation.
//!
//! Every numerical routine in this crate is written once against [`Real`];
//! the `f64` instantiation is the fast path used for inference, evaluation
//! and benchmarking, while [`crate::tape::Var`] instantiates the same code
//! for gradient computation. This guarantees that the differentiated
//! forward pass and the plain forward pass are the same arithmetic.

use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::Float;

pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Embeds a literal constant. Constants carry no derivative.
    fn lit(x: f64) -> Self;

    /// The underlying numeric value.
    fn value(self) -> f64;

    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn abs(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn value(self) -> f64 {
        self
    }

    #[inline]
    fn sqrt(self) -> Self {
        Float::sqrt(self)
    }

    #[inline]
    fn ln(self) -> Self {
        Float::ln(self)
    }

    #[inline]
    fn exp(self) -> Self {
        Float::exp(self)
    }

    #[inline]
    fn abs(self) -> Self {
        Float::abs(self)
    }
}

/// Base-2 logarithm, the unit used for rates throughout.
#[inline]
pub fn log2<R: Real>(x: R) -> R {
    x.ln() * R::lit(1.0 / core::f64::consts::LN_2)
}

/// Logistic function `1 / (1 + exp(-z))`.
#[inline]
pub fn sigmoid<R: Real>(z: R) -> R {
    R::lit(1.0) / (R::lit(1.0) + (-z).exp())
}

/// Rectifier. The inactive branch contributes a zero constant, so its
/// derivative is exactly zero.
#[inline]
pub fn relu<R: Real>(z: R) -> R {
    if z.value() > 0.0 {
        z
    } else {
        R::lit(0.0)
    }
}
