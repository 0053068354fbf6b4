//! Scalar abstraction shared by plain evaluation (`f64`) and gradient
//! recording ([`Var`](crate::autodiff::Var)).
//!
//! Every geometric routine in the crate is written once against [`Real`].
//! Evaluating with `f64` gives values; evaluating with `Var` records a tape
//! from which the exact gradient is recovered.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Guard applied to arccos arguments before differentiating.
pub const ACOS_GUARD: f64 = 1e-12;

pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// A constant carrying no derivative information.
    fn cst(c: f64) -> Self;

    /// The primal value.
    fn val(self) -> f64;

    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    /// Four-quadrant arctangent of `self / x`.
    fn atan2(self, x: Self) -> Self;

    /// Arccos with the argument clamped into `[-1, 1]`.
    ///
    /// Outside the open interval the derivative is reported as zero; inside
    /// it is evaluated at the argument clamped to `[-1 + 1e-12, 1 - 1e-12]`.
    fn acos(self) -> Self;

    /// Absolute value; the derivative at exactly zero is zero.
    fn abs(self) -> Self;

    /// Record that a non-differentiable point lies `margin` away from the
    /// current value, in the quantity's own units. A margin of zero means the
    /// kink was hit exactly.
    fn kink(self, _margin: f64) {}

    fn zero() -> Self {
        Self::cst(0.0)
    }
}

impl Real for f64 {
    fn cst(c: f64) -> Self {
        c
    }

    fn val(self) -> f64 {
        self
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    fn sin(self) -> Self {
        f64::sin(self)
    }

    fn cos(self) -> Self {
        f64::cos(self)
    }

    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }

    fn acos(self) -> Self {
        f64::acos(self.clamp(-1.0, 1.0))
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }
}
