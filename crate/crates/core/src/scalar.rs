//! Floating-point scalar abstraction for the whole toolkit.
//!
//! All grid math is generic over [`Scalar`]; concrete aliases for the
//! `f64` instantiation live at the crate root. The stated tolerances of
//! the test suite assume `f64`; `f32` instantiations work but loosen
//! every validation threshold to a multiple of the machine epsilon.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;
use serde::Serialize;
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Floating-point type the spectral and quadrature kernels run on.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + Sum
    + Serialize
    + Display
    + LowerExp
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + FftNum
        + Sum
        + Serialize
        + Display
        + LowerExp
        + Debug
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Shorthand for lifting an `f64` literal into the working scalar type.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must convert into the scalar type")
}

/// A validation threshold that stays at its stated `f64` value but degrades
/// gracefully for wider machine epsilons (`f32`).
#[inline]
pub fn tolerance<T: Scalar>(stated: f64) -> T {
    let floor = T::epsilon() * lit::<T>(64.0);
    lit::<T>(stated).max(floor)
}

/// Relative difference |a-b| / max(|a|, |b|), zero when both vanish.
#[inline]
pub fn rel_diff<T: Scalar>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs());
    if scale == T::zero() {
        T::zero()
    } else {
        (a - b).abs() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_roundtrips() {
        assert_eq!(lit::<f64>(0.25), 0.25);
        assert_eq!(lit::<f32>(0.25), 0.25f32);
    }

    #[test]
    fn tolerance_keeps_f64_value_and_widens_f32() {
        assert_eq!(tolerance::<f64>(1e-9), 1e-9);
        assert!(tolerance::<f32>(1e-9) > 1e-9f32);
    }

    #[test]
    fn rel_diff_handles_zero() {
        assert_eq!(rel_diff(0.0f64, 0.0f64), 0.0);
        assert!((rel_diff(1.0f64, 1.0 + 1e-12) - 1e-12).abs() < 1e-13);
    }
}
