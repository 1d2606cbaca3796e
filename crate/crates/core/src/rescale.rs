//! The critical rescaling u -> lambda u(lambda x, lambda^2 t).
//!
//! A rescaled periodic field is again periodic with period L / lambda, so
//! the rescaling is represented by shrinking the box while keeping the node
//! count: node j of the new grid carries lambda * u(node j), bijectively.
//! No resampling is ever needed; for dyadic lambda every arithmetic step is
//! an exact power-of-two scaling, which is what makes the downstream
//! invariance checks hold to near rounding.

use crate::error::{Error, Result};
use crate::field::{FieldKind, Snapshot, SpaceTimeField};
use crate::scalar::Scalar;

/// True when `lambda` is an exact power of two (both directions).
pub fn is_dyadic<T: Scalar>(lambda: T) -> bool {
    let x = lambda.to_f64().unwrap_or(f64::NAN);
    if !(x > 0.0) || !x.is_finite() {
        return false;
    }
    // Positive power of two <=> zero mantissa bits.
    x.to_bits() & ((1u64 << 52) - 1) == 0
}

/// Value scaling power per field kind: velocity and generic scalars scale
/// like u (power 1), pressure and vorticity like second-order quantities.
fn value_power(kind: FieldKind) -> u32 {
    match kind {
        FieldKind::Velocity | FieldKind::Scalar => 1,
        FieldKind::Pressure | FieldKind::Vorticity => 2,
    }
}

/// Apply the scaling with parameter `lambda > 0`.
pub fn rescale_field<T: Scalar>(field: &SpaceTimeField<T>, lambda: T) -> Result<SpaceTimeField<T>> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParam("lambda must be positive and finite".into()));
    }
    let grid = field.grid().rescaled(lambda)?;
    let lambda2 = lambda * lambda;
    let factor = match value_power(field.kind()) {
        1 => lambda,
        _ => lambda2,
    };
    let snapshots: Vec<Snapshot<T>> = field
        .snapshots()
        .iter()
        .map(|s| {
            let comps = s
                .comps()
                .iter()
                .map(|c| c.iter().map(|&v| v * factor).collect())
                .collect();
            Snapshot::new(grid, s.time() / lambda2, comps).expect("shape preserved")
        })
        .collect();
    let mut out = SpaceTimeField::new(field.kind(), snapshots)?;
    out.resampled = !is_dyadic(lambda);
    Ok(out)
}
