//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by field construction, quadrature, solvers and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation (bad exponents, scales, amplitudes, ...).
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Operands are structurally incompatible (component counts, grids, kinds).
    #[error("incompatible input: {0}")]
    Incompatible(String),

    /// A requested scale sits below the quadrature resolution floor.
    #[error("scale {scale} below resolution floor {floor} (8 x grid spacing)")]
    BelowFloor { scale: f64, floor: f64 },

    /// A space-time region leaves the sampled time range of a field.
    #[error("time window [{start}, {end}] outside field range [{field_start}, {field_end}]")]
    TimeRange {
        start: f64,
        end: f64,
        field_start: f64,
        field_end: f64,
    },

    /// The explicit time integrator violated its advective stability bound.
    #[error("time step {dt} violates stability bound {bound} (0.5 * spacing / max|u|)")]
    StabilityBound { dt: f64, bound: f64 },

    /// Non-finite values appeared during a run.
    #[error("non-finite value detected at step {step}: {context}")]
    Numerical { step: usize, context: String },

    /// Persistence failures (missing files, short payloads, bad manifests).
    #[error("storage error: {0}")]
    Storage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit class: 1 for validation problems, 2 for numerical failures.
    pub fn exit_class(&self) -> i32 {
        match self {
            Error::Numerical { .. } | Error::StabilityBound { .. } => 2,
            _ => 1,
        }
    }
}
