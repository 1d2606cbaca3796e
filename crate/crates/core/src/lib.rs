//! Interior-regularity diagnostics for 3-D incompressible flow.
//!
//! The crate computes the scale-invariant quantities (A, E, G, H and their
//! mean-subtracted and G1 variants) of local regularity theory on periodic
//! pseudo-spectral grids, decomposes the pressure along the structure of
//! the vertical derivative, verifies the lemma-level inequalities those
//! decompositions enter (with measured implied constants), and evaluates
//! the epsilon-regularity criteria together with the F(theta rho) <= F(rho)/2
//! decay iteration.
//!
//! Everything is generic over the working scalar through [`Scalar`];
//! concrete `f64` aliases sit below. The documented tolerances assume f64.

pub mod criteria;
pub mod cutoff;
pub mod cylinder;
pub mod error;
pub mod evolve;
pub mod exponents;
pub mod field;
pub mod generate;
pub mod grid;
pub mod harmonic;
pub mod inequalities;
pub mod io;
pub mod pressure;
pub mod quantities;
pub mod reduce;
pub mod rescale;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{lit, rel_diff, Scalar};

/// Concrete f64 instantiations of the core types.
pub type Grid3f64 = grid::Grid3<f64>;
pub type Snapshot64 = field::Snapshot<f64>;
pub type Field64 = field::SpaceTimeField<f64>;
pub type FlowParams64 = generate::FlowParams<f64>;
pub type Cylinder64 = cylinder::CylinderSpec<f64>;
pub type TestFunction64 = cutoff::TestFunction<f64>;
pub type IterationParams64 = criteria::IterationParams<f64>;
