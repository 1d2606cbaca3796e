//! Space-time integration regions.

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::grid::Grid3;
use crate::scalar::{lit, Scalar};
use serde::{Deserialize, Serialize};

/// Spatial cross-section: a ball (parabolic cylinder Q_r) or a horizontal
/// disc extended over the whole vertical period (Q_r*, the finite-box
/// truncation of an infinite vertical cylinder).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Ball,
    Vertical,
}

/// The region B x (t0 - r^2, t0] around `center = (x0, t0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderSpec<T> {
    pub x0: [T; 3],
    pub t0: T,
    pub radius: T,
    pub geometry: Geometry,
}

impl<T: Scalar> CylinderSpec<T> {
    pub fn new(x0: [T; 3], t0: T, radius: T, geometry: Geometry) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidParam("cylinder radius must be positive".into()));
        }
        Ok(Self {
            x0,
            t0,
            radius,
            geometry,
        })
    }

    pub fn floor(grid: &Grid3<T>) -> T {
        lit::<T>(8.0) * grid.spacing()
    }

    /// Time window (start, end] = (t0 - r^2, t0].
    pub fn window(&self) -> (T, T) {
        (self.t0 - self.radius * self.radius, self.t0)
    }

    /// Validate against a field. Strict mode errors below the resolution
    /// floor; permissive mode returns `below_floor = true` instead (the
    /// criteria sweeps use this to mark scales the grid cannot honor).
    /// The time window must lie inside the field range in both modes.
    pub fn validate(&self, field: &SpaceTimeField<T>, permissive: bool) -> Result<bool> {
        let grid = field.grid();
        let floor = Self::floor(&grid);
        let below = self.radius < floor;
        if below && !permissive {
            return Err(Error::BelowFloor {
                scale: self.radius.to_f64().unwrap_or(f64::NAN),
                floor: floor.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (start, end) = self.window();
        if start < field.start_time() || end > field.end_time() {
            return Err(Error::TimeRange {
                start: start.to_f64().unwrap_or(f64::NAN),
                end: end.to_f64().unwrap_or(f64::NAN),
                field_start: field.start_time().to_f64().unwrap_or(f64::NAN),
                field_end: field.end_time().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(below)
    }

    /// Node-center membership indicator, ascending index order.
    pub fn nodes(&self, grid: &Grid3<T>) -> Vec<usize> {
        let r2 = self.radius * self.radius;
        let mut out = Vec::new();
        for idx in 0..grid.len() {
            let x = grid.node(idx);
            let d2 = match self.geometry {
                Geometry::Ball => grid.dist2(x, self.x0),
                Geometry::Vertical => grid.dist2_h(x, self.x0),
            };
            if d2 < r2 {
                out.push(idx);
            }
        }
        out
    }

    /// Same cylinder at a different radius.
    pub fn with_radius(&self, radius: T) -> Result<Self> {
        Self::new(self.x0, self.t0, radius, self.geometry)
    }
}
