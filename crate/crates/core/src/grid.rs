//! Uniform periodic 3-D grid.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use serde::{Deserialize, Serialize};

/// Uniform periodic grid with `n` nodes per axis over a cube of side
/// `box_length`. Node `j` holds coordinate `j * spacing`; everything wraps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3<T> {
    n: usize,
    box_length: T,
}

impl<T: Scalar> Grid3<T> {
    /// Requires `n >= 16` and a power of two is NOT required, but the FFT
    /// kernels are fastest for highly composite `n`.
    pub fn new(n: usize, box_length: T) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidParam(format!(
                "grid must have at least 16 nodes per axis, got {n}"
            )));
        }
        if !(box_length > T::zero()) || !box_length.is_finite() {
            return Err(Error::InvalidParam(
                "box length must be positive and finite".into(),
            ));
        }
        Ok(Self { n, box_length })
    }

    /// 2*pi-periodic box, the default domain for the analytic families.
    pub fn two_pi(n: usize) -> Result<Self> {
        Self::new(n, T::PI() + T::PI())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> T {
        self.box_length
    }

    pub fn spacing(&self) -> T {
        self.box_length / lit::<T>(self.n as f64)
    }

    /// Total number of nodes `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of node (i, j, k); x1 varies fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    /// Coordinate of node index along one axis.
    #[inline]
    pub fn coord(&self, i: usize) -> T {
        lit::<T>(i as f64) * self.spacing()
    }

    /// Node coordinates of flat index.
    #[inline]
    pub fn node(&self, idx: usize) -> [T; 3] {
        let i = idx % self.n;
        let j = (idx / self.n) % self.n;
        let k = idx / (self.n * self.n);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Minimal-image signed displacement along one axis.
    #[inline]
    pub fn min_image(&self, dx: T) -> T {
        let l = self.box_length;
        dx - l * (dx / l).round()
    }

    /// Squared minimal-image distance between two points.
    #[inline]
    pub fn dist2(&self, a: [T; 3], b: [T; 3]) -> T {
        let dx = self.min_image(a[0] - b[0]);
        let dy = self.min_image(a[1] - b[1]);
        let dz = self.min_image(a[2] - b[2]);
        dx * dx + dy * dy + dz * dz
    }

    /// Squared minimal-image horizontal distance (x1, x2 only).
    #[inline]
    pub fn dist2_h(&self, a: [T; 3], b: [T; 3]) -> T {
        let dx = self.min_image(a[0] - b[0]);
        let dy = self.min_image(a[1] - b[1]);
        dx * dx + dy * dy
    }

    /// Signed integer wavenumber for mode index `j` (standard FFT layout).
    #[inline]
    pub fn mode_number(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Angular wavenumber `2 pi m / L` for mode index `j`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> T {
        let two_pi = T::PI() + T::PI();
        lit::<T>(self.mode_number(j) as f64) * two_pi / self.box_length
    }

    /// Angular wavenumber with the Nyquist plane zeroed, for odd-order
    /// derivative multipliers (keeps transforms of real fields real).
    #[inline]
    pub fn wavenumber_deriv(&self, j: usize) -> T {
        if self.n % 2 == 0 && j == self.n / 2 {
            T::zero()
        } else {
            self.wavenumber(j)
        }
    }

    /// Volume element `spacing^3`.
    pub fn cell_volume(&self) -> T {
        let h = self.spacing();
        h * h * h
    }

    /// Grid with the same node count over a box shrunk by `1/lambda`.
    pub fn rescaled(&self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParam("lambda must be positive".into()));
        }
        Self::new(self.n, self.box_length / lambda)
    }
}
