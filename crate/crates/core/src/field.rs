//! Grid snapshots and time-indexed fields.

use crate::error::{Error, Result};
use crate::grid::Grid3;
use crate::scalar::{lit, tolerance, Scalar};
use serde::{Deserialize, Serialize};

/// What a field's components represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Velocity,
    Pressure,
    Vorticity,
    Scalar,
}

impl FieldKind {
    pub fn component_names(&self) -> &'static [&'static str] {
        match self {
            FieldKind::Velocity => &["u1", "u2", "u3"],
            FieldKind::Pressure => &["pi"],
            FieldKind::Vorticity => &["w1", "w2", "w3"],
            FieldKind::Scalar => &["f"],
        }
    }

    pub fn n_comps(&self) -> usize {
        self.component_names().len()
    }
}

/// One time slice: 1, 2 or 3 scalar lattices over a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    grid: Grid3<T>,
    time: T,
    comps: Vec<Vec<T>>,
}

impl<T: Scalar> Snapshot<T> {
    pub fn new(grid: Grid3<T>, time: T, comps: Vec<Vec<T>>) -> Result<Self> {
        if comps.is_empty() || comps.len() > 3 {
            return Err(Error::Incompatible(format!(
                "snapshot needs 1..=3 components, got {}",
                comps.len()
            )));
        }
        for (i, c) in comps.iter().enumerate() {
            if c.len() != grid.len() {
                return Err(Error::Incompatible(format!(
                    "component {i} has {} values, grid has {} nodes",
                    c.len(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, time, comps })
    }

    /// All-zero snapshot with the given component count.
    pub fn zeros(grid: Grid3<T>, time: T, n_comps: usize) -> Self {
        let comps = (0..n_comps).map(|_| vec![T::zero(); grid.len()]).collect();
        Self { grid, time, comps }
    }

    pub fn grid(&self) -> Grid3<T> {
        self.grid
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn set_time(&mut self, t: T) {
        self.time = t;
    }

    pub fn n_comps(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, i: usize) -> &[T] {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut Vec<T> {
        &mut self.comps[i]
    }

    pub fn comps(&self) -> &[Vec<T>] {
        &self.comps
    }

    pub fn into_comps(self) -> Vec<Vec<T>> {
        self.comps
    }

    /// Euclidean magnitude at a node over all components.
    #[inline]
    pub fn magnitude_at(&self, idx: usize) -> T {
        let mut s = T::zero();
        for c in &self.comps {
            let v = c[idx];
            s += v * v;
        }
        s.sqrt()
    }

    /// Max of |f| over all nodes and components.
    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for c in &self.comps {
            for &v in c {
                m = m.max(v.abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    /// Arithmetic mean of one component over the box.
    pub fn component_mean(&self, i: usize) -> T {
        let sum: T = self.comps[i].iter().copied().sum();
        sum / lit::<T>(self.grid.len() as f64)
    }

    /// Subtract the spatial mean from every component.
    pub fn remove_means(&mut self) {
        for i in 0..self.comps.len() {
            let m = self.component_mean(i);
            for v in &mut self.comps[i] {
                *v -= m;
            }
        }
    }

    /// Multiply every value by `s`.
    pub fn scale_values(&mut self, s: T) {
        for c in &mut self.comps {
            for v in c.iter_mut() {
                *v *= s;
            }
        }
    }

    /// Tolerance for the divergence-free flag:
    /// max-node |div u| <= 1e-9 * max|u| / spacing.
    pub fn div_free_bound(&self) -> T {
        tolerance::<T>(1e-9) * self.max_abs() / self.grid.spacing()
    }
}

/// Time-ordered, uniformly sampled sequence of snapshots on one grid.
#[derive(Debug, Clone)]
pub struct SpaceTimeField<T> {
    kind: FieldKind,
    snapshots: Vec<Snapshot<T>>,
    dt: T,
    /// Set when values were produced by non-dyadic rescaling.
    pub resampled: bool,
}

impl<T: Scalar> SpaceTimeField<T> {
    pub fn new(kind: FieldKind, snapshots: Vec<Snapshot<T>>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Incompatible("field needs at least one snapshot".into()));
        }
        let grid = snapshots[0].grid();
        let n_comps = snapshots[0].n_comps();
        for s in &snapshots {
            if s.grid() != grid {
                return Err(Error::Incompatible("snapshots must share one grid".into()));
            }
            if s.n_comps() != n_comps {
                return Err(Error::Incompatible(
                    "snapshots must share the component count".into(),
                ));
            }
        }
        let expected = match kind {
            FieldKind::Velocity | FieldKind::Vorticity => 3,
            FieldKind::Pressure | FieldKind::Scalar => 1,
        };
        if n_comps != expected {
            return Err(Error::Incompatible(format!(
                "{kind:?} field needs {expected} components, got {n_comps}"
            )));
        }
        let dt = if snapshots.len() >= 2 {
            let dt = snapshots[1].time() - snapshots[0].time();
            if !(dt > T::zero()) {
                return Err(Error::Incompatible("times must be strictly increasing".into()));
            }
            let tol = tolerance::<T>(1e-12);
            for w in snapshots.windows(2) {
                let step = w[1].time() - w[0].time();
                if ((step - dt) / dt).abs() > tol {
                    return Err(Error::Incompatible(format!(
                        "non-uniform time steps: {} vs {}",
                        step, dt
                    )));
                }
            }
            dt
        } else {
            T::zero()
        };
        Ok(Self {
            kind,
            snapshots,
            dt,
            resampled: false,
        })
    }

    /// Single-snapshot wrapper, mostly for directly constructed test fields.
    pub fn single(kind: FieldKind, snapshot: Snapshot<T>) -> Result<Self> {
        Self::new(kind, vec![snapshot])
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn grid(&self) -> Grid3<T> {
        self.snapshots[0].grid()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshot(&self, i: usize) -> &Snapshot<T> {
        &self.snapshots[i]
    }

    pub fn snapshots(&self) -> &[Snapshot<T>] {
        &self.snapshots
    }

    pub fn snapshots_mut(&mut self) -> &mut [Snapshot<T>] {
        &mut self.snapshots
    }

    pub fn into_snapshots(self) -> Vec<Snapshot<T>> {
        self.snapshots
    }

    pub fn times(&self) -> Vec<T> {
        self.snapshots.iter().map(|s| s.time()).collect()
    }

    pub fn start_time(&self) -> T {
        self.snapshots[0].time()
    }

    pub fn end_time(&self) -> T {
        self.snapshots[self.snapshots.len() - 1].time()
    }

    /// Max |f| over the whole field.
    pub fn max_abs(&self) -> T {
        self.snapshots
            .iter()
            .map(|s| s.max_abs())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid3<f64> {
        Grid3::new(16, 1.0).unwrap()
    }

    #[test]
    fn snapshot_rejects_bad_component_count() {
        let g = grid();
        assert!(Snapshot::new(g, 0.0, vec![]).is_err());
        assert!(Snapshot::new(g, 0.0, vec![vec![0.0; g.len()]; 4]).is_err());
        assert!(Snapshot::new(g, 0.0, vec![vec![0.0; 3]]).is_err());
    }

    #[test]
    fn field_requires_uniform_times() {
        let g = grid();
        let s = |t: f64| Snapshot::new(g, t, vec![vec![0.0; g.len()]]).unwrap();
        let ok = SpaceTimeField::new(FieldKind::Scalar, vec![s(0.0), s(0.1), s(0.2)]);
        assert!(ok.is_ok());
        assert!((ok.unwrap().dt() - 0.1).abs() < 1e-15);
        let bad = SpaceTimeField::new(FieldKind::Scalar, vec![s(0.0), s(0.1), s(0.25)]);
        assert!(bad.is_err());
        let decreasing = SpaceTimeField::new(FieldKind::Scalar, vec![s(0.1), s(0.0)]);
        assert!(decreasing.is_err());
    }

    #[test]
    fn field_checks_kind_component_count() {
        let g = grid();
        let s = Snapshot::new(g, 0.0, vec![vec![0.0; g.len()]]).unwrap();
        assert!(SpaceTimeField::new(FieldKind::Velocity, vec![s.clone()]).is_err());
        assert!(SpaceTimeField::new(FieldKind::Pressure, vec![s]).is_ok());
    }

    #[test]
    fn mean_removal_zeroes_means() {
        let g = grid();
        let mut s = Snapshot::new(g, 0.0, vec![vec![3.5; g.len()]]).unwrap();
        s.remove_means();
        assert!(s.max_abs() < 1e-14);
    }
}
