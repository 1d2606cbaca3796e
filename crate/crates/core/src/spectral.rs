//! Pseudo-spectral calculus on the periodic box.
//!
//! All derivatives, projections and Poisson solves are Fourier multipliers,
//! exact for band-limited data. Real lattices are transformed through a
//! complex 3-D FFT; the inverse is normalized here so round trips are the
//! identity up to rounding.

use crate::error::{Error, Result};
use crate::field::Snapshot;
use crate::grid::Grid3;
use crate::scalar::{lit, Scalar};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Differential operators exposed on snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOp {
    /// Full gradient of a scalar (1 -> 3 components).
    Grad,
    /// Horizontal gradient of a scalar (1 -> 2 components).
    GradH,
    /// Vertical derivative, componentwise.
    D3,
    /// Curl of a 3-component field.
    Curl,
    /// Divergence of a 3-component field.
    Div,
    /// Laplacian, componentwise.
    Laplacian,
}

/// FFT plans and wavenumber tables for one grid.
pub struct SpectralBox<T: Scalar> {
    grid: Grid3<T>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    /// Derivative wavenumbers (Nyquist zeroed).
    kd: Vec<T>,
    /// Raw wavenumbers (Nyquist kept), used for |k|^2 symbols.
    k2: Vec<T>,
}

impl<T: Scalar> SpectralBox<T> {
    pub fn new(grid: Grid3<T>) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let kd = (0..n).map(|j| grid.wavenumber_deriv(j)).collect();
        let k2 = (0..n)
            .map(|j| {
                let k = grid.wavenumber(j);
                k * k
            })
            .collect();
        Self {
            grid,
            fwd,
            inv,
            kd,
            k2,
        }
    }

    pub fn grid(&self) -> Grid3<T> {
        self.grid
    }

    fn n(&self) -> usize {
        self.grid.n()
    }

    /// In-place 3-D transform, one axis at a time.
    fn fft3(&self, data: &mut [Complex<T>], inverse: bool) {
        let n = self.n();
        let plan = if inverse { &self.inv } else { &self.fwd };
        debug_assert_eq!(data.len(), n * n * n);

        // Axis 0: contiguous lines; the plan processes the chunked buffer.
        {
            let scratch_len = plan.get_inplace_scratch_len();
            data.par_chunks_mut(n * n)
                .for_each_init(
                    || vec![Complex::new(T::zero(), T::zero()); scratch_len],
                    |scratch, plane| plan.process_with_scratch(plane, scratch),
                );
        }

        // Axes 1 and 2: gather strided lines per plane, batch-transform.
        for axis in 1..3 {
            let stride = if axis == 1 { n } else { n * n };
            let planes = n;
            let scratch_len = plan.get_inplace_scratch_len();
            // For axis 1, the line family (i, k) is indexed by plane k;
            // for axis 2, by plane j. Each plane owns disjoint data.
            let plane_indices: Vec<usize> = (0..planes).collect();
            let data_ptr = SendPtr(data.as_mut_ptr());
            plane_indices.par_iter().for_each_init(
                || {
                    (
                        vec![Complex::new(T::zero(), T::zero()); n * n],
                        vec![Complex::new(T::zero(), T::zero()); scratch_len],
                    )
                },
                |(buf, scratch), &p| {
                    let base = data_ptr.ptr();
                    // Gather n lines of length n for this plane.
                    for a in 0..n {
                        for b in 0..n {
                            let idx = if axis == 1 {
                                // line along j for fixed (i=a, k=p)
                                a + n * (b + n * p)
                            } else {
                                // line along k for fixed (i=a, j=p)
                                a + n * (p + n * b)
                            };
                            buf[a * n + b] = unsafe { *base.add(idx) };
                        }
                    }
                    plan.process_with_scratch(buf, scratch);
                    for a in 0..n {
                        for b in 0..n {
                            let idx = if axis == 1 {
                                a + n * (b + n * p)
                            } else {
                                a + n * (p + n * b)
                            };
                            unsafe { *base.add(idx) = buf[a * n + b] };
                        }
                    }
                    let _ = stride;
                },
            );
        }
    }

    /// Real lattice -> full complex spectrum.
    pub fn forward(&self, real: &[T]) -> Vec<Complex<T>> {
        debug_assert_eq!(real.len(), self.grid.len());
        let mut spec: Vec<Complex<T>> = real
            .iter()
            .map(|&v| Complex::new(v, T::zero()))
            .collect();
        self.fft3(&mut spec, false);
        spec
    }

    /// Spectrum -> real lattice (normalized, imaginary part dropped).
    pub fn inverse(&self, mut spec: Vec<Complex<T>>) -> Vec<T> {
        self.fft3(&mut spec, true);
        let scale = T::one() / lit::<T>(self.grid.len() as f64);
        spec.into_iter().map(|c| c.re * scale).collect()
    }

    /// Apply `ik_axis` (derivative symbol) in place.
    pub fn derivative_spec(&self, spec: &mut [Complex<T>], axis: usize) {
        let n = self.n();
        let kd = &self.kd;
        spec.par_chunks_mut(n * n)
            .enumerate()
            .for_each(|(i3, plane)| {
                for i2 in 0..n {
                    for i1 in 0..n {
                        let k = match axis {
                            0 => kd[i1],
                            1 => kd[i2],
                            _ => kd[i3],
                        };
                        let c = plane[i1 + n * i2];
                        plane[i1 + n * i2] = Complex::new(-c.im * k, c.re * k);
                    }
                }
            });
    }

    /// Multiply by `-|k|^2` (Laplacian symbol) in place.
    pub fn laplacian_spec(&self, spec: &mut [Complex<T>]) {
        let n = self.n();
        let k2 = &self.k2;
        spec.par_chunks_mut(n * n)
            .enumerate()
            .for_each(|(i3, plane)| {
                for i2 in 0..n {
                    let kk = k2[i2] + k2[i3];
                    for i1 in 0..n {
                        let s = -(k2[i1] + kk);
                        plane[i1 + n * i2] = plane[i1 + n * i2] * s;
                    }
                }
            });
    }

    /// Multiply by `1/|k|^2` with the mean mode zeroed: the periodic
    /// zero-mean inverse of `-Laplacian`.
    pub fn inv_neg_laplacian_spec(&self, spec: &mut [Complex<T>]) {
        let n = self.n();
        let k2 = &self.k2;
        spec.par_chunks_mut(n * n)
            .enumerate()
            .for_each(|(i3, plane)| {
                for i2 in 0..n {
                    for i1 in 0..n {
                        let kk = k2[i1] + k2[i2] + k2[i3];
                        let idx = i1 + n * i2;
                        if kk == T::zero() {
                            plane[idx] = Complex::new(T::zero(), T::zero());
                        } else {
                            plane[idx] = plane[idx] / kk;
                        }
                    }
                }
            });
    }

    /// Zero every mode with any |m_i| above `max_mode`.
    pub fn truncate_spec(&self, spec: &mut [Complex<T>], max_mode: i64) {
        let n = self.n();
        let grid = self.grid;
        spec.par_chunks_mut(n * n)
            .enumerate()
            .for_each(|(i3, plane)| {
                let m3 = grid.mode_number(i3).abs();
                for i2 in 0..n {
                    let m2 = grid.mode_number(i2).abs();
                    for i1 in 0..n {
                        let m1 = grid.mode_number(i1).abs();
                        if m1 > max_mode || m2 > max_mode || m3 > max_mode {
                            plane[i1 + n * i2] = Complex::new(T::zero(), T::zero());
                        }
                    }
                }
            });
    }

    /// Standard 2/3-rule mask bound: keep |m_i| <= n/3.
    pub fn dealias_mode(&self) -> i64 {
        (self.n() / 3) as i64
    }

    /// Derivative of one real lattice along `axis`.
    pub fn derivative_real(&self, data: &[T], axis: usize) -> Vec<T> {
        let mut spec = self.forward(data);
        self.derivative_spec(&mut spec, axis);
        self.inverse(spec)
    }

    /// The spec-level differential operator on snapshots.
    pub fn differential_op(&self, f: &Snapshot<T>, op: DiffOp) -> Result<Snapshot<T>> {
        let grid = f.grid();
        if grid != self.grid {
            return Err(Error::Incompatible("snapshot grid does not match engine".into()));
        }
        let need3 = matches!(op, DiffOp::Curl | DiffOp::Div);
        if need3 && f.n_comps() != 3 {
            return Err(Error::Incompatible(format!(
                "{op:?} needs 3 components, got {}",
                f.n_comps()
            )));
        }
        if matches!(op, DiffOp::Grad | DiffOp::GradH) && f.n_comps() != 1 {
            return Err(Error::Incompatible(format!(
                "{op:?} needs a scalar input, got {} components",
                f.n_comps()
            )));
        }
        let comps = match op {
            DiffOp::Grad => (0..3)
                .map(|a| self.derivative_real(f.comp(0), a))
                .collect::<Vec<_>>(),
            DiffOp::GradH => (0..2)
                .map(|a| self.derivative_real(f.comp(0), a))
                .collect::<Vec<_>>(),
            DiffOp::D3 => f
                .comps()
                .iter()
                .map(|c| self.derivative_real(c, 2))
                .collect(),
            DiffOp::Curl => {
                let d = |c: usize, a: usize| self.derivative_real(f.comp(c), a);
                let (d2u3, d3u2) = (d(2, 1), d(1, 2));
                let (d3u1, d1u3) = (d(0, 2), d(2, 0));
                let (d1u2, d2u1) = (d(1, 0), d(0, 1));
                let sub = |a: Vec<T>, b: Vec<T>| -> Vec<T> {
                    a.into_iter().zip(b).map(|(x, y)| x - y).collect()
                };
                vec![sub(d2u3, d3u2), sub(d3u1, d1u3), sub(d1u2, d2u1)]
            }
            DiffOp::Div => {
                let mut acc = self.derivative_real(f.comp(0), 0);
                for (a, c) in [(1usize, 1usize), (2, 2)] {
                    let d = self.derivative_real(f.comp(c), a);
                    for (x, y) in acc.iter_mut().zip(d) {
                        *x += y;
                    }
                }
                vec![acc]
            }
            DiffOp::Laplacian => f
                .comps()
                .iter()
                .map(|c| {
                    let mut spec = self.forward(c);
                    self.laplacian_spec(&mut spec);
                    self.inverse(spec)
                })
                .collect(),
        };
        Snapshot::new(grid, f.time(), comps)
    }

    /// Max-node |div u|.
    pub fn max_divergence(&self, u: &Snapshot<T>) -> Result<T> {
        let div = self.differential_op(u, DiffOp::Div)?;
        Ok(div.max_abs())
    }

    /// L2-orthogonal projection onto divergence-free fields.
    pub fn leray_project(&self, v: &Snapshot<T>) -> Result<Snapshot<T>> {
        if v.n_comps() != 3 {
            return Err(Error::Incompatible(
                "Leray projection needs a 3-component velocity".into(),
            ));
        }
        let mut specs: Vec<Vec<Complex<T>>> =
            v.comps().iter().map(|c| self.forward(c)).collect();
        self.leray_project_spec(&mut specs);
        let comps = specs.into_iter().map(|s| self.inverse(s)).collect();
        Snapshot::new(v.grid(), v.time(), comps)
    }

    /// Projection in spectral space: u_i -= k_i (k . u) / |k|^2.
    pub fn leray_project_spec(&self, specs: &mut [Vec<Complex<T>>]) {
        assert_eq!(specs.len(), 3);
        let n = self.n();
        let kd = &self.kd;
        let (s0, rest) = specs.split_at_mut(1);
        let (s1, s2) = rest.split_at_mut(1);
        let (s0, s1, s2) = (&mut s0[0], &mut s1[0], &mut s2[0]);
        let planes: Vec<usize> = (0..n).collect();
        let p0 = SendPtr(s0.as_mut_ptr());
        let p1 = SendPtr(s1.as_mut_ptr());
        let p2 = SendPtr(s2.as_mut_ptr());
        planes.par_iter().for_each(|&i3| {
            let (b0, b1, b2) = (p0.ptr(), p1.ptr(), p2.ptr());
            let k3 = kd[i3];
            for i2 in 0..n {
                let k2 = kd[i2];
                for i1 in 0..n {
                    let k1 = kd[i1];
                    let kk = k1 * k1 + k2 * k2 + k3 * k3;
                    if kk == T::zero() {
                        continue;
                    }
                    let idx = i1 + n * (i2 + n * i3);
                    unsafe {
                        let a = *b0.add(idx);
                        let b = *b1.add(idx);
                        let c = *b2.add(idx);
                        let dot = a * k1 + b * k2 + c * k3;
                        let f = dot / kk;
                        *b0.add(idx) = a - f * k1;
                        *b1.add(idx) = b - f * k2;
                        *b2.add(idx) = c - f * k3;
                    }
                }
            }
        });
    }

    /// Heat semigroup `exp(nu t Laplacian)`; `horizontal` restricts the
    /// symbol to `|k_h|^2` (the two-component heat flow of the axis family).
    pub fn heat_propagate(&self, f: &Snapshot<T>, nu: T, t: T, horizontal: bool) -> Snapshot<T> {
        let n = self.n();
        let k2 = &self.k2;
        let comps: Vec<Vec<T>> = f
            .comps()
            .iter()
            .map(|c| {
                let mut spec = self.forward(c);
                spec.par_chunks_mut(n * n)
                    .enumerate()
                    .for_each(|(i3, plane)| {
                        for i2 in 0..n {
                            for i1 in 0..n {
                                let kk = if horizontal {
                                    k2[i1] + k2[i2]
                                } else {
                                    k2[i1] + k2[i2] + k2[i3]
                                };
                                let decay = (-nu * kk * t).exp();
                                plane[i1 + n * i2] = plane[i1 + n * i2] * decay;
                            }
                        }
                    });
                self.inverse(spec)
            })
            .collect();
        Snapshot::new(f.grid(), f.time() + t, comps).expect("shape preserved")
    }

    /// Pointwise |grad f|^2 summed over all components of `f`.
    pub fn grad_sq(&self, f: &Snapshot<T>) -> Vec<T> {
        let mut out = vec![T::zero(); f.grid().len()];
        for c in f.comps() {
            for axis in 0..3 {
                let d = self.derivative_real(c, axis);
                for (o, v) in out.iter_mut().zip(d) {
                    *o += v * v;
                }
            }
        }
        out
    }

    /// Band-limit a snapshot: zero all modes with any |m_i| > max_mode.
    pub fn band_limit(&self, f: &Snapshot<T>, max_mode: i64) -> Snapshot<T> {
        let comps = f
            .comps()
            .iter()
            .map(|c| {
                let mut spec = self.forward(c);
                self.truncate_spec(&mut spec, max_mode);
                self.inverse(spec)
            })
            .collect();
        Snapshot::new(f.grid(), f.time(), comps).expect("shape preserved")
    }

    #[allow(clippy::wrong_self_convention)]
    pub(crate) fn to_spec_vec(&self, u: &Snapshot<T>) -> Vec<Vec<Complex<T>>> {
        u.comps().iter().map(|c| self.forward(c)).collect()
    }
}

/// Raw pointer wrapper for disjoint parallel plane writes. The accessor
/// keeps closures capturing the wrapper, not the bare pointer.
#[derive(Clone, Copy)]
struct SendPtr<P>(*mut P);
unsafe impl<P> Send for SendPtr<P> {}
unsafe impl<P> Sync for SendPtr<P> {}

impl<P> SendPtr<P> {
    #[inline]
    fn ptr(&self) -> *mut P {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_scalar(n: usize, f: impl Fn(f64, f64, f64) -> f64) -> (Grid3<f64>, Vec<f64>) {
        let grid = Grid3::<f64>::two_pi(n).unwrap();
        let mut data = vec![0.0; grid.len()];
        for idx in 0..grid.len() {
            let [x, y, z] = grid.node(idx);
            data[idx] = f(x, y, z);
        }
        (grid, data)
    }

    #[test]
    fn roundtrip_is_identity() {
        let (grid, data) = sample_scalar(16, |x, y, z| (x).sin() * (2.0 * y).cos() + z.sin());
        let sb = SpectralBox::new(grid);
        let back = sb.inverse(sb.forward(&data));
        for (a, b) in data.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_single_mode_is_exact() {
        let (grid, data) = sample_scalar(32, |x, _, _| x.sin());
        let sb = SpectralBox::new(grid);
        let snap = Snapshot::new(grid, 0.0, vec![data]).unwrap();
        let g = sb.differential_op(&snap, DiffOp::Grad).unwrap();
        for idx in 0..grid.len() {
            let [x, _, _] = grid.node(idx);
            assert!((g.comp(0)[idx] - x.cos()).abs() < 1e-12);
            assert!(g.comp(1)[idx].abs() < 1e-12);
            assert!(g.comp(2)[idx].abs() < 1e-12);
        }
    }

    #[test]
    fn curl_of_axis_mode() {
        // curl (0,0,sin x1) = (0, -cos x1, 0)
        let (grid, u3) = sample_scalar(32, |x, _, _| x.sin());
        let z = vec![0.0; grid.len()];
        let sb = SpectralBox::new(grid);
        let snap = Snapshot::new(grid, 0.0, vec![z.clone(), z, u3]).unwrap();
        let c = sb.differential_op(&snap, DiffOp::Curl).unwrap();
        for idx in 0..grid.len() {
            let [x, _, _] = grid.node(idx);
            assert!(c.comp(0)[idx].abs() < 1e-12);
            assert!((c.comp(1)[idx] + x.cos()).abs() < 1e-12);
            assert!(c.comp(2)[idx].abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_identities_hold() {
        // curl grad = 0, div curl = 0, laplacian = div grad on band-limited data.
        let (grid, f) = sample_scalar(32, |x, y, z| {
            (x).sin() * (2.0 * y).cos() * (3.0 * z).sin() + (2.0 * x - y).cos()
        });
        let sb = SpectralBox::new(grid);
        let snap = Snapshot::new(grid, 0.0, vec![f]).unwrap();
        let grad = sb.differential_op(&snap, DiffOp::Grad).unwrap();
        let scale = grad.max_abs();

        let cg = sb.differential_op(&grad, DiffOp::Curl).unwrap();
        assert!(cg.max_abs() <= 1e-12 * scale);

        let lap = sb.differential_op(&snap, DiffOp::Laplacian).unwrap();
        let divgrad = sb.differential_op(&grad, DiffOp::Div).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in lap.comp(0).iter().zip(divgrad.comp(0)) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst <= 1e-12 * lap.max_abs());

        // div curl = 0 on a generic 3-component field.
        let (_, g2) = sample_scalar(32, |x, y, _| (x + 2.0 * y).sin());
        let (_, g3) = sample_scalar(32, |_, y, z| (y - z).cos());
        let v = Snapshot::new(grid, 0.0, vec![snap.comp(0).to_vec(), g2, g3]).unwrap();
        let curl = sb.differential_op(&v, DiffOp::Curl).unwrap();
        let dc = sb.differential_op(&curl, DiffOp::Div).unwrap();
        assert!(dc.max_abs() <= 1e-12 * curl.max_abs());
    }

    #[test]
    fn leray_kills_gradients_and_is_idempotent() {
        let (grid, f) = sample_scalar(32, |x, y, _| x.sin() + (y * 2.0).cos());
        let sb = SpectralBox::new(grid);
        let snap = Snapshot::new(grid, 0.0, vec![f]).unwrap();
        let grad = sb.differential_op(&snap, DiffOp::Grad).unwrap();
        let proj = sb.leray_project(&grad).unwrap();
        assert!(proj.max_abs() <= 1e-13 * grad.max_abs());

        // Idempotence on a random-ish smooth field.
        let (_, a) = sample_scalar(32, |x, y, z| (x + y).sin() * z.cos());
        let (_, b) = sample_scalar(32, |x, y, z| (2.0 * x - z).cos() + y.sin());
        let (_, c) = sample_scalar(32, |x, y, z| (x - 2.0 * y + z).sin());
        let v = Snapshot::new(grid, 0.0, vec![a, b, c]).unwrap();
        let p1 = sb.leray_project(&v).unwrap();
        let p2 = sb.leray_project(&p1).unwrap();
        let scale = p1.max_abs();
        for i in 0..3 {
            for (x, y) in p1.comp(i).iter().zip(p2.comp(i)) {
                assert!((x - y).abs() <= 1e-13 * scale);
            }
        }
        // Projection output is divergence-free well under the snapshot bound.
        let div = sb.max_divergence(&p1).unwrap();
        assert!(div <= p1.div_free_bound());
    }

    #[test]
    fn incompatible_component_counts_error() {
        let (grid, f) = sample_scalar(16, |x, _, _| x.sin());
        let sb = SpectralBox::new(grid);
        let snap = Snapshot::new(grid, 0.0, vec![f]).unwrap();
        assert!(sb.differential_op(&snap, DiffOp::Curl).is_err());
        assert!(sb.differential_op(&snap, DiffOp::Div).is_err());
        assert!(sb.leray_project(&snap).is_err());
    }
}
