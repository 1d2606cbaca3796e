//! Pressure solves, decompositions, cutoffs and caloric test functions.
//!
//! The Newtonian potential of the whole-space formulas is realized as the
//! periodic zero-mean inverse Laplacian (spectral multiplier 1/|k|^2); all
//! identities and ratio bounds are computed consistently in that
//! convention. Grid pressures are gauged to zero mean per snapshot.

use crate::cutoff::{Cutoff, CutoffGeometry, Profile};
use crate::error::{Error, Result};
use crate::field::{FieldKind, Snapshot, SpaceTimeField};
use crate::grid::Grid3;
use crate::reduce;
use crate::scalar::{lit, Scalar};
use crate::spectral::SpectralBox;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

type Spec<T> = Vec<Complex<T>>;

/// Pointwise product of two real lattices.
fn product<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect()
}

/// Quadratic product spectra in upper-triangular order 11,22,33,12,13,23.
fn product_specs<T: Scalar>(sb: &SpectralBox<T>, u: &Snapshot<T>) -> [Spec<T>; 6] {
    let pairs = [(0usize, 0usize), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let mut out: Vec<Spec<T>> = Vec::with_capacity(6);
    for (i, j) in pairs {
        out.push(sb.forward(&product(u.comp(i), u.comp(j))));
    }
    out.try_into().ok().unwrap()
}

#[inline]
fn pair_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        (1, 2) => 5,
        _ => unreachable!(),
    }
}

/// Assemble `(-Lap)^{-1} sum_{(i,j) in pairs} d_i d_j p_ij` from product
/// spectra; the symbol is `-k_i k_j / |k|^2` per pair (zero mean).
fn potential_of_pairs<T: Scalar>(
    sb: &SpectralBox<T>,
    prods: &[Spec<T>; 6],
    pairs: &[(usize, usize)],
) -> Spec<T> {
    let grid = sb.grid();
    let n = grid.n();
    let len = grid.len();
    let mut acc = vec![Complex::new(T::zero(), T::zero()); len];
    // k tables with the Nyquist plane zeroed, matching first derivatives.
    let kd: Vec<T> = (0..n).map(|j| grid.wavenumber_deriv(j)).collect();
    for &(i, j) in pairs {
        let p = &prods[pair_index(i, j)];
        for i3 in 0..n {
            for i2 in 0..n {
                let base = n * (i2 + n * i3);
                for i1 in 0..n {
                    let k = [kd[i1], kd[i2], kd[i3]];
                    let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    if kk == T::zero() {
                        continue;
                    }
                    let idx = base + i1;
                    let sym = -k[i] * k[j] / kk;
                    acc[idx] += p[idx] * sym;
                }
            }
        }
    }
    acc
}

const ALL_PAIRS: [(usize, usize); 9] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (1, 0),
    (1, 1),
    (1, 2),
    (2, 0),
    (2, 1),
    (2, 2),
];

/// Index pairs entering pi1: everything except (3,3).
const PI1_PAIRS: [(usize, usize); 8] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (1, 0),
    (1, 1),
    (1, 2),
    (2, 0),
    (2, 1),
];

/// Instantaneous pressure from precomputed quadratic product spectra.
pub(crate) fn solve_pressure_from_specs<T: Scalar>(
    sb: &SpectralBox<T>,
    prods: &[Spec<T>; 6],
    time: T,
) -> Snapshot<T> {
    let spec = potential_of_pairs(sb, prods, &ALL_PAIRS);
    let data = sb.inverse(spec);
    Snapshot::new(sb.grid(), time, vec![data]).expect("scalar shape")
}

/// Solve `-Lap pi = d_i d_j (u_i u_j)` with zero mean. Inputs beyond the
/// divergence tolerance are Leray-projected first (warn-and-project
/// contract; callers wanting a hard failure check the flag themselves).
pub fn solve_pressure<T: Scalar>(sb: &SpectralBox<T>, u: &Snapshot<T>) -> Result<Snapshot<T>> {
    if u.n_comps() != 3 {
        return Err(Error::Incompatible("pressure solve needs a velocity".into()));
    }
    let u_owned;
    let u_ref = if sb.max_divergence(u)? > u.div_free_bound() {
        u_owned = sb.leray_project(u)?;
        &u_owned
    } else {
        u
    };
    let prods = product_specs(sb, u_ref);
    Ok(solve_pressure_from_specs(sb, &prods, u.time()))
}

/// Pressure field for every snapshot of a velocity field.
pub fn pressure_field<T: Scalar>(
    sb: &SpectralBox<T>,
    u: &SpaceTimeField<T>,
) -> Result<SpaceTimeField<T>> {
    let snaps = u
        .snapshots()
        .iter()
        .map(|s| solve_pressure(sb, s))
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(FieldKind::Pressure, snaps)
}

/// The structural split of the pressure used throughout:
/// pi = pi1 + pi2, and d3 pi2 = d3 pi3 + d3pi4 via div u = 0.
#[derive(Debug, Clone)]
pub struct Sec3Decomposition<T> {
    pub pi: Snapshot<T>,
    pub pi1: Snapshot<T>,
    pub pi2: Snapshot<T>,
    pub pi3: Snapshot<T>,
    pub d3pi4: Snapshot<T>,
    /// Sum of (|u|^2)^2 over nodes: the natural squared scale of the
    /// pressure objects, guarding the relative residuals when individual
    /// pieces vanish identically.
    source_scale_sq: T,
}

/// Decompose the pressure of one velocity snapshot.
pub fn decompose_sec3<T: Scalar>(sb: &SpectralBox<T>, u: &Snapshot<T>) -> Result<Sec3Decomposition<T>> {
    if u.n_comps() != 3 {
        return Err(Error::Incompatible("decomposition needs a velocity".into()));
    }
    let u_owned;
    let u_ref = if sb.max_divergence(u)? > u.div_free_bound() {
        u_owned = sb.leray_project(u)?;
        &u_owned
    } else {
        u
    };
    let grid = sb.grid();
    let t = u.time();
    let prods = product_specs(sb, u_ref);

    let pi = sb.inverse(potential_of_pairs(sb, &prods, &ALL_PAIRS));
    let pi1 = sb.inverse(potential_of_pairs(sb, &prods, &PI1_PAIRS));
    let pi2 = sb.inverse(potential_of_pairs(sb, &prods, &[(2, 2)]));

    // pi3 = 2 (-Lap)^{-1} d3 grad_h . (-u3 u_h)
    let pi3 = {
        let n = grid.n();
        let kd: Vec<T> = (0..n).map(|j| grid.wavenumber_deriv(j)).collect();
        let p13 = &prods[pair_index(0, 2)];
        let p23 = &prods[pair_index(1, 2)];
        let mut spec = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        for i3 in 0..n {
            for i2 in 0..n {
                let base = n * (i2 + n * i3);
                for i1 in 0..n {
                    let (k1, k2, k3) = (kd[i1], kd[i2], kd[i3]);
                    let kk = k1 * k1 + k2 * k2 + k3 * k3;
                    if kk == T::zero() {
                        continue;
                    }
                    let idx = base + i1;
                    // (d3 grad_h . (-u3 u_h))^ = +k3 (k1 p13 + k2 p23)
                    let g = (p13[idx] * k1 + p23[idx] * k2) * k3;
                    spec[idx] = g * (lit::<T>(2.0) / kk);
                }
            }
        }
        sb.inverse(spec)
    };

    // d3pi4 = 2 (-Lap)^{-1} d3 d3 (u_h . grad_h u3)
    let d3pi4 = {
        let d1u3 = sb.derivative_real(u_ref.comp(2), 0);
        let d2u3 = sb.derivative_real(u_ref.comp(2), 1);
        let mut q = vec![T::zero(); grid.len()];
        for idx in 0..grid.len() {
            q[idx] = u_ref.comp(0)[idx] * d1u3[idx] + u_ref.comp(1)[idx] * d2u3[idx];
        }
        let qh = sb.forward(&q);
        let n = grid.n();
        let kd: Vec<T> = (0..n).map(|j| grid.wavenumber_deriv(j)).collect();
        let mut spec = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        for i3 in 0..n {
            let k3 = kd[i3];
            for i2 in 0..n {
                let base = n * (i2 + n * i3);
                for i1 in 0..n {
                    let (k1, k2) = (kd[i1], kd[i2]);
                    let kk = k1 * k1 + k2 * k2 + k3 * k3;
                    if kk == T::zero() {
                        continue;
                    }
                    let idx = base + i1;
                    spec[idx] = qh[idx] * (-(lit::<T>(2.0) * k3 * k3) / kk);
                }
            }
        }
        sb.inverse(spec)
    };

    let snap = |data: Vec<T>| Snapshot::new(grid, t, vec![data]).expect("scalar shape");
    let source_scale_sq = reduce::sum_indexed(grid.len(), |i| {
        let m = u_ref.magnitude_at(i);
        m * m * m * m
    });
    Ok(Sec3Decomposition {
        pi: snap(pi),
        pi1: snap(pi1),
        pi2: snap(pi2),
        pi3: snap(pi3),
        d3pi4: snap(d3pi4),
        source_scale_sq,
    })
}

/// Which object a cutoff decomposition splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffSource {
    /// pi1-type terms (all index pairs except (3,3)).
    Pi1Terms,
    /// The full pressure.
    FullPi,
    /// The horizontal pressure gradient (two components).
    GradhPi,
    /// The d3pi4 term.
    D3pi4Terms,
}

/// Cutoff geometry of the split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    /// Radial cutoff in |x - x0| (parabolic-cylinder analysis).
    Ball,
    /// Cutoff in the horizontal distance |x_h - x0_h| only.
    Horizontal,
}

/// Near-field / harmonic-remainder split: `tilde_pi1` is the singular
/// integral applied to the cutoff quadratic term, `tilde_pi2` the
/// remainder, harmonic where the cutoff sits at 1.
#[derive(Debug, Clone)]
pub struct CutoffDecomposition<T> {
    pub source: CutoffSource,
    pub mode: CutoffMode,
    pub rho: T,
    pub center: [T; 3],
    /// Parent field being split (pi, pi1, grad_h pi, or d3pi4).
    pub parent: Snapshot<T>,
    pub tilde_pi1: Snapshot<T>,
    pub tilde_pi2: Snapshot<T>,
}

/// Spatial cutoff weight used by the decomposition.
fn cutoff_weights<T: Scalar>(grid: Grid3<T>, center: [T; 3], rho: T, mode: CutoffMode) -> Vec<T> {
    let geometry = match mode {
        CutoffMode::Ball => CutoffGeometry::Ball,
        CutoffMode::Horizontal => CutoffGeometry::Horizontal,
    };
    // The harmonic-remainder tolerance needs the Gaussian-tail profile.
    let cut = Cutoff::new(rho, geometry, center, T::zero()).with_profile(Profile::GaussianTail);
    let mut w = vec![T::zero(); grid.len()];
    for idx in 0..grid.len() {
        w[idx] = cut.spatial(grid, grid.node(idx));
    }
    w
}

/// Split `source` for the velocity snapshot `u` at scale `rho`.
pub fn decompose_cutoff<T: Scalar>(
    sb: &SpectralBox<T>,
    source: CutoffSource,
    u: &Snapshot<T>,
    center: [T; 3],
    rho: T,
    mode: CutoffMode,
) -> Result<CutoffDecomposition<T>> {
    let grid = sb.grid();
    let floor = lit::<T>(8.0) * grid.spacing();
    if rho < floor {
        return Err(Error::BelowFloor {
            scale: rho.to_f64().unwrap_or(f64::NAN),
            floor: floor.to_f64().unwrap_or(f64::NAN),
        });
    }
    if u.n_comps() != 3 {
        return Err(Error::Incompatible("cutoff decomposition needs a velocity".into()));
    }
    let t = u.time();
    let w = cutoff_weights(grid, center, rho, mode);
    let w2: Vec<T> = w.iter().map(|&v| v * v).collect();
    let sec3 = decompose_sec3(sb, u)?;

    let windowed_products = |pairs: &[(usize, usize)]| -> [Spec<T>; 6] {
        let mut prods: Vec<Spec<T>> = vec![Vec::new(); 6];
        let mut needed = [false; 6];
        for &(i, j) in pairs {
            needed[pair_index(i, j)] = true;
        }
        let combos = [(0usize, 0usize), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
        for (slot, &(i, j)) in combos.iter().enumerate() {
            if needed[slot] {
                let mut p = product(u.comp(i), u.comp(j));
                for (v, c) in p.iter_mut().zip(&w2) {
                    *v *= *c;
                }
                prods[slot] = sb.forward(&p);
            } else {
                prods[slot] = vec![Complex::new(T::zero(), T::zero()); grid.len()];
            }
        }
        prods.try_into().ok().unwrap()
    };

    let scalar = |data: Vec<T>| Snapshot::new(grid, t, vec![data]).expect("scalar shape");

    let (parent, tilde_pi1) = match source {
        CutoffSource::Pi1Terms => {
            let prods = windowed_products(&PI1_PAIRS);
            let t1 = sb.inverse(potential_of_pairs(sb, &prods, &PI1_PAIRS));
            (sec3.pi1.clone(), scalar(t1))
        }
        CutoffSource::FullPi => {
            let prods = windowed_products(&ALL_PAIRS);
            let t1 = sb.inverse(potential_of_pairs(sb, &prods, &ALL_PAIRS));
            (sec3.pi.clone(), scalar(t1))
        }
        CutoffSource::GradhPi => {
            // Components a = 1, 2 of grad_h pi, split with windowed
            // derivative products d_a(u_i u_j) chi^2.
            let combos = [(0usize, 0usize), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
            let mut parent_comps: Vec<Vec<T>> = Vec::with_capacity(2);
            let mut tilde_comps: Vec<Vec<T>> = Vec::with_capacity(2);
            for a in 0..2 {
                let mut spec = sb.forward(sec3.pi.comp(0));
                sb.derivative_spec(&mut spec, a);
                parent_comps.push(sb.inverse(spec));

                let mut prods: Vec<Spec<T>> = Vec::with_capacity(6);
                for &(i, j) in combos.iter() {
                    let p = product(u.comp(i), u.comp(j));
                    let spec_p = sb.forward(&p);
                    let mut dspec = spec_p;
                    sb.derivative_spec(&mut dspec, a);
                    let mut dp = sb.inverse(dspec);
                    for (v, c) in dp.iter_mut().zip(&w2) {
                        *v *= *c;
                    }
                    prods.push(sb.forward(&dp));
                }
                let prods: [Spec<T>; 6] = prods.try_into().ok().unwrap();
                tilde_comps.push(sb.inverse(potential_of_pairs(sb, &prods, &ALL_PAIRS)));
            }
            let parent = Snapshot::new(grid, t, parent_comps)?;
            let tilde = Snapshot::new(grid, t, tilde_comps)?;
            let tilde2 = subtract(&parent, &tilde)?;
            return Ok(CutoffDecomposition {
                source,
                mode,
                rho,
                center,
                parent,
                tilde_pi1: tilde,
                tilde_pi2: tilde2,
            });
        }
        CutoffSource::D3pi4Terms => {
            let d1u3 = sb.derivative_real(u.comp(2), 0);
            let d2u3 = sb.derivative_real(u.comp(2), 1);
            let mut q = vec![T::zero(); grid.len()];
            for idx in 0..grid.len() {
                q[idx] =
                    (u.comp(0)[idx] * d1u3[idx] + u.comp(1)[idx] * d2u3[idx]) * w2[idx];
            }
            let qh = sb.forward(&q);
            let n = grid.n();
            let kd: Vec<T> = (0..n).map(|j| grid.wavenumber_deriv(j)).collect();
            let mut spec = vec![Complex::new(T::zero(), T::zero()); grid.len()];
            for i3 in 0..n {
                let k3 = kd[i3];
                for i2 in 0..n {
                    let base = n * (i2 + n * i3);
                    for i1 in 0..n {
                        let (k1, k2) = (kd[i1], kd[i2]);
                        let kk = k1 * k1 + k2 * k2 + k3 * k3;
                        if kk == T::zero() {
                            continue;
                        }
                        let idx = base + i1;
                        spec[idx] = qh[idx] * (-(lit::<T>(2.0) * k3 * k3) / kk);
                    }
                }
            }
            (sec3.d3pi4.clone(), scalar(sb.inverse(spec)))
        }
    };

    let tilde_pi2 = subtract(&parent, &tilde_pi1)?;
    Ok(CutoffDecomposition {
        source,
        mode,
        rho,
        center,
        parent,
        tilde_pi1,
        tilde_pi2,
    })
}

fn subtract<T: Scalar>(a: &Snapshot<T>, b: &Snapshot<T>) -> Result<Snapshot<T>> {
    let comps = a
        .comps()
        .iter()
        .zip(b.comps())
        .map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| p - q).collect())
        .collect();
    Snapshot::new(a.grid(), a.time(), comps)
}

impl<T: Scalar> CutoffDecomposition<T> {
    /// Max |Lap tilde_pi2| over the region within `inner_radius` of the
    /// center (ball or horizontal distance per mode), measured spectrally.
    pub fn harmonic_residual(&self, sb: &SpectralBox<T>, inner_radius: T) -> Result<T> {
        let lap = sb.differential_op(&self.tilde_pi2, crate::spectral::DiffOp::Laplacian)?;
        let grid = sb.grid();
        let r2 = inner_radius * inner_radius;
        let mut worst = T::zero();
        for idx in 0..grid.len() {
            let x = grid.node(idx);
            let d2 = match self.mode {
                CutoffMode::Ball => grid.dist2(x, self.center),
                CutoffMode::Horizontal => grid.dist2_h(x, self.center),
            };
            if d2 < r2 {
                for c in 0..lap.n_comps() {
                    worst = worst.max(lap.comp(c)[idx].abs());
                }
            }
        }
        Ok(worst)
    }

    /// Max |parent - (tilde_pi1 + tilde_pi2)| (identically zero by
    /// construction, kept as a consistency probe).
    pub fn completeness_residual(&self) -> T {
        let mut worst = T::zero();
        for c in 0..self.parent.n_comps() {
            for idx in 0..self.parent.comp(c).len() {
                let s = self.tilde_pi1.comp(c)[idx] + self.tilde_pi2.comp(c)[idx];
                worst = worst.max((self.parent.comp(c)[idx] - s).abs());
            }
        }
        worst
    }
}

impl<T: Scalar> Sec3Decomposition<T> {
    /// L2 norm of pi1 + pi2 - pi, relative to the largest participating
    /// term (absolute when all vanish).
    pub fn sum_residual(&self) -> T {
        let len = self.pi.comp(0).len();
        let num = reduce::sum_indexed(len, |i| {
            let d = self.pi1.comp(0)[i] + self.pi2.comp(0)[i] - self.pi.comp(0)[i];
            d * d
        });
        let den = [&self.pi, &self.pi1, &self.pi2]
            .iter()
            .map(|s| {
                reduce::sum_indexed(len, |i| {
                    let v = s.comp(0)[i];
                    v * v
                })
            })
            .fold(self.source_scale_sq, |a, b| a.max(b));
        if den == T::zero() {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    /// L2 residual of d3 pi2 = d3 pi3 + d3pi4, relative to the largest
    /// participating term (absolute when all vanish).
    pub fn divergence_rewrite_residual(&self, sb: &SpectralBox<T>) -> Result<T> {
        let d3pi2 = sb.differential_op(&self.pi2, crate::spectral::DiffOp::D3)?;
        let d3pi3 = sb.differential_op(&self.pi3, crate::spectral::DiffOp::D3)?;
        let len = d3pi2.comp(0).len();
        let num = reduce::sum_indexed(len, |i| {
            let d = d3pi2.comp(0)[i] - d3pi3.comp(0)[i] - self.d3pi4.comp(0)[i];
            d * d
        });
        let parts: [&[T]; 3] = [d3pi2.comp(0), d3pi3.comp(0), self.d3pi4.comp(0)];
        let den = parts
            .iter()
            .map(|c| {
                reduce::sum_indexed(len, |i| {
                    let v = c[i];
                    v * v
                })
            })
            .fold(self.source_scale_sq, |a, b| a.max(b));
        Ok(if den == T::zero() {
            num.sqrt()
        } else {
            (num / den).sqrt()
        })
    }

    /// Persist all five scalars under `dir` with their standard names.
    pub fn persist(&self, dir: &std::path::Path) -> Result<()> {
        for (name, snap) in [
            ("pi", &self.pi),
            ("pi1", &self.pi1),
            ("pi2", &self.pi2),
            ("pi3", &self.pi3),
            ("d3pi4", &self.d3pi4),
        ] {
            let field = SpaceTimeField::single(FieldKind::Scalar, snap.clone())?;
            crate::io::persist_field_named(&field, &dir.join(name), Some(&[name]))?;
        }
        Ok(())
    }
}

/// Slice averages of Lemma-4.3 type: P3 averages out x3 over a symmetric
/// interval, Ph averages over a square in x_h, P_hr over a horizontal disc.
#[derive(Debug, Clone)]
pub struct SliceProjections<T> {
    /// P3 f as an (n x n) lattice over (x1, x2), x1 fastest.
    pub p3: Vec<T>,
    /// Ph f over x3.
    pub ph: Vec<T>,
    /// P_{h,r} f over x3.
    pub phr: Vec<T>,
}

/// Compute the three projections of a scalar snapshot about `center` with
/// half-width / radius `scale`.
pub fn slice_projections<T: Scalar>(
    f: &Snapshot<T>,
    center: [T; 3],
    scale: T,
) -> Result<SliceProjections<T>> {
    if f.n_comps() != 1 {
        return Err(Error::Incompatible("slice projections need a scalar".into()));
    }
    let grid = f.grid();
    let half = grid.box_length() / lit::<T>(2.0);
    if !(scale > T::zero()) || scale > half {
        return Err(Error::InvalidParam(format!(
            "projection scale must lie in (0, L/2]; got {} with L/2 = {}",
            scale, half
        )));
    }
    let n = grid.n();
    let data = f.comp(0);

    let axis_sel = |c: T| -> Vec<usize> {
        (0..n)
            .filter(|&i| grid.min_image(grid.coord(i) - c).abs() < scale)
            .collect()
    };
    let i3_sel = axis_sel(center[2]);
    let i1_sel = axis_sel(center[0]);
    let i2_sel = axis_sel(center[1]);
    if i3_sel.is_empty() || i1_sel.is_empty() || i2_sel.is_empty() {
        return Err(Error::InvalidParam(
            "projection scale selects no grid nodes".into(),
        ));
    }

    // P3: mean over selected x3 nodes, per (x1, x2).
    let mut p3 = vec![T::zero(); n * n];
    let w3 = T::one() / lit::<T>(i3_sel.len() as f64);
    for i2 in 0..n {
        for i1 in 0..n {
            let mut acc = T::zero();
            for &i3 in &i3_sel {
                acc += data[grid.index(i1, i2, i3)];
            }
            p3[i1 + n * i2] = acc * w3;
        }
    }

    // Ph: mean over the square |dx1| < s, |dx2| < s, per x3.
    let mut ph = vec![T::zero(); n];
    let wh = T::one() / lit::<T>((i1_sel.len() * i2_sel.len()) as f64);
    for i3 in 0..n {
        let mut acc = T::zero();
        for &i2 in &i2_sel {
            for &i1 in &i1_sel {
                acc += data[grid.index(i1, i2, i3)];
            }
        }
        ph[i3] = acc * wh;
    }

    // P_{h,r}: mean over the disc |x_h - c_h| < s, per x3.
    let mut disc_nodes = Vec::new();
    let s2 = scale * scale;
    for i2 in 0..n {
        for i1 in 0..n {
            let dx = grid.min_image(grid.coord(i1) - center[0]);
            let dy = grid.min_image(grid.coord(i2) - center[1]);
            if dx * dx + dy * dy < s2 {
                disc_nodes.push((i1, i2));
            }
        }
    }
    if disc_nodes.is_empty() {
        return Err(Error::InvalidParam(
            "projection disc selects no grid nodes".into(),
        ));
    }
    let mut phr = vec![T::zero(); n];
    let wd = T::one() / lit::<T>(disc_nodes.len() as f64);
    for i3 in 0..n {
        let mut acc = T::zero();
        for &(i1, i2) in &disc_nodes {
            acc += data[grid.index(i1, i2, i3)];
        }
        phr[i3] = acc * wd;
    }

    Ok(SliceProjections { p3, ph, phr })
}
