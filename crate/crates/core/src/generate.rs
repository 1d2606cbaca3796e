//! Synthetic velocity fields.
//!
//! Every family is sampled from a closed form with its known time law, so
//! the generated fields double as ground-truth oracles downstream:
//!
//! * `shear`, `taylor_green_2d`, `abc`, `axis_heat` solve the unforced
//!   momentum equation exactly (viscous decay of eigenfields);
//! * `rigid_strain` and `scaled_profile` are frozen divergence-free shapes
//!   for quadrature tests;
//! * `constant` collapses to zero under the zero-mean convention.
//!
//! All generators use the fundamental wavenumber `2 pi / L`, so on the
//! default 2*pi box they reduce to the unit-mode formulas (`sin x1` etc).

use crate::error::{Error, Result};
use crate::field::{FieldKind, Snapshot, SpaceTimeField};
use crate::grid::Grid3;
use crate::scalar::{lit, Scalar};
use crate::spectral::SpectralBox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Built-in generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Zero,
    Constant,
    Shear,
    TaylorGreen2d,
    Abc,
    AxisHeat,
    RigidStrain,
    ScaledProfile,
}

impl FromStr for GenKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "zero" => GenKind::Zero,
            "constant" => GenKind::Constant,
            "shear" => GenKind::Shear,
            "taylor_green_2d" => GenKind::TaylorGreen2d,
            "abc" => GenKind::Abc,
            "axis_heat" => GenKind::AxisHeat,
            "rigid_strain" => GenKind::RigidStrain,
            "scaled_profile" => GenKind::ScaledProfile,
            other => {
                return Err(Error::InvalidParam(format!(
                    "unknown generator kind '{other}'"
                )))
            }
        })
    }
}

impl GenKind {
    pub fn name(&self) -> &'static str {
        match self {
            GenKind::Zero => "zero",
            GenKind::Constant => "constant",
            GenKind::Shear => "shear",
            GenKind::TaylorGreen2d => "taylor_green_2d",
            GenKind::Abc => "abc",
            GenKind::AxisHeat => "axis_heat",
            GenKind::RigidStrain => "rigid_strain",
            GenKind::ScaledProfile => "scaled_profile",
        }
    }
}

/// Solver and generator parameters. Viscosity is 1 in the nondimensional
/// momentum equation; it is kept explicit for oracle comparisons.
#[derive(Debug, Clone, Copy)]
pub struct FlowParams<T> {
    pub viscosity: T,
    pub end_time: T,
    pub dt: T,
    pub dealias: bool,
    pub amplitude: T,
    /// Keep every k-th integrator step in the output field.
    pub save_every: usize,
}

impl<T: Scalar> FlowParams<T> {
    pub fn new(viscosity: T, end_time: T, dt: T, amplitude: T) -> Result<Self> {
        let p = Self {
            viscosity,
            end_time,
            dt,
            dealias: true,
            amplitude,
            save_every: 1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParam("dt must be positive".into()));
        }
        if !(self.end_time >= self.dt) {
            return Err(Error::InvalidParam("end_time must be at least dt".into()));
        }
        if !(self.viscosity > T::zero()) {
            return Err(Error::InvalidParam("viscosity must be positive".into()));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidParam("amplitude must be finite".into()));
        }
        if self.save_every == 0 {
            return Err(Error::InvalidParam("save_every must be positive".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        let steps = (self.end_time / self.dt).to_f64().unwrap();
        steps.round().max(1.0) as usize
    }
}

fn sample_times<T: Scalar>(params: &FlowParams<T>) -> Vec<T> {
    (0..=params.n_steps())
        .map(|j| lit::<T>(j as f64) * params.dt)
        .collect()
}

/// C-infinity radial transition: 1 below `a`, 0 above `b`.
pub(crate) fn smooth_step_down<T: Scalar>(s: T, a: T, b: T) -> T {
    if s <= a {
        T::one()
    } else if s >= b {
        T::zero()
    } else {
        let t = (s - a) / (b - a);
        // sigma(1-t) / (sigma(1-t) + sigma(t)) with sigma(x) = exp(-1/x)
        let e1 = (-(T::one() / (T::one() - t))).exp();
        let e0 = (-(T::one() / t)).exp();
        e1 / (e1 + e0)
    }
}

fn sample_velocity<T: Scalar>(
    grid: Grid3<T>,
    times: &[T],
    f: impl Fn([T; 3], T) -> [T; 3] + Sync,
) -> Vec<Snapshot<T>> {
    times
        .iter()
        .map(|&t| {
            let mut comps = vec![vec![T::zero(); grid.len()]; 3];
            for idx in 0..grid.len() {
                let v = f(grid.node(idx), t);
                comps[0][idx] = v[0];
                comps[1][idx] = v[1];
                comps[2][idx] = v[2];
            }
            Snapshot::new(grid, t, comps).expect("component shape is fixed")
        })
        .collect()
}

/// Generate a velocity field of the requested family.
pub fn generate_field<T: Scalar>(
    kind: GenKind,
    params: &FlowParams<T>,
    grid: Grid3<T>,
) -> Result<SpaceTimeField<T>> {
    params.validate()?;
    let amp = params.amplitude;
    let nu = params.viscosity;
    let k0 = (T::PI() + T::PI()) / grid.box_length();
    let times = sample_times(params);
    let center = {
        let half = grid.box_length() / lit::<T>(2.0);
        [half, half, half]
    };

    let mut snapshots = match kind {
        GenKind::Zero => sample_velocity(grid, &times, |_, _| [T::zero(); 3]),
        GenKind::Constant => sample_velocity(grid, &times, |_, _| [amp, T::zero(), T::zero()]),
        GenKind::Shear => sample_velocity(grid, &times, |x, t| {
            let decay = (-nu * k0 * k0 * t).exp();
            [amp * decay * (k0 * x[1]).sin(), T::zero(), T::zero()]
        }),
        GenKind::TaylorGreen2d => sample_velocity(grid, &times, |x, t| {
            let decay = (-(nu + nu) * k0 * k0 * t).exp();
            let (s1, c1) = (k0 * x[0]).sin_cos();
            let (s2, c2) = (k0 * x[1]).sin_cos();
            [amp * decay * s1 * c2, -amp * decay * c1 * s2, T::zero()]
        }),
        GenKind::Abc => sample_velocity(grid, &times, |x, t| {
            let decay = (-nu * k0 * k0 * t).exp();
            let (s1, c1) = (k0 * x[0]).sin_cos();
            let (s2, c2) = (k0 * x[1]).sin_cos();
            let (s3, c3) = (k0 * x[2]).sin_cos();
            [
                amp * decay * (s3 + c2),
                amp * decay * (s1 + c3),
                amp * decay * (s2 + c1),
            ]
        }),
        GenKind::AxisHeat => sample_velocity(grid, &times, |x, t| {
            let decay = (-(nu + nu) * k0 * k0 * t).exp();
            [
                T::zero(),
                T::zero(),
                amp * decay * (k0 * x[0]).sin() * (k0 * x[1]).sin(),
            ]
        }),
        GenKind::RigidStrain => {
            // Rotation (x2, -x1, 0) about the box center under a radial
            // window: plateau out to 0.4 L keeps |grad u|^2 = 2 on B_{0.4L}.
            let l = grid.box_length();
            let a = lit::<T>(0.4) * l;
            let b = lit::<T>(0.46) * l;
            sample_velocity(grid, &times, |x, _| {
                let y = [
                    grid.min_image(x[0] - center[0]),
                    grid.min_image(x[1] - center[1]),
                    grid.min_image(x[2] - center[2]),
                ];
                let s = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
                let w = smooth_step_down(s, a, b);
                [amp * w * y[1], -amp * w * y[0], T::zero()]
            })
        }
        GenKind::ScaledProfile => {
            // Curl of a Gaussian stream function: a compact planar vortex.
            let l = grid.box_length();
            let sigma = l / lit::<T>(14.0);
            sample_velocity(grid, &times, |x, _| {
                let y = [
                    grid.min_image(x[0] - center[0]),
                    grid.min_image(x[1] - center[1]),
                    grid.min_image(x[2] - center[2]),
                ];
                let s2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
                let psi = amp * (-(s2 / (sigma * sigma + sigma * sigma))).exp();
                // u = (d2 psi, -d1 psi, 0)
                [-y[1] / (sigma * sigma) * psi, y[0] / (sigma * sigma) * psi, T::zero()]
            })
        }
    };

    // Windowed families are divergence-free analytically but not exactly
    // after sampling; one projection pins them to the snapshot tolerance.
    if matches!(kind, GenKind::RigidStrain | GenKind::ScaledProfile) {
        let sb = SpectralBox::new(grid);
        for s in &mut snapshots {
            let t = s.time();
            *s = sb.leray_project(s)?;
            s.set_time(t);
        }
    }
    for s in &mut snapshots {
        s.remove_means();
    }
    SpaceTimeField::new(FieldKind::Velocity, snapshots)
}

/// Deterministic band-limited random divergence-free velocity, frozen in
/// time across the sample times of `params`.
pub fn random_divergence_free<T: Scalar>(
    grid: Grid3<T>,
    params: &FlowParams<T>,
    seed: u64,
    max_mode: i64,
) -> Result<SpaceTimeField<T>> {
    params.validate()?;
    if max_mode < 1 {
        return Err(Error::InvalidParam("max_mode must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comps: Vec<Vec<T>> = Vec::with_capacity(3);
    for _ in 0..3 {
        let c: Vec<T> = (0..grid.len())
            .map(|_| lit::<T>(rng.gen::<f64>() * 2.0 - 1.0))
            .collect();
        comps.push(c);
    }
    let sb = SpectralBox::new(grid);
    let raw = Snapshot::new(grid, T::zero(), comps)?;
    let smooth = sb.band_limit(&raw, max_mode);
    let mut snap = sb.leray_project(&smooth)?;
    snap.remove_means();
    let peak = snap.max_abs();
    if peak > T::zero() {
        snap.scale_values(params.amplitude / peak);
    }
    let times = sample_times(params);
    let snapshots = times
        .iter()
        .map(|&t| {
            let mut s = snap.clone();
            s.set_time(t);
            s
        })
        .collect();
    SpaceTimeField::new(FieldKind::Velocity, snapshots)
}

/// Closed-form pressure for the families that solve the momentum equation
/// exactly; `None` when no analytic pressure is singled out.
pub fn analytic_pressure<T: Scalar>(
    kind: GenKind,
    params: &FlowParams<T>,
    grid: Grid3<T>,
) -> Option<SpaceTimeField<T>> {
    params.validate().ok()?;
    let amp = params.amplitude;
    let nu = params.viscosity;
    let k0 = (T::PI() + T::PI()) / grid.box_length();
    let times = sample_times(params);
    let quarter = lit::<T>(0.25);
    let sample = |f: &dyn Fn([T; 3], T) -> T| -> Vec<Snapshot<T>> {
        times
            .iter()
            .map(|&t| {
                let mut c = vec![T::zero(); grid.len()];
                for idx in 0..grid.len() {
                    c[idx] = f(grid.node(idx), t);
                }
                let mut s = Snapshot::new(grid, t, vec![c]).expect("scalar shape");
                s.remove_means();
                s
            })
            .collect()
    };
    let snapshots = match kind {
        GenKind::Zero | GenKind::Constant | GenKind::Shear | GenKind::AxisHeat => {
            sample(&|_, _| T::zero())
        }
        GenKind::TaylorGreen2d => sample(&|x, t| {
            let decay = (-lit::<T>(4.0) * nu * k0 * k0 * t).exp();
            amp * amp * quarter * decay * ((k0 * (x[0] + x[0])).cos() + (k0 * (x[1] + x[1])).cos())
        }),
        GenKind::Abc => sample(&|x, t| {
            let decay = (-nu * k0 * k0 * t).exp();
            let (s1, c1) = (k0 * x[0]).sin_cos();
            let (s2, c2) = (k0 * x[1]).sin_cos();
            let (s3, c3) = (k0 * x[2]).sin_cos();
            let u = [
                amp * decay * (s3 + c2),
                amp * decay * (s1 + c3),
                amp * decay * (s2 + c1),
            ];
            -(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) / lit::<T>(2.0)
        }),
        _ => return None,
    };
    SpaceTimeField::new(FieldKind::Pressure, snapshots).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> FlowParams<f64> {
        FlowParams::new(1.0, 0.02, 0.01, 1.0).unwrap()
    }

    #[test]
    fn unknown_kind_is_an_error() {
        assert!("vortex_sheet".parse::<GenKind>().is_err());
        assert_eq!("abc".parse::<GenKind>().unwrap(), GenKind::Abc);
    }

    #[test]
    fn non_finite_amplitude_rejected() {
        assert!(FlowParams::new(1.0, 0.1, 0.01, f64::NAN).is_err());
        assert!(FlowParams::new(1.0, 0.1, 0.01, f64::INFINITY).is_err());
    }

    #[test]
    fn constant_collapses_to_zero_mean() {
        let grid = Grid3::two_pi(16).unwrap();
        let f = generate_field(GenKind::Constant, &params(), grid).unwrap();
        assert!(f.max_abs() < 1e-14);
    }

    #[test]
    fn taylor_green_is_divergence_free_and_matches_formula() {
        let grid = Grid3::two_pi(32).unwrap();
        let f = generate_field(GenKind::TaylorGreen2d, &params(), grid).unwrap();
        let s = f.snapshot(0);
        for idx in [0usize, 5, 700, 4097] {
            let [x, y, _] = grid.node(idx);
            assert!((s.comp(0)[idx] - x.sin() * y.cos()).abs() < 1e-14);
            assert!((s.comp(1)[idx] + x.cos() * y.sin()).abs() < 1e-14);
            assert_eq!(s.comp(2)[idx], 0.0);
        }
        let sb = SpectralBox::new(grid);
        let div = sb.max_divergence(s).unwrap();
        assert!(div <= 1e-12 * s.max_abs() / grid.spacing());
    }

    #[test]
    fn axis_heat_has_exact_zero_horizontal_parts() {
        let grid = Grid3::two_pi(16).unwrap();
        let f = generate_field(GenKind::AxisHeat, &params(), grid).unwrap();
        let s = f.snapshot(0);
        assert!(s.comp(0).iter().all(|&v| v == 0.0));
        assert!(s.comp(1).iter().all(|&v| v == 0.0));
        for idx in [3usize, 900, 2048] {
            let [x, y, _] = grid.node(idx);
            assert!((s.comp(2)[idx] - x.sin() * y.sin()).abs() < 1e-14);
        }
        // u3 independent of x3: d3 u3 = 0.
        let sb = SpectralBox::new(grid);
        let d3 = sb
            .differential_op(s, crate::spectral::DiffOp::D3)
            .unwrap();
        assert!(d3.max_abs() < 1e-12);
    }

    #[test]
    fn windowed_families_are_projected_divergence_free() {
        let grid = Grid3::two_pi(32).unwrap();
        let sb = SpectralBox::new(grid);
        for kind in [GenKind::RigidStrain, GenKind::ScaledProfile] {
            let f = generate_field(kind, &params(), grid).unwrap();
            let s = f.snapshot(0);
            assert!(sb.max_divergence(s).unwrap() <= s.div_free_bound());
            for i in 0..3 {
                assert!(s.component_mean(i).abs() < 1e-12 * s.max_abs().max(1e-30));
            }
        }
    }

    #[test]
    fn random_field_is_deterministic_and_divergence_free() {
        let grid = Grid3::two_pi(32).unwrap();
        let a = random_divergence_free(grid, &params(), 7, 5).unwrap();
        let b = random_divergence_free(grid, &params(), 7, 5).unwrap();
        assert_eq!(a.snapshot(0).comp(0), b.snapshot(0).comp(0));
        let sb = SpectralBox::new(grid);
        let s = a.snapshot(0);
        assert!(sb.max_divergence(s).unwrap() <= s.div_free_bound());
        assert!((s.max_abs() - 1.0).abs() < 1e-12);
    }
}
