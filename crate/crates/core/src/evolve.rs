//! Pseudo-spectral time integration of the incompressible momentum system.
//!
//! The viscous term is handled exactly with an integrating factor, the
//! projected divergence-form nonlinearity with classical RK4, and the
//! quadratic products with the 2/3 rule when dealiasing is enabled. For
//! eigenfields whose projected nonlinearity vanishes (Taylor-Green, the
//! axis family, Beltrami flows) the scheme reproduces the exact viscous
//! decay to rounding.

use crate::error::{Error, Result};
use crate::field::{FieldKind, Snapshot, SpaceTimeField};
use crate::generate::FlowParams;
use crate::pressure::solve_pressure_from_specs;
use crate::scalar::{lit, tolerance, Scalar};
use crate::spectral::SpectralBox;
use rayon::prelude::*;
use rustfft::num_complex::Complex;

type Spec<T> = Vec<Complex<T>>;

struct Workspace<'a, T: Scalar> {
    sb: &'a SpectralBox<T>,
    dealias_mode: Option<i64>,
}

impl<'a, T: Scalar> Workspace<'a, T> {
    /// Projected divergence-form nonlinear term -P[d_j (u_i u_j)] in
    /// spectral space, plus the quadratic product spectra for the
    /// instantaneous pressure solve.
    fn nonlinear(&self, u_spec: &[Spec<T>]) -> (Vec<Spec<T>>, [Spec<T>; 6]) {
        let sb = self.sb;
        let u: Vec<Vec<T>> = u_spec.iter().map(|s| sb.inverse(s.clone())).collect();
        let len = u[0].len();
        // Products for (i,j) in upper-triangular order 11,22,33,12,13,23.
        let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
        let mut prods: Vec<Spec<T>> = pairs
            .iter()
            .map(|&(i, j)| {
                let mut p = vec![T::zero(); len];
                for idx in 0..len {
                    p[idx] = u[i][idx] * u[j][idx];
                }
                let mut spec = sb.forward(&p);
                if let Some(m) = self.dealias_mode {
                    sb.truncate_spec(&mut spec, m);
                }
                spec
            })
            .collect();

        let pick = |i: usize, j: usize| -> usize {
            match (i.min(j), i.max(j)) {
                (0, 0) => 0,
                (1, 1) => 1,
                (2, 2) => 2,
                (0, 1) => 3,
                (0, 2) => 4,
                (1, 2) => 5,
                _ => unreachable!(),
            }
        };

        let mut rhs: Vec<Spec<T>> = Vec::with_capacity(3);
        for i in 0..3 {
            let mut acc = vec![Complex::new(T::zero(), T::zero()); len];
            for j in 0..3 {
                let mut d = prods[pick(i, j)].clone();
                sb.derivative_spec(&mut d, j);
                for (a, b) in acc.iter_mut().zip(d) {
                    *a -= b;
                }
            }
            rhs.push(acc);
        }
        sb.leray_project_spec(&mut rhs);
        let [p11, p22, p33, p12, p13, p23]: [Spec<T>; 6] =
            std::mem::take(&mut prods).try_into().ok().unwrap();
        (rhs, [p11, p22, p33, p12, p13, p23])
    }
}

fn viscous_factor<T: Scalar>(sb: &SpectralBox<T>, nu: T, dt: T) -> Vec<T> {
    let grid = sb.grid();
    let n = grid.n();
    let mut f = vec![T::zero(); grid.len()];
    f.par_chunks_mut(n * n).enumerate().for_each(|(i3, plane)| {
        let k3 = grid.wavenumber(i3);
        for i2 in 0..n {
            let k2 = grid.wavenumber(i2);
            for i1 in 0..n {
                let k1 = grid.wavenumber(i1);
                let kk = k1 * k1 + k2 * k2 + k3 * k3;
                plane[i1 + n * i2] = (-nu * kk * dt).exp();
            }
        }
    });
    f
}

fn axpy<T: Scalar>(out: &mut [Spec<T>], scale: T, x: &[Spec<T>]) {
    for (o, xs) in out.iter_mut().zip(x) {
        for (a, b) in o.iter_mut().zip(xs) {
            *a += *b * scale;
        }
    }
}

fn mul_factor<T: Scalar>(v: &mut [Spec<T>], f: &[T]) {
    for comp in v.iter_mut() {
        comp.par_iter_mut().enumerate().for_each(|(i, c)| {
            *c = *c * f[i];
        });
    }
}

fn spectral_energy<T: Scalar>(u: &[Spec<T>]) -> T {
    // Parseval up to a fixed constant; only ratios between steps matter.
    let mut e = T::zero();
    for comp in u {
        for c in comp {
            e += c.norm_sqr();
        }
    }
    e
}

/// Integrate the momentum system from `u0`. Returns the sampled velocity
/// and the matching instantaneous pressure field (zero-mean Poisson solve
/// of the quadratic source at every saved step).
pub fn ns_evolve<T: Scalar>(
    u0: &Snapshot<T>,
    params: &FlowParams<T>,
) -> Result<(SpaceTimeField<T>, SpaceTimeField<T>)> {
    params.validate()?;
    if u0.n_comps() != 3 {
        return Err(Error::Incompatible("initial state must be a velocity".into()));
    }
    let grid = u0.grid();
    let sb = SpectralBox::new(grid);

    // Advective stability bound dt <= 0.5 spacing / max|u0|.
    let peak = u0.max_abs();
    if peak > T::zero() {
        let bound = lit::<T>(0.5) * grid.spacing() / peak;
        if params.dt > bound {
            return Err(Error::StabilityBound {
                dt: params.dt.to_f64().unwrap_or(f64::NAN),
                bound: bound.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    let div = sb.max_divergence(u0)?;
    let mut start = u0.clone();
    if div > u0.div_free_bound() {
        // Warn-and-project contract shared with the pressure solver.
        start = sb.leray_project(&start)?;
    }
    start.remove_means();

    let dealias_mode = params.dealias.then(|| sb.dealias_mode());
    let ws = Workspace {
        sb: &sb,
        dealias_mode,
    };

    let mut u_spec = sb.to_spec_vec(&start);
    if let Some(m) = dealias_mode {
        for s in u_spec.iter_mut() {
            sb.truncate_spec(s, m);
        }
    }

    let e_half = viscous_factor(&sb, params.viscosity, params.dt / lit::<T>(2.0));
    let e_full = viscous_factor(&sb, params.viscosity, params.dt);

    let n_steps = params.n_steps();
    let t0 = u0.time();
    let mut vel_snaps: Vec<Snapshot<T>> = Vec::new();
    let mut prs_snaps: Vec<Snapshot<T>> = Vec::new();

    let save = |u_spec: &[Spec<T>],
                t: T,
                ws: &Workspace<T>,
                vel: &mut Vec<Snapshot<T>>,
                prs: &mut Vec<Snapshot<T>>|
     -> Result<()> {
        let comps: Vec<Vec<T>> = u_spec.iter().map(|s| sb.inverse(s.clone())).collect();
        let snap = Snapshot::new(grid, t, comps)?;
        if !snap.is_finite() {
            return Err(Error::Numerical {
                step: vel.len(),
                context: "non-finite velocity at save point".into(),
            });
        }
        let (_, prods) = ws.nonlinear(u_spec);
        let pi = solve_pressure_from_specs(&sb, &prods, t);
        vel.push(snap);
        prs.push(pi);
        Ok(())
    };

    save(&u_spec, t0, &ws, &mut vel_snaps, &mut prs_snaps)?;
    let mut energy = spectral_energy(&u_spec);
    let energy_tol = tolerance::<T>(1e-8);

    for step in 1..=n_steps {
        // Integrating-factor RK4 on the transformed variable.
        let (a, _) = ws.nonlinear(&u_spec);

        let mut ua = u_spec.clone();
        axpy(&mut ua, params.dt / lit::<T>(2.0), &a);
        mul_factor(&mut ua, &e_half);
        let (b, _) = ws.nonlinear(&ua);

        let mut ub = u_spec.clone();
        mul_factor(&mut ub, &e_half);
        axpy(&mut ub, params.dt / lit::<T>(2.0), &b);
        let (c, _) = ws.nonlinear(&ub);

        let mut uc = u_spec.clone();
        mul_factor(&mut uc, &e_full);
        let mut ec = c.clone();
        mul_factor(&mut ec, &e_half);
        axpy(&mut uc, params.dt, &ec);
        let (d, _) = ws.nonlinear(&uc);

        let sixth = params.dt / lit::<T>(6.0);
        let third = params.dt / lit::<T>(3.0);
        let mut next = u_spec;
        mul_factor(&mut next, &e_full);
        let mut ka = a;
        mul_factor(&mut ka, &e_full);
        axpy(&mut next, sixth, &ka);
        let mut kb = b;
        mul_factor(&mut kb, &e_half);
        axpy(&mut next, third, &kb);
        axpy(&mut next, third, &ec);
        axpy(&mut next, sixth, &d);
        u_spec = next;

        let finite = u_spec
            .iter()
            .all(|s| s.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        if !finite {
            return Err(Error::Numerical {
                step,
                context: "non-finite spectral state".into(),
            });
        }
        let e_next = spectral_energy(&u_spec);
        if e_next > energy * (T::one() + energy_tol) {
            return Err(Error::Numerical {
                step,
                context: format!(
                    "kinetic energy increased: {} -> {}",
                    energy.to_f64().unwrap_or(f64::NAN),
                    e_next.to_f64().unwrap_or(f64::NAN)
                ),
            });
        }
        energy = e_next;

        if step % params.save_every == 0 || step == n_steps {
            let t = t0 + lit::<T>(step as f64) * params.dt;
            save(&u_spec, t, &ws, &mut vel_snaps, &mut prs_snaps)?;
        }
    }

    let vel = SpaceTimeField::new(FieldKind::Velocity, vel_snaps)?;
    let prs = SpaceTimeField::new(FieldKind::Pressure, prs_snaps)?;
    Ok((vel, prs))
}
