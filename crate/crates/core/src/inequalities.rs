//! Numerical verification of the lemma-level inequalities.
//!
//! The unnamed constants C of the lemmas are treated as measured outputs:
//! each check assembles its display's left side and named right-hand
//! terms, and reports the implied constant lhs / sum(rhs). Verification
//! downstream means: finite, stable under grid refinement, invariant
//! under the critical rescaling. Checks stream over snapshots, computing
//! pressure decompositions per time sample and discarding them, so memory
//! stays at a few lattices regardless of the window length.

use crate::cutoff::TestFunction;
use crate::cylinder::{CylinderSpec, Geometry};
use crate::error::{Error, Result};
use crate::exponents::{Exp, ExponentPair};
use crate::field::{FieldKind, Snapshot, SpaceTimeField};
use crate::grid::Grid3;
use crate::harmonic::HarmonicSample;
use crate::pressure::{decompose_cutoff, decompose_sec3, CutoffMode, CutoffSource};
use crate::quantities::{integrate_window, node_values, spatial_lp, window_max, MeanMode, Region};
use crate::reduce;
use crate::scalar::{lit, Scalar};
use crate::spectral::{DiffOp, SpectralBox};
use serde::Serialize;

/// One measured inequality: lhs <= C * sum(rhs terms).
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck<T> {
    pub name: String,
    pub lhs: T,
    pub rhs_terms: Vec<(String, T)>,
    /// lhs / sum(rhs); `None` when the check is degenerate (0 on 0).
    pub implied_constant: Option<T>,
    pub degenerate: bool,
    pub meta: String,
}

impl<T: Scalar> InequalityCheck<T> {
    pub fn new(name: &str, lhs: T, rhs_terms: Vec<(String, T)>, meta: String) -> Self {
        let rhs: T = rhs_terms.iter().map(|t| t.1).fold(T::zero(), |a, b| a + b);
        let degenerate = lhs == T::zero() && rhs == T::zero();
        let implied_constant = if degenerate { None } else { Some(lhs / rhs) };
        Self {
            name: name.into(),
            lhs,
            rhs_terms,
            implied_constant,
            degenerate,
            meta,
        }
    }

    pub fn rhs_total(&self) -> T {
        self.rhs_terms.iter().map(|t| t.1).fold(T::zero(), |a, b| a + b)
    }

    /// CSV row: name, lhs, rhs terms (name=value;...), constant, degenerate.
    pub fn csv_row(&self) -> String {
        let terms = self
            .rhs_terms
            .iter()
            .map(|(n, v)| format!("{n}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        let c = match self.implied_constant {
            Some(c) => format!("{c}"),
            None => String::new(),
        };
        format!(
            "{},{},{},{},{}",
            self.name, self.lhs, terms, c, self.degenerate
        )
    }
}

pub fn checks_to_csv<T: Scalar>(checks: &[InequalityCheck<T>]) -> String {
    let mut out = String::from("name,lhs,rhs_terms,implied_constant,degenerate\n");
    for c in checks {
        out.push_str(&c.csv_row());
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------
// Streaming quantity evaluation shared by the checks.
// ---------------------------------------------------------------------

/// Per-term sample accumulator: (time, spatial reduction).
struct Acc<T> {
    samples: Vec<(T, T)>,
}

impl<T: Scalar> Acc<T> {
    fn new() -> Self {
        Self {
            samples: Vec::new(),
        }
    }

    fn push(&mut self, t: T, v: T) {
        self.samples.push((t, v));
    }

    /// L^q time norm over the window (trapezoid + endpoint interpolation).
    fn lq(&self, window: (T, T), q: T) -> T {
        if q.is_infinite() {
            window_max(&self.samples, window.0, window.1)
        } else {
            integrate_window(&self.samples, window.0, window.1, |s| s.powf(q))
                .powf(T::one() / q)
        }
    }

    /// Plain time integral over the window.
    fn integral(&self, window: (T, T)) -> T {
        integrate_window(&self.samples, window.0, window.1, |s| s)
    }

    fn max(&self, window: (T, T)) -> T {
        window_max(&self.samples, window.0, window.1)
    }
}

/// L^p over region nodes of a nonnegative-valued lattice accessor.
fn lp_nodes<T: Scalar>(lat: &[T], nodes: &[usize], p: T, vol: T) -> T {
    if p.is_infinite() {
        return reduce::max_indexed(nodes.len(), |i| lat[nodes[i]].abs());
    }
    let one = T::one();
    let two = lit::<T>(2.0);
    let sum = if p == one {
        reduce::sum_indexed(nodes.len(), |i| lat[nodes[i]].abs())
    } else if p == two {
        reduce::sum_indexed(nodes.len(), |i| {
            let v = lat[nodes[i]];
            v * v
        })
    } else {
        reduce::sum_indexed(nodes.len(), |i| lat[nodes[i]].abs().powf(p))
    };
    (sum * vol).powf(one / p)
}

/// L^p of a snapshot's componentwise magnitude after mean handling.
fn lp_snapshot<T: Scalar>(
    snap: &Snapshot<T>,
    grid: &Grid3<T>,
    cyl: &CylinderSpec<T>,
    region: &Region,
    mean: MeanMode,
    p: T,
) -> T {
    let vals = node_values(snap, grid, cyl, region, mean);
    spatial_lp(&vals, p, grid.cell_volume())
}

/// Full gradient magnitude of the horizontal components:
/// sqrt(sum_{a in {1,2,3}, b in {1,2}} (d_a u_b)^2).
fn grad_uh_magnitude<T: Scalar>(sb: &SpectralBox<T>, u: &Snapshot<T>) -> Vec<T> {
    let mut acc = vec![T::zero(); u.comp(0).len()];
    for b in 0..2 {
        for a in 0..3 {
            let d = sb.derivative_real(u.comp(b), a);
            for (o, v) in acc.iter_mut().zip(d) {
                *o += v * v;
            }
        }
    }
    acc.into_iter().map(|v| v.sqrt()).collect()
}

/// |grad_h pi| lattice.
fn gradh_pi_magnitude<T: Scalar>(sb: &SpectralBox<T>, pi: &Snapshot<T>) -> Vec<T> {
    let d1 = sb.derivative_real(pi.comp(0), 0);
    let d2 = sb.derivative_real(pi.comp(0), 1);
    d1.into_iter()
        .zip(d2)
        .map(|(a, b)| (a * a + b * b).sqrt())
        .collect()
}

/// |u_h| lattice.
fn uh_magnitude<T: Scalar>(u: &Snapshot<T>) -> Vec<T> {
    let mut out = vec![T::zero(); u.comp(0).len()];
    for idx in 0..out.len() {
        let a = u.comp(0)[idx];
        let b = u.comp(1)[idx];
        out[idx] = (a * a + b * b).sqrt();
    }
    out
}

fn validate_pair<T: Scalar>(u: &SpaceTimeField<T>, pi: &SpaceTimeField<T>) -> Result<()> {
    if u.kind() != FieldKind::Velocity || pi.kind() != FieldKind::Pressure {
        return Err(Error::Incompatible(
            "expected a velocity field with its pressure".into(),
        ));
    }
    if u.grid() != pi.grid() || u.len() != pi.len() {
        return Err(Error::Incompatible(
            "velocity and pressure fields must share grid and sampling".into(),
        ));
    }
    Ok(())
}

fn prefactor<T: Scalar>(kind_power: i32, pq_kappa: T, radius: T) -> T {
    radius.powf(lit::<T>(kind_power as f64) - pq_kappa)
}

// ---------------------------------------------------------------------
// Sobolev interpolation checks.
// ---------------------------------------------------------------------

/// Spatial region of the snapshot-level interpolation check.
#[derive(Debug, Clone, Copy)]
pub enum InterpGeometry<T> {
    WholeBox,
    Ball { r: T, center: [T; 3] },
    Cylinder { r: T, center: [T; 3] },
}

/// The Sobolev interpolation: int |f|^ell <= C (int |grad f|^2)^a
/// (int |f|^2)^{ell/2 - a}, a = 3(ell - 2)/4, 2 <= ell <= 6.
pub fn check_interpolation<T: Scalar>(
    f: &Snapshot<T>,
    ell: T,
    geometry: InterpGeometry<T>,
) -> Result<InequalityCheck<T>> {
    let two = lit::<T>(2.0);
    let six = lit::<T>(6.0);
    if ell < two || ell > six {
        return Err(Error::InvalidParam(format!(
            "interpolation exponent ell must lie in [2, 6], got {ell}"
        )));
    }
    let grid = f.grid();
    let sb = SpectralBox::new(grid);
    let nodes: Vec<usize> = match geometry {
        InterpGeometry::WholeBox => (0..grid.len()).collect(),
        InterpGeometry::Ball { r, center } => {
            CylinderSpec::new(center, T::zero(), r, Geometry::Ball)?.nodes(&grid)
        }
        InterpGeometry::Cylinder { r, center } => {
            CylinderSpec::new(center, T::zero(), r, Geometry::Vertical)?.nodes(&grid)
        }
    };
    let vol = grid.cell_volume();
    let a = lit::<T>(0.75) * (ell - two);
    let gs = sb.grad_sq(f);

    let f_ell = reduce::sum_over_nodes(&nodes, |i| f.magnitude_at(i).powf(ell)) * vol;
    let f_2 = reduce::sum_over_nodes(&nodes, |i| {
        let m = f.magnitude_at(i);
        m * m
    }) * vol;
    let g_2 = reduce::sum_over_nodes(&nodes, |i| gs[i]) * vol;
    let rhs = g_2.powf(a) * f_2.powf(ell / two - a);

    Ok(InequalityCheck::new(
        "sobolev_interpolation",
        f_ell,
        vec![(format!("(grad^2)^a*(f^2)^(l/2-a), a={a}"), rhs)],
        format!("ell={ell}, geometry={geometry:?}"),
    ))
}

/// Lemma-3.1-type embedding: ||u||_{L^s L^l (Q_r)} <= C (||u||_{Loo L2} +
/// ||grad u||_{L2 L2}), 3/l + 2/s = 3/2, 2 <= l <= 6.
pub fn check_embedding<T: Scalar>(
    u: &SpaceTimeField<T>,
    ls: &ExponentPair,
    cyl: &CylinderSpec<T>,
) -> Result<InequalityCheck<T>> {
    if !ls.kappa_is(3, 2) {
        return Err(Error::InvalidParam(format!(
            "embedding needs 3/l + 2/s = 3/2, got {}",
            ls.kappa()
        )));
    }
    if let Some(l) = ls.p.rat() {
        if l < num_rational::Ratio::from_integer(2) || l > num_rational::Ratio::from_integer(6) {
            return Err(Error::InvalidParam("embedding needs 2 <= l <= 6".into()));
        }
    }
    cyl.validate(u, false)?;
    let grid = u.grid();
    let sb = SpectralBox::new(grid);
    let region = Region::build(&grid, cyl);
    let (l, s) = ls.floats::<T>();
    let two = lit::<T>(2.0);
    let vol = grid.cell_volume();

    let mut lhs_acc = Acc::new();
    let mut sup_acc = Acc::new();
    let mut grad_acc = Acc::new();
    for snap in u.snapshots() {
        let t = snap.time();
        lhs_acc.push(t, lp_snapshot(snap, &grid, cyl, &region, MeanMode::None, l));
        sup_acc.push(t, lp_snapshot(snap, &grid, cyl, &region, MeanMode::None, two));
        let gs = sb.grad_sq(snap);
        grad_acc.push(t, lp_nodes(&gs, &region.nodes, T::one(), vol));
    }
    let w = cyl.window();
    let lhs = lhs_acc.lq(w, s);
    let sup = sup_acc.max(w);
    let grad = grad_acc.integral(w).sqrt();
    Ok(InequalityCheck::new(
        "embedding_lsl",
        lhs,
        vec![
            ("||u||_LooL2".into(), sup),
            ("||grad u||_L2L2".into(), grad),
        ],
        format!("(l,s)={ls}, r={}", cyl.radius),
    ))
}

/// Lemma-4.2-type localized interpolation on vertical cylinders:
/// G(u, 2p', 2q'; r)^2 <= C (E(u, 2r) + A(u, 2r)).
pub fn check_cylinder_interpolation<T: Scalar>(
    u: &SpaceTimeField<T>,
    pq: &ExponentPair,
    r: T,
    x0: [T; 3],
    t0: T,
) -> Result<InequalityCheck<T>> {
    let conj = pq.conjugate();
    let two_pp = conj.p.doubled();
    if let Some(v) = two_pp.rat() {
        if v > num_rational::Ratio::from_integer(6) {
            return Err(Error::InvalidParam(
                "cylinder interpolation needs 2p' <= 6 (p >= 3/2)".into(),
            ));
        }
    }
    let pair2 = ExponentPair::new(two_pp, conj.q.doubled())?;
    let cyl_r = CylinderSpec::new(x0, t0, r, Geometry::Vertical)?;
    let cyl_2r = CylinderSpec::new(x0, t0, r + r, Geometry::Vertical)?;
    cyl_r.validate(u, false)?;
    cyl_2r.validate(u, false)?;
    let g = crate::quantities::quantity(
        crate::quantities::QuantityKind::G,
        u,
        &pair2,
        &cyl_r,
        MeanMode::None,
    )?;
    let a = crate::quantities::quantity(
        crate::quantities::QuantityKind::A,
        u,
        &pair2,
        &cyl_2r,
        MeanMode::None,
    )?;
    let e = crate::quantities::quantity(
        crate::quantities::QuantityKind::E,
        u,
        &pair2,
        &cyl_2r,
        MeanMode::None,
    )?;
    Ok(InequalityCheck::new(
        "cylinder_interpolation",
        g * g,
        vec![("E(u,2r)".into(), e), ("A(u,2r)".into(), a)],
        format!("pq={pq}, r={r}"),
    ))
}

// ---------------------------------------------------------------------
// Local energy inequality residual.
// ---------------------------------------------------------------------

/// Both sides of the local energy inequality with a caloric test function.
#[derive(Debug, Clone, Serialize)]
pub struct LocalEnergyReport<T> {
    /// RHS - LHS; negative beyond tolerance flags a violation (or
    /// under-resolution) and is reported as is.
    pub residual: T,
    pub lhs_energy: T,
    pub lhs_dissipation: T,
    pub rhs_total: T,
    /// The dissipation term 2 int int |grad u|^2 phi, the reference scale.
    pub dissipation: T,
}

/// Evaluate the local energy inequality at time `t`.
pub fn local_energy_residual<T: Scalar>(
    u: &SpaceTimeField<T>,
    pi: &SpaceTimeField<T>,
    phi: &TestFunction<T>,
    t: T,
) -> Result<LocalEnergyReport<T>> {
    validate_pair(u, pi)?;
    let grid = u.grid();
    let support_start = phi.t0 - phi.rho * phi.rho;
    if support_start < u.start_time() {
        return Err(Error::TimeRange {
            start: support_start.to_f64().unwrap_or(f64::NAN),
            end: t.to_f64().unwrap_or(f64::NAN),
            field_start: u.start_time().to_f64().unwrap_or(f64::NAN),
            field_end: u.end_time().to_f64().unwrap_or(f64::NAN),
        });
    }
    if t < u.start_time() || t > u.end_time() {
        return Err(Error::InvalidParam("evaluation time outside the field".into()));
    }
    let sb = SpectralBox::new(grid);
    let vol = grid.cell_volume();

    // Nearest snapshot to the requested evaluation time.
    let k_eval = u
        .snapshots()
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = (a.1.time() - t).abs();
            let db = (b.1.time() - t).abs();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let t_eval = u.snapshot(k_eval).time();

    let mut dissipation_acc = Acc::new();
    let mut rhs_acc = Acc::new();
    let mut lhs_energy = T::zero();

    for (j, snap) in u.snapshots().iter().enumerate() {
        let ts = snap.time();
        if ts > t_eval {
            break;
        }
        let pi_snap = pi.snapshot(j);
        let gs = sb.grad_sq(snap);

        // Per-node test-function bundle and the three integrands.
        let n_nodes = grid.len();
        let chunk: Vec<(T, T)> = {
            let partials: Vec<(T, T)> = (0..n_nodes.div_ceil(8192))
                .map(|c| {
                    let lo = c * 8192;
                    let hi = (lo + 8192).min(n_nodes);
                    let mut diss = T::zero();
                    let mut rhs = T::zero();
                    for idx in lo..hi {
                        let x = grid.node(idx);
                        let e = phi.eval(grid, x, ts);
                        if e.phi == T::zero()
                            && e.dt_plus_lap == T::zero()
                            && e.grad == [T::zero(); 3]
                        {
                            continue;
                        }
                        let uu = [snap.comp(0)[idx], snap.comp(1)[idx], snap.comp(2)[idx]];
                        let u2 = uu[0] * uu[0] + uu[1] * uu[1] + uu[2] * uu[2];
                        let udotgrad =
                            uu[0] * e.grad[0] + uu[1] * e.grad[1] + uu[2] * e.grad[2];
                        let pival = pi_snap.comp(0)[idx];
                        diss += gs[idx] * e.phi;
                        rhs += u2 * e.dt_plus_lap + udotgrad * (u2 + (pival + pival));
                    }
                    (diss, rhs)
                })
                .collect();
            partials
        };
        let mut diss = T::zero();
        let mut rhs = T::zero();
        for (d, r) in chunk {
            diss += d;
            rhs += r;
        }
        dissipation_acc.push(ts, diss * vol);
        rhs_acc.push(ts, rhs * vol);

        if j == k_eval {
            let energy = reduce::sum_indexed(n_nodes, |idx| {
                let x = grid.node(idx);
                let p = phi.phi(grid, x, ts);
                if p == T::zero() {
                    T::zero()
                } else {
                    let m = snap.magnitude_at(idx);
                    m * m * p
                }
            });
            lhs_energy = energy * vol;
        }
    }

    let window = (support_start.max(u.start_time()), t_eval);
    let dissipation = lit::<T>(2.0) * dissipation_acc.integral(window);
    let rhs_total = rhs_acc.integral(window);
    let lhs = lhs_energy + dissipation;
    Ok(LocalEnergyReport {
        residual: rhs_total - lhs,
        lhs_energy,
        lhs_dissipation: dissipation,
        rhs_total,
        dissipation,
    })
}

// ---------------------------------------------------------------------
// Lemma-level energy bounds.
// ---------------------------------------------------------------------

/// Which local energy estimate to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyVariant {
    /// kappa = 1 estimate with the pi1/pi3/d3pi4 split (ball).
    Case1,
    /// kappa = 2 estimate with grad u_h and d3 pi (ball).
    Grad,
    /// Vertical-cylinder estimate with slice-mean pressure.
    Cylinder,
}

/// A(u,r) + E(u,r) against the variant's right-hand side at scale rho.
#[allow(clippy::too_many_arguments)]
pub fn check_energy_bound<T: Scalar>(
    u: &SpaceTimeField<T>,
    pi: &SpaceTimeField<T>,
    r: T,
    rho: T,
    pq: &ExponentPair,
    variant: EnergyVariant,
    x0: [T; 3],
    t0: T,
) -> Result<InequalityCheck<T>> {
    validate_pair(u, pi)?;
    crate::cutoff::check_scale_ordering(r, rho, lit::<T>(4.0))?;
    match variant {
        EnergyVariant::Case1 => {
            if !pq.kappa_is(1, 1) {
                return Err(Error::InvalidParam(format!(
                    "case1 needs 3/p + 2/q = 1, got {}",
                    pq.kappa()
                )));
            }
        }
        EnergyVariant::Grad | EnergyVariant::Cylinder => {
            if !pq.kappa_is(2, 1) {
                return Err(Error::InvalidParam(format!(
                    "this variant needs 3/p + 2/q = 2, got {}",
                    pq.kappa()
                )));
            }
        }
    }
    let geometry = if variant == EnergyVariant::Cylinder {
        Geometry::Vertical
    } else {
        Geometry::Ball
    };
    let tilde_mean = if geometry == Geometry::Vertical {
        MeanMode::DiscMean
    } else {
        MeanMode::BallMean
    };
    let grid = u.grid();
    let sb = SpectralBox::new(grid);
    let cyl_r = CylinderSpec::new(x0, t0, r, geometry)?;
    let cyl_rho = CylinderSpec::new(x0, t0, rho, geometry)?;
    cyl_r.validate(u, false)?;
    cyl_rho.validate(u, false)?;
    let reg_r = Region::build(&grid, &cyl_r);
    let reg_rho = Region::build(&grid, &cyl_rho);
    let vol = grid.cell_volume();
    let (p, q) = pq.floats::<T>();
    let conj = pq.conjugate();
    let (pp, qp) = conj.floats::<T>();
    let two = lit::<T>(2.0);
    let one = T::one();

    // Accumulators shared across variants.
    let mut a_r = Acc::new();
    let mut e_r = Acc::new();
    let mut a_rho = Acc::new();
    let mut e_rho = Acc::new();
    let mut g_uh = Acc::new(); // |u_h| at (p)
    let mut extra: Vec<Acc<T>> = (0..6).map(|_| Acc::new()).collect();

    for (j, snap) in u.snapshots().iter().enumerate() {
        let ts = snap.time();
        let pi_snap = pi.snapshot(j);
        let gs = sb.grad_sq(snap);
        let m2 = |nodes: &[usize]| -> T {
            reduce::sum_over_nodes(nodes, |i| {
                let m = snap.magnitude_at(i);
                m * m
            }) * vol
        };
        a_r.push(ts, m2(&reg_r.nodes));
        a_rho.push(ts, m2(&reg_rho.nodes));
        e_r.push(ts, lp_nodes(&gs, &reg_r.nodes, one, vol));
        e_rho.push(ts, lp_nodes(&gs, &reg_rho.nodes, one, vol));
        let uh = uh_magnitude(snap);
        g_uh.push(ts, lp_nodes(&uh, &reg_rho.nodes, p, vol));

        match variant {
            EnergyVariant::Case1 => {
                let dec = decompose_sec3(&sb, snap)?;
                let ghp = gradh_pi_magnitude(&sb, &dec.pi);
                // G1(grad_h pi, p', q'; rho)
                extra[0].push(ts, lp_nodes(&ghp, &reg_rho.nodes, pp, vol));
                // Htilde(pi1, 2, 2; rho), Htilde(pi3, 2, 2; rho): ball means.
                extra[1].push(
                    ts,
                    lp_snapshot(&dec.pi1, &grid, &cyl_rho, &reg_rho, tilde_mean, two),
                );
                extra[2].push(
                    ts,
                    lp_snapshot(&dec.pi3, &grid, &cyl_rho, &reg_rho, tilde_mean, two),
                );
                // G1(d3pi4, 2p/(p+2), 2q/(q+2); rho)
                let m_exp = pq.p.scaled_conjugate_map(2, 2)?.to_float::<T>();
                extra[3].push(
                    ts,
                    lp_nodes(dec.d3pi4.comp(0), &reg_rho.nodes, m_exp, vol),
                );
            }
            EnergyVariant::Grad => {
                let d3pi = sb.differential_op(pi_snap, DiffOp::D3)?;
                let m_exp = pq.p.scaled_conjugate_map(2, 1)?.to_float::<T>();
                extra[0].push(ts, lp_nodes(d3pi.comp(0), &reg_rho.nodes, m_exp, vol));
                let guh = grad_uh_magnitude(&sb, snap);
                extra[1].push(ts, lp_nodes(&guh, &reg_rho.nodes, p, vol));
                // Htilde(pi, p', q'; rho)
                extra[2].push(
                    ts,
                    lp_snapshot(pi_snap, &grid, &cyl_rho, &reg_rho, tilde_mean, pp),
                );
            }
            EnergyVariant::Cylinder => {
                // G(u, 2p', 2q'; rho) and Htilde(pi, p', q'; rho, slices).
                extra[0].push(
                    ts,
                    lp_snapshot(snap, &grid, &cyl_rho, &reg_rho, MeanMode::None, two * pp),
                );
                extra[1].push(
                    ts,
                    lp_snapshot(pi_snap, &grid, &cyl_rho, &reg_rho, tilde_mean, pp),
                );
            }
        }
    }

    let w_r = cyl_r.window();
    let w_rho = cyl_rho.window();
    let kappa = pq.kappa_float::<T>();
    let a_r_val = a_r.max(w_r) / r;
    let e_r_val = e_r.integral(w_r) / r;
    let a_rho_val = a_rho.max(w_rho) / rho;
    let e_rho_val = e_rho.integral(w_rho) / rho;
    let ae_rho = a_rho_val + e_rho_val;
    let g_uh_val = prefactor(1, kappa, rho) * g_uh.lq(w_rho, q);
    let lhs = a_r_val + e_r_val;
    let ratio_up = rho / r;
    let ratio_dn = r / rho;

    let (rhs_terms, meta) = match variant {
        EnergyVariant::Case1 => {
            let kappa_conj = conj.kappa_float::<T>();
            let g1_ghp = prefactor(3, kappa_conj, rho) * extra[0].lq(w_rho, qp);
            let h_pi1 = prefactor(2, lit::<T>(2.5), rho) * extra[1].lq(w_rho, two);
            let h_pi3 = prefactor(2, lit::<T>(2.5), rho) * extra[2].lq(w_rho, two);
            let mn = ExponentPair::new(
                pq.p.scaled_conjugate_map(2, 2)?,
                pq.q.scaled_conjugate_map(2, 2)?,
            )?;
            let g1_d3pi4 =
                prefactor(3, mn.kappa_float::<T>(), rho) * extra[3].lq(w_rho, mn.q.to_float());
            let terms = vec![
                ("(r/rho)^2*A(rho)".into(), ratio_dn * ratio_dn * a_rho_val),
                (
                    "(rho/r)^2*G(uh)*(A+E+G1(gradh pi))".into(),
                    ratio_up * ratio_up * g_uh_val * (ae_rho + g1_ghp),
                ),
                (
                    "(rho/r)^2*sqrt(A+E)*(Ht(pi1)+Ht(pi3))".into(),
                    ratio_up * ratio_up * ae_rho.sqrt() * (h_pi1 + h_pi3),
                ),
                (
                    "(rho/r)*sqrt(A+E)*G1(d3pi4)".into(),
                    ratio_up * ae_rho.sqrt() * g1_d3pi4,
                ),
            ];
            (terms, format!("case1 pq={pq} r={r} rho={rho}"))
        }
        EnergyVariant::Grad => {
            let mn = ExponentPair::new(
                pq.p.scaled_conjugate_map(2, 1)?,
                pq.q.scaled_conjugate_map(2, 1)?,
            )?;
            let g1_d3pi =
                prefactor(3, mn.kappa_float::<T>(), rho) * extra[0].lq(w_rho, mn.q.to_float());
            let h_graduh = prefactor(2, kappa, rho) * extra[1].lq(w_rho, q);
            let kappa_conj = conj.kappa_float::<T>();
            let ht_pi = prefactor(2, kappa_conj, rho) * extra[2].lq(w_rho, qp);
            let terms = vec![
                ("(r/rho)^2*A(rho)".into(), ratio_dn * ratio_dn * a_rho_val),
                (
                    "(rho/r)*G1(d3pi)*sqrt(A+E)".into(),
                    ratio_up * g1_d3pi * ae_rho.sqrt(),
                ),
                (
                    "((rho/r)H(grad uh)+(rho/r)^2 G(uh))*(A+E+Ht(pi))".into(),
                    (ratio_up * h_graduh + ratio_up * ratio_up * g_uh_val) * (ae_rho + ht_pi),
                ),
            ];
            (terms, format!("grad pq={pq} r={r} rho={rho}"))
        }
        EnergyVariant::Cylinder => {
            let pair2 = ExponentPair::new(conj.p.doubled(), conj.q.doubled())?;
            let g_u2 = prefactor(1, pair2.kappa_float::<T>(), rho)
                * extra[0].lq(w_rho, pair2.q.to_float());
            let kappa_conj = conj.kappa_float::<T>();
            let ht_pi = prefactor(2, kappa_conj, rho) * extra[1].lq(w_rho, qp);
            let terms = vec![
                ("(r/rho)*A(rho)".into(), ratio_dn * a_rho_val),
                (
                    "(rho/r)^2*G(uh)*(G(u,2p',2q')^2+Ht(pi))".into(),
                    ratio_up * ratio_up * g_uh_val * (g_u2 * g_u2 + ht_pi),
                ),
            ];
            (terms, format!("cylinder pq={pq} r={r} rho={rho}"))
        }
    };
    Ok(InequalityCheck::new(
        match variant {
            EnergyVariant::Case1 => "energy_case1",
            EnergyVariant::Grad => "energy_grad",
            EnergyVariant::Cylinder => "energy_cylinder",
        },
        lhs,
        rhs_terms,
        meta,
    ))
}

// ---------------------------------------------------------------------
// Pressure decay checks.
// ---------------------------------------------------------------------

/// Which pressure-decay lemma to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayVariant {
    /// Four displays with the pi1/pi3/d3pi4 split (kappa = 1, ball).
    L33,
    /// Two displays with d3 pi (kappa = 2, ball).
    L37,
    /// One display with slice means (kappa = 2, vertical).
    L44,
}

/// One `InequalityCheck` per displayed inequality of the chosen lemma.
#[allow(clippy::too_many_arguments)]
pub fn check_pressure_decay<T: Scalar>(
    u: &SpaceTimeField<T>,
    pi: &SpaceTimeField<T>,
    r: T,
    rho: T,
    pq: &ExponentPair,
    variant: DecayVariant,
    x0: [T; 3],
    t0: T,
) -> Result<Vec<InequalityCheck<T>>> {
    validate_pair(u, pi)?;
    // The lemmas assume 0 < 8r < rho; the boundary case 8r = rho is the
    // acceptance configuration.
    crate::cutoff::check_scale_ordering(r, rho, lit::<T>(8.0))?;
    match variant {
        DecayVariant::L33 => {
            if !pq.kappa_is(1, 1) {
                return Err(Error::InvalidParam(format!(
                    "L33 needs 3/p + 2/q = 1, got {}",
                    pq.kappa()
                )));
            }
        }
        DecayVariant::L37 | DecayVariant::L44 => {
            if !pq.kappa_is(2, 1) {
                return Err(Error::InvalidParam(format!(
                    "this variant needs 3/p + 2/q = 2, got {}",
                    pq.kappa()
                )));
            }
        }
    }
    let geometry = if variant == DecayVariant::L44 {
        Geometry::Vertical
    } else {
        Geometry::Ball
    };
    let tilde_mean = if geometry == Geometry::Vertical {
        MeanMode::DiscMean
    } else {
        MeanMode::BallMean
    };
    let grid = u.grid();
    let sb = SpectralBox::new(grid);
    let cyl_r = CylinderSpec::new(x0, t0, r, geometry)?;
    let cyl_rho = CylinderSpec::new(x0, t0, rho, geometry)?;
    cyl_r.validate(u, false)?;
    cyl_rho.validate(u, false)?;
    let reg_r = Region::build(&grid, &cyl_r);
    let reg_rho = Region::build(&grid, &cyl_rho);
    let vol = grid.cell_volume();
    let (p, q) = pq.floats::<T>();
    let conj = pq.conjugate();
    let (pp, qp) = conj.floats::<T>();
    let one = T::one();
    let two = lit::<T>(2.0);
    let kappa = pq.kappa_float::<T>();
    let kappa_conj = conj.kappa_float::<T>();

    let mut accs: Vec<Acc<T>> = (0..14).map(|_| Acc::new()).collect();
    for (j, snap) in u.snapshots().iter().enumerate() {
        let ts = snap.time();
        let pi_snap = pi.snapshot(j);
        match variant {
            DecayVariant::L33 => {
                let dec = decompose_sec3(&sb, snap)?;
                let gs = sb.grad_sq(snap);
                let uh = uh_magnitude(snap);
                // 0: Ht(pi1,2,2;r) spatial, 1: same at rho with p=1
                accs[0].push(
                    ts,
                    lp_snapshot(&dec.pi1, &grid, &cyl_r, &reg_r, tilde_mean, two),
                );
                accs[1].push(
                    ts,
                    lp_snapshot(&dec.pi1, &grid, &cyl_rho, &reg_rho, tilde_mean, one),
                );
                accs[2].push(
                    ts,
                    lp_snapshot(&dec.pi3, &grid, &cyl_r, &reg_r, tilde_mean, two),
                );
                accs[3].push(
                    ts,
                    lp_snapshot(&dec.pi3, &grid, &cyl_rho, &reg_rho, tilde_mean, one),
                );
                // 4: G(uh,p,q;rho) spatial, 5: A(rho), 6: E(rho)
                accs[4].push(ts, lp_nodes(&uh, &reg_rho.nodes, p, vol));
                accs[5].push(
                    ts,
                    reduce::sum_over_nodes(&reg_rho.nodes, |i| {
                        let m = snap.magnitude_at(i);
                        m * m
                    }) * vol,
                );
                accs[6].push(ts, lp_nodes(&gs, &reg_rho.nodes, one, vol));
                // 7: G1(gradh pi, p', q'; r); 8: G1(gradh pi, 1, q'; rho)
                let ghp = gradh_pi_magnitude(&sb, &dec.pi);
                accs[7].push(ts, lp_nodes(&ghp, &reg_r.nodes, pp, vol));
                accs[8].push(ts, lp_nodes(&ghp, &reg_rho.nodes, one, vol));
                // 9: G1(d3pi4, m, n; r); 10: G1(d3pi4, 1, n; rho)
                let m_exp = pq.p.scaled_conjugate_map(2, 2)?.to_float::<T>();
                accs[9].push(ts, lp_nodes(dec.d3pi4.comp(0), &reg_r.nodes, m_exp, vol));
                accs[10].push(ts, lp_nodes(dec.d3pi4.comp(0), &reg_rho.nodes, one, vol));
            }
            DecayVariant::L37 | DecayVariant::L44 => {
                // 0: Ht(pi,p',q';r), 1: Ht(pi, 1 or p', q'; rho)
                accs[0].push(
                    ts,
                    lp_snapshot(pi_snap, &grid, &cyl_r, &reg_r, tilde_mean, pp),
                );
                let rho_p = if variant == DecayVariant::L44 { pp } else { one };
                accs[1].push(
                    ts,
                    lp_snapshot(pi_snap, &grid, &cyl_rho, &reg_rho, tilde_mean, rho_p),
                );
                // 2: Gt(u, 2p', 2q'; rho)
                accs[2].push(
                    ts,
                    lp_snapshot(snap, &grid, &cyl_rho, &reg_rho, tilde_mean, two * pp),
                );
                if variant == DecayVariant::L37 {
                    let d3pi = sb.differential_op(pi_snap, DiffOp::D3)?;
                    let m_exp = pq.p.scaled_conjugate_map(2, 1)?.to_float::<T>();
                    accs[3].push(ts, lp_nodes(d3pi.comp(0), &reg_r.nodes, m_exp, vol));
                    accs[4].push(ts, lp_nodes(d3pi.comp(0), &reg_rho.nodes, one, vol));
                    let guh = grad_uh_magnitude(&sb, snap);
                    accs[5].push(ts, lp_nodes(&guh, &reg_rho.nodes, p, vol));
                }
            }
        }
    }

    let w_r = cyl_r.window();
    let w_rho = cyl_rho.window();
    let up = rho / r;
    let dn = r / rho;
    let mut out = Vec::new();

    match variant {
        DecayVariant::L33 => {
            let g_uh = prefactor(1, kappa, rho) * accs[4].lq(w_rho, q);
            let ae = accs[5].max(w_rho) / rho + accs[6].integral(w_rho) / rho;
            let e_rho = accs[6].integral(w_rho) / rho;
            let half = lit::<T>(0.5);
            // Ht(pi1,2,2) and Ht(pi3,2,2): kappa(2,2) = 5/2.
            let k22 = lit::<T>(2.5);
            for (name, i_r, i_rho) in
                [("pressure_decay_pi1", 0usize, 1usize), ("pressure_decay_pi3", 2, 3)]
            {
                let lhs = prefactor(2, k22, r) * accs[i_r].lq(w_r, two);
                // Ht(pi_k, 1, 2; rho): kappa(1,2) = 3 + 1 = 4.
                let k12 = lit::<T>(4.0);
                let tail = prefactor(2, k12, rho) * accs[i_rho].lq(w_rho, two);
                out.push(InequalityCheck::new(
                    name,
                    lhs,
                    vec![
                        (
                            "(rho/r)^(1/2)*G(uh)*sqrt(A+E)".into(),
                            up.powf(half) * g_uh * ae.sqrt(),
                        ),
                        ("(r/rho)^2*Ht(.,1,2;rho)".into(), dn * dn * tail),
                    ],
                    format!("L33 pq={pq} r={r} rho={rho}"),
                ));
            }
            // grad_h pi display.
            {
                let lhs = prefactor(3, kappa_conj, r) * accs[7].lq(w_r, qp);
                let k1qp = ExponentPair::new(Exp::int(1)?, conj.q)?.kappa_float::<T>();
                let tail = prefactor(3, k1qp, rho) * accs[8].lq(w_rho, qp);
                let expo = lit::<T>(3.0) / pp - one;
                out.push(InequalityCheck::new(
                    "pressure_decay_gradh_pi",
                    lhs,
                    vec![
                        ("(rho/r)*(A+E)".into(), up * ae),
                        (
                            "(r/rho)^(3/p'-1)*G1(gradh pi,1,q';rho)".into(),
                            dn.powf(expo) * tail,
                        ),
                    ],
                    format!("L33 pq={pq} r={r} rho={rho}"),
                ));
            }
            // d3pi4 display.
            {
                let mn = ExponentPair::new(
                    pq.p.scaled_conjugate_map(2, 2)?,
                    pq.q.scaled_conjugate_map(2, 2)?,
                )?;
                let lhs = prefactor(3, mn.kappa_float::<T>(), r)
                    * accs[9].lq(w_r, mn.q.to_float());
                let k1n = ExponentPair::new(Exp::int(1)?, mn.q)?.kappa_float::<T>();
                let tail = prefactor(3, k1n, rho) * accs[10].lq(w_rho, mn.q.to_float());
                let expo = (p + lit::<T>(6.0)) / (two * p);
                out.push(InequalityCheck::new(
                    "pressure_decay_d3pi4",
                    lhs,
                    vec![
                        ("(rho/r)*G(uh)*sqrt(E)".into(), up * g_uh * e_rho.sqrt()),
                        (
                            "(r/rho)^((p+6)/2p)*G1(d3pi4,1,n;rho)".into(),
                            dn.powf(expo) * tail,
                        ),
                    ],
                    format!("L33 pq={pq} r={r} rho={rho}"),
                ));
            }
        }
        DecayVariant::L37 => {
            let gt_u = {
                let pair2 = ExponentPair::new(conj.p.doubled(), conj.q.doubled())?;
                prefactor(1, pair2.kappa_float::<T>(), rho)
                    * accs[2].lq(w_rho, pair2.q.to_float())
            };
            {
                let lhs = prefactor(2, kappa_conj, r) * accs[0].lq(w_r, qp);
                let k1qp = ExponentPair::new(Exp::int(1)?, conj.q)?.kappa_float::<T>();
                let tail = prefactor(2, k1qp, rho) * accs[1].lq(w_rho, qp);
                let expo = lit::<T>(3.0) / pp;
                out.push(InequalityCheck::new(
                    "pressure_decay_pi_l37",
                    lhs,
                    vec![
                        ("(rho/r)*Gt(u,2p',2q')^2".into(), up * gt_u * gt_u),
                        ("(r/rho)^(3/p')*Ht(pi,1,q';rho)".into(), dn.powf(expo) * tail),
                    ],
                    format!("L37 pq={pq} r={r} rho={rho}"),
                ));
            }
            {
                let mn = ExponentPair::new(
                    pq.p.scaled_conjugate_map(2, 1)?,
                    pq.q.scaled_conjugate_map(2, 1)?,
                )?;
                let lhs = prefactor(3, mn.kappa_float::<T>(), r)
                    * accs[3].lq(w_r, mn.q.to_float());
                let k1n = ExponentPair::new(Exp::int(1)?, mn.q)?.kappa_float::<T>();
                let tail = prefactor(3, k1n, rho) * accs[4].lq(w_rho, mn.q.to_float());
                let h_guh = prefactor(2, kappa, rho) * accs[5].lq(w_rho, q);
                let half = lit::<T>(0.5);
                let expo = one + lit::<T>(3.0) / (two * p);
                out.push(InequalityCheck::new(
                    "pressure_decay_d3pi_l37",
                    lhs,
                    vec![
                        (
                            "(rho/r)^(1/2)*Gt(u)*H(grad uh)".into(),
                            up.powf(half) * gt_u * h_guh,
                        ),
                        (
                            "(r/rho)^(1+3/2p)*G1(d3pi,1,n;rho)".into(),
                            dn.powf(expo) * tail,
                        ),
                    ],
                    format!("L37 pq={pq} r={r} rho={rho}"),
                ));
            }
        }
        DecayVariant::L44 => {
            let gt_u = {
                let pair2 = ExponentPair::new(conj.p.doubled(), conj.q.doubled())?;
                prefactor(1, pair2.kappa_float::<T>(), rho)
                    * accs[2].lq(w_rho, pair2.q.to_float())
            };
            let lhs = prefactor(2, kappa_conj, r) * accs[0].lq(w_r, qp);
            let tail = prefactor(2, kappa_conj, rho) * accs[1].lq(w_rho, qp);
            let expo = two / pp;
            out.push(InequalityCheck::new(
                "pressure_decay_pi_l44",
                lhs,
                vec![
                    ("(rho/r)*Gt(u,2p',2q')^2".into(), up * gt_u * gt_u),
                    ("(r/rho)^(2/p')*Ht(pi,p',q';rho)".into(), dn.powf(expo) * tail),
                ],
                format!("L44 pq={pq} r={r} rho={rho}"),
            ));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Global bounds, Poincare reduction, harmonic lemma.
// ---------------------------------------------------------------------

/// Lemma-3.4-type global bounds: the four pressure quantities at a fixed
/// scale against the squared energy norm of u.
pub fn check_global_bounds<T: Scalar>(
    u: &SpaceTimeField<T>,
    pi: &SpaceTimeField<T>,
    pq: &ExponentPair,
    r0: T,
    x0: [T; 3],
    t0: T,
) -> Result<Vec<InequalityCheck<T>>> {
    validate_pair(u, pi)?;
    let grid = u.grid();
    let sb = SpectralBox::new(grid);
    let cyl = CylinderSpec::new(x0, t0, r0, Geometry::Ball)?;
    cyl.validate(u, false)?;
    let region = Region::build(&grid, &cyl);
    let vol = grid.cell_volume();
    let one = T::one();
    let two = lit::<T>(2.0);
    let conj = pq.conjugate();
    let qp = conj.q.to_float::<T>();

    let all_nodes: Vec<usize> = (0..grid.len()).collect();
    let mut ht_pi1 = Acc::new();
    let mut ht_pi3 = Acc::new();
    let mut g1_ghp = Acc::new();
    let mut g1_d3pi4 = Acc::new();
    let mut energy_sup = Acc::new();
    let mut energy_grad = Acc::new();
    let n_exp = pq.q.scaled_conjugate_map(2, 2)?;
    for snap in u.snapshots() {
        let ts = snap.time();
        let dec = decompose_sec3(&sb, snap)?;
        ht_pi1.push(
            ts,
            lp_snapshot(&dec.pi1, &grid, &cyl, &region, MeanMode::BallMean, one),
        );
        ht_pi3.push(
            ts,
            lp_snapshot(&dec.pi3, &grid, &cyl, &region, MeanMode::BallMean, one),
        );
        let ghp = gradh_pi_magnitude(&sb, &dec.pi);
        g1_ghp.push(ts, lp_nodes(&ghp, &region.nodes, one, vol));
        g1_d3pi4.push(ts, lp_nodes(dec.d3pi4.comp(0), &region.nodes, one, vol));
        // Full-box energy norm pieces.
        energy_sup.push(
            ts,
            reduce::sum_over_nodes(&all_nodes, |i| {
                let m = snap.magnitude_at(i);
                m * m
            }) * vol,
        );
        let gs = sb.grad_sq(snap);
        energy_grad.push(ts, lp_nodes(&gs, &all_nodes, one, vol));
    }
    let full_window = (u.start_time(), u.end_time());
    let energy =
        energy_sup.max(full_window).sqrt() + energy_grad.integral(full_window).sqrt();
    let energy2 = energy * energy;
    let w = cyl.window();
    let k12 = lit::<T>(4.0); // kappa(1, 2)
    let mut out = Vec::new();
    let meta = format!("global pq={pq} r0={r0}");
    out.push(InequalityCheck::new(
        "global_Ht_pi1",
        prefactor(2, k12, r0) * ht_pi1.lq(w, two),
        vec![("||u||^2".into(), energy2)],
        meta.clone(),
    ));
    out.push(InequalityCheck::new(
        "global_Ht_pi3",
        prefactor(2, k12, r0) * ht_pi3.lq(w, two),
        vec![("||u||^2".into(), energy2)],
        meta.clone(),
    ));
    let k1qp = ExponentPair::new(Exp::int(1)?, conj.q)?.kappa_float::<T>();
    out.push(InequalityCheck::new(
        "global_G1_gradh_pi",
        prefactor(3, k1qp, r0) * g1_ghp.lq(w, qp),
        vec![("||u||^2".into(), energy2)],
        meta.clone(),
    ));
    let k1n = ExponentPair::new(Exp::int(1)?, n_exp)?.kappa_float::<T>();
    out.push(InequalityCheck::new(
        "global_G1_d3pi4",
        prefactor(3, k1n, r0) * g1_d3pi4.lq(w, n_exp.to_float()),
        vec![("||u||^2".into(), energy2)],
        meta,
    ));
    Ok(out)
}

/// The Poincare reduction of Case 2: the one-scale inequality
/// G(u_h - mean, p, q; r) <= C H(grad u_h, p, q; r) and the two-scale
/// display. Needs 3/p + 2/q = 2; the two-scale form needs 3/2 < p < 3.
pub fn check_poincare_reduction<T: Scalar>(
    u: &SpaceTimeField<T>,
    r: T,
    rho: T,
    pq: &ExponentPair,
    x0: [T; 3],
    t0: T,
) -> Result<(InequalityCheck<T>, InequalityCheck<T>)> {
    if !pq.kappa_is(2, 1) {
        return Err(Error::InvalidParam(format!(
            "Poincare reduction needs 3/p + 2/q = 2, got {}",
            pq.kappa()
        )));
    }
    if let Some(pr) = pq.p.rat() {
        use num_rational::Ratio;
        if pr <= Ratio::new(3, 2) || pr >= Ratio::from_integer(3) {
            return Err(Error::InvalidParam(
                "two-scale Poincare needs 3/2 < p < 3".into(),
            ));
        }
    } else {
        return Err(Error::InvalidParam("p = infinity not admissible here".into()));
    }
    if u.kind() != FieldKind::Velocity {
        return Err(Error::Incompatible("expected a velocity field".into()));
    }
    crate::cutoff::check_scale_ordering(r, rho, T::one())?;
    let grid = u.grid();
    let sb = SpectralBox::new(grid);
    let cyl_r = CylinderSpec::new(x0, t0, r, Geometry::Ball)?;
    let cyl_rho = CylinderSpec::new(x0, t0, rho, Geometry::Ball)?;
    cyl_r.validate(u, false)?;
    cyl_rho.validate(u, false)?;
    let reg_r = Region::build(&grid, &cyl_r);
    let reg_rho = Region::build(&grid, &cyl_rho);
    let vol = grid.cell_volume();
    let (p, q) = pq.floats::<T>();
    let kappa = pq.kappa_float::<T>();

    let mut gt_uh_r = Acc::new();
    let mut g_uh_r = Acc::new();
    let mut g_uh_rho = Acc::new();
    let mut h_guh_r = Acc::new();
    let mut h_guh_rho = Acc::new();
    for snap in u.snapshots() {
        let ts = snap.time();
        // u_h as a velocity-shaped snapshot with zero third component, so
        // the vector ball-mean subtraction applies per component.
        let uh_snap = Snapshot::new(
            grid,
            ts,
            vec![
                snap.comp(0).to_vec(),
                snap.comp(1).to_vec(),
                vec![T::zero(); grid.len()],
            ],
        )?;
        gt_uh_r.push(
            ts,
            lp_snapshot(&uh_snap, &grid, &cyl_r, &reg_r, MeanMode::BallMean, p),
        );
        let uh = uh_magnitude(snap);
        g_uh_r.push(ts, lp_nodes(&uh, &reg_r.nodes, p, vol));
        g_uh_rho.push(ts, lp_nodes(&uh, &reg_rho.nodes, p, vol));
        let guh = grad_uh_magnitude(&sb, snap);
        h_guh_r.push(ts, lp_nodes(&guh, &reg_r.nodes, p, vol));
        h_guh_rho.push(ts, lp_nodes(&guh, &reg_rho.nodes, p, vol));
    }
    let w_r = cyl_r.window();
    let w_rho = cyl_rho.window();
    let one_scale = InequalityCheck::new(
        "poincare_one_scale",
        prefactor(1, kappa, r) * gt_uh_r.lq(w_r, q),
        vec![(
            "H(grad uh,p,q;r)".into(),
            prefactor(2, kappa, r) * h_guh_r.lq(w_r, q),
        )],
        format!("pq={pq} r={r}"),
    );
    let up = rho / r;
    let dn = r / rho;
    let expo = lit::<T>(3.0) / p - T::one();
    let two_scale = InequalityCheck::new(
        "poincare_two_scale",
        prefactor(1, kappa, r) * g_uh_r.lq(w_r, q),
        vec![
            (
                "(rho/r)*H(grad uh,p,q;rho)".into(),
                up * prefactor(2, kappa, rho) * h_guh_rho.lq(w_rho, q),
            ),
            (
                "(r/rho)^(3/p-1)*G(uh,p,q;rho)".into(),
                dn.powf(expo) * prefactor(1, kappa, rho) * g_uh_rho.lq(w_rho, q),
            ),
        ],
        format!("pq={pq} r={r} rho={rho}"),
    );
    Ok((one_scale, two_scale))
}

/// Quadrature + sup-lattice evaluation of the harmonic-function lemma:
/// sup_{B_1/2} |d3 f| vs int_{B_1} |f - P3 f| and the horizontal variant.
/// `quad_n` is the evaluation lattice per axis over [-1, 1]^3.
pub fn check_harmonic_lemma(
    f: &HarmonicSample,
    quad_n: usize,
) -> Result<(InequalityCheck<f64>, InequalityCheck<f64>)> {
    // Validate harmonicity on a sample of the enclosing cube.
    let probe: Vec<[f64; 3]> = {
        let mut pts = Vec::new();
        let m = 7;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    pts.push([
                        -1.0 + 2.0 * (i as f64 + 0.5) / m as f64,
                        -1.0 + 2.0 * (j as f64 + 0.5) / m as f64,
                        -1.0 + 2.0 * (k as f64 + 0.5) / m as f64,
                    ]);
                }
            }
        }
        pts
    };
    let residual = f.harmonicity_residual(&probe);
    if residual > 1e-8 {
        return Err(Error::InvalidParam(format!(
            "sample is not harmonic to tolerance: residual {residual:.2e}"
        )));
    }

    let h = 2.0 / quad_n as f64;
    let coord = |i: usize| -> f64 { -1.0 + (i as f64 + 0.5) * h };

    // P3 f per (x1, x2) column and Ph f per x3, by midpoint quadrature over
    // the fixed cube sections (exact-in-x analytic means exist for
    // polynomials, but one quadrature path keeps both sample families on
    // the same footing).
    let column_mean_x3 = |x1: f64, x2: f64| -> f64 {
        let mut acc = 0.0;
        for k in 0..quad_n {
            acc += f.eval([x1, x2, coord(k)]);
        }
        acc / quad_n as f64
    };
    let mean_x1x2 = |x3: f64| -> f64 {
        let mut acc = 0.0;
        for j in 0..quad_n {
            for i in 0..quad_n {
                acc += f.eval([coord(i), coord(j), x3]);
            }
        }
        acc / (quad_n * quad_n) as f64
    };

    // Ball integrals with boundary-adapted inner quadrature: columns of
    // exact height over the disc for rhs1, polar discs per height for
    // rhs2. The adapted inner direction removes the O(h) indicator error
    // of the rim, leaving O(h^2).
    let mz = (quad_n / 2).max(48);
    let mut rhs1 = 0.0;
    for j in 0..quad_n {
        for i in 0..quad_n {
            let (x1, x2) = (coord(i), coord(j));
            let s2 = x1 * x1 + x2 * x2;
            if s2 >= 1.0 {
                continue;
            }
            let zmax = (1.0 - s2).sqrt();
            let dz = 2.0 * zmax / mz as f64;
            let p3 = column_mean_x3(x1, x2);
            let mut col = 0.0;
            for k in 0..mz {
                let z = -zmax + (k as f64 + 0.5) * dz;
                col += (f.eval([x1, x2, z]) - p3).abs();
            }
            rhs1 += col * dz * h * h;
        }
    }
    let mut rhs2 = 0.0;
    {
        let (mr, mth) = (mz, 2 * mz);
        for k in 0..quad_n {
            let z = coord(k);
            if z.abs() >= 1.0 {
                continue;
            }
            let rad = (1.0 - z * z).sqrt();
            let ph = mean_x1x2(z);
            let dr = rad / mr as f64;
            let dth = std::f64::consts::TAU / mth as f64;
            let mut slice = 0.0;
            for ir in 0..mr {
                let r = (ir as f64 + 0.5) * dr;
                let mut ring = 0.0;
                for it in 0..mth {
                    let th = (it as f64 + 0.5) * dth;
                    ring += (f.eval([r * th.cos(), r * th.sin(), z]) - ph).abs();
                }
                slice += ring * r * dr * dth;
            }
            rhs2 += slice * h;
        }
    }

    // Sups over a refined lattice of B_{1/2} with closed-form gradients.
    let m = quad_n.max(64);
    let mut lhs1 = 0.0f64;
    let mut lhs2 = 0.0f64;
    let c2 = |i: usize| -> f64 { -0.5 + (i as f64 + 0.5) / m as f64 };
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let x = [c2(i), c2(j), c2(k)];
                if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 0.25 {
                    let g = f.grad(x);
                    lhs1 = lhs1.max(g[2].abs());
                    lhs2 = lhs2.max((g[0] * g[0] + g[1] * g[1]).sqrt());
                }
            }
        }
    }

    let name = f.describe();
    Ok((
        InequalityCheck::new(
            "harmonic_d3",
            lhs1,
            vec![("int_B1 |f - P3 f|".into(), rhs1)],
            name.clone(),
        ),
        InequalityCheck::new(
            "harmonic_gradh",
            lhs2,
            vec![("int_B1 |f - Ph f|".into(), rhs2)],
            name,
        ),
    ))
}

/// Empirical Calderon-Zygmund ratio ||tilde_pi1||_{Lp'} / || |u_h| |u|
/// ||_{Lp'} over the ball B_rho.
pub fn cz_ratio<T: Scalar>(
    sb: &SpectralBox<T>,
    u: &Snapshot<T>,
    x0: [T; 3],
    rho: T,
    p_prime: T,
) -> Result<T> {
    let dec = decompose_cutoff(sb, CutoffSource::Pi1Terms, u, x0, rho, CutoffMode::Ball)?;
    let grid = sb.grid();
    let cyl = CylinderSpec::new(x0, T::zero(), rho, Geometry::Ball)?;
    let nodes = cyl.nodes(&grid);
    let vol = grid.cell_volume();
    let num = lp_nodes(dec.tilde_pi1.comp(0), &nodes, p_prime, vol);
    let uh = uh_magnitude(u);
    let det: Vec<T> = (0..grid.len())
        .map(|i| uh[i] * u.magnitude_at(i))
        .collect();
    let den = lp_nodes(&det, &nodes, p_prime, vol);
    if den == T::zero() {
        return Ok(T::zero());
    }
    Ok(num / den)
}
