//! Epsilon-regularity criteria and the decay iteration.
//!
//! Verdicts are diagnostic, not theorem-grade: they report whether the
//! checkable smallness hypotheses hold at the resolved scales. The limsup
//! as r -> 0 is operationally the maximum over the finest three resolvable
//! scales, and every verdict carries the resolution floor so that
//! `inconclusive` (floor in the way) is distinguishable from `satisfied`.

use crate::cylinder::{CylinderSpec, Geometry};
use crate::error::{Error, Result};
use crate::exponents::ExponentPair;
use crate::field::{FieldKind, Snapshot, SpaceTimeField};
use crate::inequalities::InequalityCheck;
use crate::pressure::decompose_sec3;
use crate::quantities::{
    integrate_window, node_values, quantity_flagged, spatial_lp, window_max, MeanMode,
    QuantityKind, Region,
};
use crate::reduce;
use crate::scalar::{lit, Scalar};
use crate::spectral::{DiffOp, SpectralBox};
use num_rational::Ratio;
use serde::Serialize;

/// Composite-functional shape of the decay iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FVariant {
    /// A + E + eps^{1/2} G1(grad_h pi) + delta^{-3/2} (Ht(pi1)^2 +
    /// Ht(pi3)^2 + G1(d3pi4)^2), ball geometry.
    Case1,
    /// A + E + eps^{1/2} Ht(pi) + delta^{-3/2} G1(d3 pi)^2, ball geometry.
    Thm35,
    /// A + E + eps^{1/2} Ht(pi), vertical geometry with slice means.
    Cylinder,
}

impl FVariant {
    pub fn name(&self) -> &'static str {
        match self {
            FVariant::Case1 => "case1",
            FVariant::Thm35 => "thm35",
            FVariant::Cylinder => "cylinder",
        }
    }
}

/// Iteration parameters: theta below 1/8, the smallness weights, the
/// regularity threshold and the scale ladder.
#[derive(Debug, Clone, Serialize)]
pub struct IterationParams<T> {
    pub theta: T,
    pub delta: T,
    pub eps: T,
    pub eps1: T,
    /// Scale ladder, descending.
    pub scales: Vec<T>,
    pub variant: FVariant,
    /// Integrability pair the functional terms use.
    pub pq: ExponentPair,
}

impl<T: Scalar> IterationParams<T> {
    pub fn new(
        theta: T,
        delta: T,
        eps: T,
        eps1: T,
        scales: Vec<T>,
        variant: FVariant,
        pq: ExponentPair,
    ) -> Result<Self> {
        let p = Self {
            theta,
            delta,
            eps,
            eps1,
            scales,
            variant,
            pq,
        };
        p.validate()?;
        Ok(p)
    }

    /// Defaults: theta = 1/16, delta = 1e-2, eps = 1e-2, eps1 = 0.05.
    pub fn defaults(scales: Vec<T>, variant: FVariant, pq: ExponentPair) -> Result<Self> {
        Self::new(
            lit::<T>(1.0 / 16.0),
            lit::<T>(1e-2),
            lit::<T>(1e-2),
            lit::<T>(0.05),
            scales,
            variant,
            pq,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > T::zero()) || !(self.theta < lit::<T>(0.125)) {
            return Err(Error::InvalidParam(format!(
                "theta must lie in (0, 1/8), got {}",
                self.theta
            )));
        }
        for (name, v) in [("delta", self.delta), ("eps", self.eps), ("eps1", self.eps1)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} must be positive")));
            }
        }
        if self.scales.is_empty() {
            return Err(Error::InvalidParam("empty scale ladder".into()));
        }
        for w in self.scales.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidParam("ladder must be strictly descending".into()));
            }
        }
        match self.variant {
            FVariant::Case1 => {
                if !self.pq.kappa_is(1, 1) {
                    return Err(Error::InvalidParam(format!(
                        "case1 functional needs 3/p + 2/q = 1, got {}",
                        self.pq.kappa()
                    )));
                }
            }
            FVariant::Thm35 | FVariant::Cylinder => {
                if !self.pq.kappa_is(2, 1) {
                    return Err(Error::InvalidParam(format!(
                        "this functional needs 3/p + 2/q = 2, got {}",
                        self.pq.kappa()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// F at one scale with its weighted term breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct DecayEntry<T> {
    pub r: T,
    pub f_value: T,
    pub terms: Vec<(String, T)>,
    pub below_floor: bool,
}

/// Halving comparison between two ladder scales.
#[derive(Debug, Clone, Serialize)]
pub struct HalvingVerdict<T> {
    pub r_outer: T,
    pub r_inner: T,
    pub f_outer: T,
    pub f_inner: T,
    pub halved: bool,
    /// Vacuous comparison (F at the outer scale is zero).
    pub degenerate: bool,
}

/// The decay trace: F over the ladder plus halving verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct DecayTrace<T> {
    pub variant: FVariant,
    pub entries: Vec<DecayEntry<T>>,
    pub halving: Vec<HalvingVerdict<T>>,
}

impl<T: Scalar> DecayTrace<T> {
    /// trace.csv columns: variant,r,F,<terms...>,halved
    pub fn to_csv(&self) -> String {
        let term_names: Vec<String> = self
            .entries
            .first()
            .map(|e| e.terms.iter().map(|t| t.0.clone()).collect())
            .unwrap_or_default();
        let mut out = format!("variant,r,F,{},halved\n", term_names.join(","));
        for (i, e) in self.entries.iter().enumerate() {
            let halved = self
                .halving
                .iter()
                .find(|h| h.r_inner == e.r)
                .map(|h| h.halved.to_string())
                .unwrap_or_default();
            let terms = e
                .terms
                .iter()
                .map(|t| format!("{}", t.1))
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.variant.name(),
                e.r,
                e.f_value,
                terms,
                halved
            ));
            let _ = i;
        }
        out
    }
}

/// Evaluate the composite functional F over the ladder and record the
/// halving verdicts (adjacent scales; for the cylinder variant the
/// three-scale shape compares entries two apart).
pub fn decay_trace<T: Scalar>(
    u: &SpaceTimeField<T>,
    pi: &SpaceTimeField<T>,
    params: &IterationParams<T>,
    x0: [T; 3],
    t0: T,
) -> Result<DecayTrace<T>> {
    params.validate()?;
    if params.scales.len() < 3 {
        return Err(Error::InvalidParam(
            "decay trace needs at least 3 ladder scales".into(),
        ));
    }
    if u.kind() != FieldKind::Velocity || pi.kind() != FieldKind::Pressure {
        return Err(Error::Incompatible("need velocity and pressure fields".into()));
    }
    let grid = u.grid();
    let sb = SpectralBox::new(grid);
    let geometry = if params.variant == FVariant::Cylinder {
        Geometry::Vertical
    } else {
        Geometry::Ball
    };
    let tilde_mean = if geometry == Geometry::Vertical {
        MeanMode::DiscMean
    } else {
        MeanMode::BallMean
    };
    let pq = &params.pq;
    let conj = pq.conjugate();
    let (_, qp) = conj.floats::<T>();
    let pp = conj.p.to_float::<T>();
    let one = T::one();
    let two = lit::<T>(2.0);
    let vol = grid.cell_volume();

    struct ScaleAccs<T> {
        cyl: CylinderSpec<T>,
        region: Region,
        below: bool,
        a: Vec<(T, T)>,
        e: Vec<(T, T)>,
        extra: Vec<Vec<(T, T)>>,
    }
    let mut per_scale: Vec<ScaleAccs<T>> = Vec::new();
    for &r in &params.scales {
        let cyl = CylinderSpec::new(x0, t0, r, geometry)?;
        let below = cyl.validate(u, true)?;
        let region = Region::build(&grid, &cyl);
        per_scale.push(ScaleAccs {
            cyl,
            region,
            below,
            a: Vec::new(),
            e: Vec::new(),
            extra: (0..4).map(|_| Vec::new()).collect(),
        });
    }

    let needs_sec3 = params.variant == FVariant::Case1;
    for (j, snap) in u.snapshots().iter().enumerate() {
        let ts = snap.time();
        let pi_snap = pi.snapshot(j);
        let gs = sb.grad_sq(snap);
        let dec = if needs_sec3 {
            Some(decompose_sec3(&sb, snap)?)
        } else {
            None
        };
        let d3pi = if params.variant == FVariant::Thm35 {
            Some(sb.differential_op(pi_snap, DiffOp::D3)?)
        } else {
            None
        };
        let ghp = dec.as_ref().map(|d| {
            let d1 = sb.derivative_real(d.pi.comp(0), 0);
            let d2 = sb.derivative_real(d.pi.comp(0), 1);
            d1.into_iter()
                .zip(d2)
                .map(|(a, b)| (a * a + b * b).sqrt())
                .collect::<Vec<T>>()
        });

        for sc in per_scale.iter_mut() {
            let nodes = &sc.region.nodes;
            sc.a.push((
                ts,
                reduce::sum_over_nodes(nodes, |i| {
                    let m = snap.magnitude_at(i);
                    m * m
                }) * vol,
            ));
            sc.e.push((ts, reduce::sum_over_nodes(nodes, |i| gs[i]) * vol));
            match params.variant {
                FVariant::Case1 => {
                    let d = dec.as_ref().unwrap();
                    let g = ghp.as_ref().unwrap();
                    sc.extra[0].push((
                        ts,
                        spatial_lp(
                            &nodes.iter().map(|&i| g[i]).collect::<Vec<_>>(),
                            pp,
                            vol,
                        ),
                    ));
                    sc.extra[1].push((
                        ts,
                        spatial_lp(
                            &node_values(&d.pi1, &grid, &sc.cyl, &sc.region, tilde_mean),
                            two,
                            vol,
                        ),
                    ));
                    sc.extra[2].push((
                        ts,
                        spatial_lp(
                            &node_values(&d.pi3, &grid, &sc.cyl, &sc.region, tilde_mean),
                            two,
                            vol,
                        ),
                    ));
                    let m_exp = pq.p.scaled_conjugate_map(2, 2)?.to_float::<T>();
                    sc.extra[3].push((
                        ts,
                        spatial_lp(
                            &nodes
                                .iter()
                                .map(|&i| d.d3pi4.comp(0)[i].abs())
                                .collect::<Vec<_>>(),
                            m_exp,
                            vol,
                        ),
                    ));
                }
                FVariant::Thm35 => {
                    sc.extra[0].push((
                        ts,
                        spatial_lp(
                            &node_values(pi_snap, &grid, &sc.cyl, &sc.region, tilde_mean),
                            pp,
                            vol,
                        ),
                    ));
                    let dd = d3pi.as_ref().unwrap();
                    let m_exp = pq.p.scaled_conjugate_map(2, 1)?.to_float::<T>();
                    sc.extra[1].push((
                        ts,
                        spatial_lp(
                            &nodes
                                .iter()
                                .map(|&i| dd.comp(0)[i].abs())
                                .collect::<Vec<_>>(),
                            m_exp,
                            vol,
                        ),
                    ));
                }
                FVariant::Cylinder => {
                    sc.extra[0].push((
                        ts,
                        spatial_lp(
                            &node_values(pi_snap, &grid, &sc.cyl, &sc.region, tilde_mean),
                            pp,
                            vol,
                        ),
                    ));
                }
            }
        }
    }

    let sqrt_eps = params.eps.sqrt();
    let delta_w = params.delta.powf(lit::<T>(-1.5));
    let kappa_conj = conj.kappa_float::<T>();
    let mut entries = Vec::new();
    for sc in &per_scale {
        let r = sc.cyl.radius;
        let w = sc.cyl.window();
        let a_val = window_max(&sc.a, w.0, w.1) / r;
        let e_val = integrate_window(&sc.e, w.0, w.1, |v| v) / r;
        let lq = |samples: &[(T, T)], q: T| -> T {
            if q.is_infinite() {
                window_max(samples, w.0, w.1)
            } else {
                integrate_window(samples, w.0, w.1, |s| s.powf(q)).powf(one / q)
            }
        };
        let mut terms = vec![("A".to_string(), a_val), ("E".to_string(), e_val)];
        match params.variant {
            FVariant::Case1 => {
                let g1_ghp = r.powf(lit::<T>(3.0) - kappa_conj) * lq(&sc.extra[0], qp);
                let ht1 = r.powf(lit::<T>(2.0) - lit::<T>(2.5)) * lq(&sc.extra[1], two);
                let ht3 = r.powf(lit::<T>(2.0) - lit::<T>(2.5)) * lq(&sc.extra[2], two);
                let mn = ExponentPair::new(
                    pq.p.scaled_conjugate_map(2, 2)?,
                    pq.q.scaled_conjugate_map(2, 2)?,
                )?;
                let g1_d3pi4 = r.powf(lit::<T>(3.0) - mn.kappa_float::<T>())
                    * lq(&sc.extra[3], mn.q.to_float());
                terms.push(("eps^(1/2)*G1(gradh pi)".into(), sqrt_eps * g1_ghp));
                terms.push((
                    "delta^(-3/2)*(Ht(pi1)^2+Ht(pi3)^2+G1(d3pi4)^2)".into(),
                    delta_w * (ht1 * ht1 + ht3 * ht3 + g1_d3pi4 * g1_d3pi4),
                ));
            }
            FVariant::Thm35 => {
                let ht_pi = r.powf(lit::<T>(2.0) - kappa_conj) * lq(&sc.extra[0], qp);
                let mn = ExponentPair::new(
                    pq.p.scaled_conjugate_map(2, 1)?,
                    pq.q.scaled_conjugate_map(2, 1)?,
                )?;
                let g1_d3pi = r.powf(lit::<T>(3.0) - mn.kappa_float::<T>())
                    * lq(&sc.extra[1], mn.q.to_float());
                terms.push(("eps^(1/2)*Ht(pi)".into(), sqrt_eps * ht_pi));
                terms.push(("delta^(-3/2)*G1(d3pi)^2".into(), delta_w * g1_d3pi * g1_d3pi));
            }
            FVariant::Cylinder => {
                let ht_pi = r.powf(lit::<T>(2.0) - kappa_conj) * lq(&sc.extra[0], qp);
                terms.push(("eps^(1/2)*Ht(pi)".into(), sqrt_eps * ht_pi));
            }
        }
        let f_value = terms.iter().map(|t| t.1).fold(T::zero(), |a, b| a + b);
        entries.push(DecayEntry {
            r,
            f_value,
            terms,
            below_floor: sc.below,
        });
    }

    let stride = if params.variant == FVariant::Cylinder {
        2
    } else {
        1
    };
    let mut halving = Vec::new();
    for i in 0..entries.len().saturating_sub(stride) {
        let outer = &entries[i];
        let inner = &entries[i + stride];
        let degenerate = outer.f_value == T::zero();
        halving.push(HalvingVerdict {
            r_outer: outer.r,
            r_inner: inner.r,
            f_outer: outer.f_value,
            f_inner: inner.f_value,
            halved: degenerate || inner.f_value <= outer.f_value / two,
            degenerate,
        });
    }
    Ok(DecayTrace {
        variant: params.variant,
        entries,
        halving,
    })
}

/// Verdict of a criterion evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome of an epsilon-regularity or theorem-hypothesis evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionVerdict<T> {
    pub criterion: String,
    pub p: String,
    pub q: String,
    pub scales: Vec<T>,
    pub values: Vec<T>,
    /// Max over the finest three resolvable scales (the limsup proxy).
    pub measured: T,
    pub threshold: T,
    pub verdict: Verdict,
    pub margin: T,
    pub resolution_floor: T,
    pub below_floor: Vec<bool>,
}

impl<T: Scalar> CriterionVerdict<T> {
    fn assemble(
        criterion: &str,
        pq: &ExponentPair,
        scales: Vec<T>,
        values: Vec<T>,
        below: Vec<bool>,
        threshold: T,
        floor: T,
    ) -> Self {
        // Finest three resolvable scales (ladder is descending).
        let resolved: Vec<T> = values
            .iter()
            .zip(&below)
            .filter(|(_, b)| !**b)
            .map(|(v, _)| *v)
            .collect();
        let finest: Vec<T> = resolved.iter().rev().take(3).copied().collect();
        let measured = finest.iter().fold(T::zero(), |a, &b| a.max(b));
        let any_below = below.iter().any(|&b| b);
        let violated = values
            .iter()
            .zip(&below)
            .any(|(v, b)| !*b && *v > threshold);
        let verdict = if violated {
            Verdict::Violated
        } else if any_below || resolved.is_empty() {
            Verdict::Inconclusive
        } else {
            Verdict::Satisfied
        };
        CriterionVerdict {
            criterion: criterion.into(),
            p: pq.p.to_string(),
            q: pq.q.to_string(),
            scales,
            values,
            measured,
            threshold,
            verdict,
            margin: threshold - measured,
            resolution_floor: floor,
            below_floor: below,
        }
    }
}

/// Which smallness quantity the epsilon-regularity check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsMode {
    Velocity,
    Vorticity,
}

/// The small-energy regularity criterion: r^{1-kappa} ||u|| (velocity,
/// 1 <= kappa <= 2) or r^{2-kappa} ||curl u|| (vorticity, 2 <= kappa <= 3,
/// (p,q) != (1, inf)) against eps1 at every ladder scale.
pub fn eps_regularity<T: Scalar>(
    field: &SpaceTimeField<T>,
    mode: EpsMode,
    pq: &ExponentPair,
    x0: [T; 3],
    t0: T,
    params: &IterationParams<T>,
) -> Result<CriterionVerdict<T>> {
    let kappa = pq.kappa();
    match mode {
        EpsMode::Velocity => {
            if kappa < Ratio::from_integer(1) || kappa > Ratio::from_integer(2) {
                return Err(Error::InvalidParam(format!(
                    "velocity mode needs 1 <= 3/p + 2/q <= 2, got {kappa}"
                )));
            }
        }
        EpsMode::Vorticity => {
            if kappa < Ratio::from_integer(2) || kappa > Ratio::from_integer(3) {
                return Err(Error::InvalidParam(format!(
                    "vorticity mode needs 2 <= 3/p + 2/q <= 3, got {kappa}"
                )));
            }
            if pq.p.rat() == Some(Ratio::from_integer(1)) && pq.q.is_infinite() {
                return Err(Error::InvalidParam(
                    "(p, q) = (1, inf) is excluded in vorticity mode".into(),
                ));
            }
        }
    }
    if field.kind() != FieldKind::Velocity {
        return Err(Error::Incompatible("criterion expects a velocity field".into()));
    }
    let source;
    let (work, kind): (&SpaceTimeField<T>, QuantityKind) = match mode {
        EpsMode::Velocity => (field, QuantityKind::G),
        EpsMode::Vorticity => {
            let sb = SpectralBox::new(field.grid());
            let snaps = field
                .snapshots()
                .iter()
                .map(|s| sb.differential_op(s, DiffOp::Curl))
                .collect::<Result<Vec<_>>>()?;
            source = SpaceTimeField::new(FieldKind::Vorticity, snaps)?;
            (&source, QuantityKind::H)
        }
    };
    let grid = field.grid();
    let floor = CylinderSpec::floor(&grid);
    let mut values = Vec::new();
    let mut below = Vec::new();
    for &r in &params.scales {
        let cyl = CylinderSpec::new(x0, t0, r, Geometry::Ball)?;
        let (v, b) = quantity_for_any_kind(kind, work, pq, &cyl)?;
        values.push(v);
        below.push(b);
    }
    Ok(CriterionVerdict::assemble(
        match mode {
            EpsMode::Velocity => "eps_regularity_velocity",
            EpsMode::Vorticity => "eps_regularity_vorticity",
        },
        pq,
        params.scales.clone(),
        values,
        below,
        params.eps1,
        floor,
    ))
}

/// `quantity_flagged` without the velocity-kind restriction of A/E (G and
/// H apply to any field).
fn quantity_for_any_kind<T: Scalar>(
    kind: QuantityKind,
    f: &SpaceTimeField<T>,
    pq: &ExponentPair,
    cyl: &CylinderSpec<T>,
) -> Result<(T, bool)> {
    quantity_flagged(kind, f, pq, cyl, MeanMode::None, true)
}

/// Hypothesis tests of the two-component theorems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremCriterion {
    T11Case1,
    T11Case2,
    T11Case3,
    T12,
}

impl TheoremCriterion {
    pub fn name(&self) -> &'static str {
        match self {
            TheoremCriterion::T11Case1 => "thm1.1_case1",
            TheoremCriterion::T11Case2 => "thm1.1_case2",
            TheoremCriterion::T11Case3 => "thm1.1_case3",
            TheoremCriterion::T12 => "thm1.2",
        }
    }
}

/// Exact exponent admissibility of a theorem hypothesis, exposed so
/// front ends can reject bad pairs before loading any data.
pub fn validate_criterion_exponents(criterion: TheoremCriterion, pq: &ExponentPair) -> Result<()> {
    let kappa = pq.kappa();
    let q_rat = pq.q.rat();
    let fail = |msg: String| Err(Error::InvalidParam(msg));
    match criterion {
        TheoremCriterion::T11Case1 => {
            if kappa != Ratio::from_integer(1) {
                return fail(format!(
                    "case 1 needs 3/p + 2/q = 1 exactly, got {kappa} for {pq}"
                ));
            }
            match q_rat {
                Some(q) if q > Ratio::from_integer(2) => Ok(()),
                _ => fail(format!("case 1 needs 2 < q < infinity, got q = {}", pq.q)),
            }
        }
        TheoremCriterion::T11Case2 => {
            if kappa != Ratio::from_integer(2) {
                return fail(format!("case 2 needs 3/p + 2/q = 2, got {kappa}"));
            }
            match q_rat {
                Some(q) if q > Ratio::from_integer(2) => Ok(()),
                _ => fail(format!("case 2 needs 2 < q < infinity, got q = {}", pq.q)),
            }
        }
        TheoremCriterion::T11Case3 => {
            if kappa != Ratio::from_integer(2) {
                return fail(format!("case 3 needs 3/p + 2/q = 2, got {kappa}"));
            }
            match q_rat {
                Some(q) if q > Ratio::from_integer(1) && q <= Ratio::from_integer(2) => Ok(()),
                _ => fail(format!("case 3 needs 1 < q <= 2, got q = {}", pq.q)),
            }
        }
        TheoremCriterion::T12 => {
            if kappa < Ratio::from_integer(1) || kappa > Ratio::from_integer(2) {
                return fail(format!("theorem 1.2 needs 1 <= 3/p + 2/q <= 2, got {kappa}"));
            }
            match pq.p.rat() {
                None => {}
                Some(p) if p >= Ratio::new(3, 2) => {}
                _ => return fail(format!("theorem 1.2 needs p >= 3/2, got p = {}", pq.p)),
            }
            if pq.p.is_infinite() && q_rat == Some(Ratio::from_integer(1)) {
                return fail("theorem 1.2 excludes (p, q) = (infinity, 1)".into());
            }
            Ok(())
        }
    }
}

/// Evaluate a theorem hypothesis on a velocity field: the decaying-scale
/// sweep of the case's quantity (G(u_h) or H(grad u_h)), with the finest
/// three resolvable scales as the limsup proxy.
pub fn evaluate_criterion<T: Scalar>(
    field: &SpaceTimeField<T>,
    criterion: TheoremCriterion,
    pq: &ExponentPair,
    r0: T,
    x0: [T; 3],
    t0: T,
    params: &IterationParams<T>,
) -> Result<CriterionVerdict<T>> {
    validate_criterion_exponents(criterion, pq)?;
    if field.kind() != FieldKind::Velocity {
        return Err(Error::Incompatible("criterion expects a velocity field".into()));
    }
    let grid = field.grid();
    let geometry = if criterion == TheoremCriterion::T12 {
        Geometry::Vertical
    } else {
        Geometry::Ball
    };
    // The hypothesis lives on Q_{r0}: the examined ladder is capped there.
    let scales: Vec<T> = params.scales.iter().copied().filter(|&s| s <= r0).collect();
    if scales.is_empty() {
        return Err(Error::InvalidParam(
            "no ladder scales at or below r0".into(),
        ));
    }

    // Carrier fields: u_h padded to a 3-component snapshot, |grad u_h| as
    // a scalar field for the gradient cases.
    let uh_field = {
        let snaps = field
            .snapshots()
            .iter()
            .map(|s| {
                Snapshot::new(
                    grid,
                    s.time(),
                    vec![
                        s.comp(0).to_vec(),
                        s.comp(1).to_vec(),
                        vec![T::zero(); grid.len()],
                    ],
                )
            })
            .collect::<Result<Vec<_>>>()?;
        SpaceTimeField::new(FieldKind::Velocity, snaps)?
    };
    let use_grad = matches!(criterion, TheoremCriterion::T11Case2);
    let grad_field = if use_grad {
        let sb = SpectralBox::new(grid);
        let snaps = field
            .snapshots()
            .iter()
            .map(|s| {
                let mut acc = vec![T::zero(); grid.len()];
                for b in 0..2 {
                    for a in 0..3 {
                        let d = sb.derivative_real(s.comp(b), a);
                        for (o, v) in acc.iter_mut().zip(d) {
                            *o += v * v;
                        }
                    }
                }
                let mag: Vec<T> = acc.into_iter().map(|v| v.sqrt()).collect();
                Snapshot::new(grid, s.time(), vec![mag])
            })
            .collect::<Result<Vec<_>>>()?;
        Some(SpaceTimeField::new(FieldKind::Scalar, snaps)?)
    } else {
        None
    };

    let kind = if use_grad {
        QuantityKind::H
    } else {
        QuantityKind::G
    };
    let work: &SpaceTimeField<T> = grad_field.as_ref().unwrap_or(&uh_field);
    let mut values = Vec::new();
    let mut below = Vec::new();
    for &r in &scales {
        let cyl = CylinderSpec::new(x0, t0, r, geometry)?;
        let (v, b) = quantity_for_any_kind(kind, work, pq, &cyl)?;
        values.push(v);
        below.push(b);
    }
    Ok(CriterionVerdict::assemble(
        criterion.name(),
        pq,
        scales,
        values,
        below,
        params.eps1,
        CylinderSpec::floor(&grid),
    ))
}

// ---------------------------------------------------------------------
// Run report.
// ---------------------------------------------------------------------

/// Provenance attached to every emitted number.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub field_id: String,
    pub grid_n: usize,
    pub box_length: f64,
    pub params_hash: String,
}

/// FNV-1a of the canonical parameter string.
pub fn params_hash(canonical: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in canonical.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Aggregated run output with deterministic serialization.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport<T> {
    pub provenance: Provenance,
    pub verdicts: Vec<CriterionVerdict<T>>,
    pub traces: Vec<DecayTrace<T>>,
    pub checks: Vec<InequalityCheck<T>>,
}

impl<T: Scalar> RunReport<T> {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            provenance,
            verdicts: Vec::new(),
            traces: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// verdicts.csv: criterion,p,q,scale,value,threshold,verdict,margin
    /// plus the provenance columns (field id, grid, parameter hash).
    pub fn verdicts_csv(&self) -> String {
        let mut out =
            String::from("criterion,p,q,scale,value,threshold,verdict,margin,field_id,grid_n,params_hash\n");
        for v in &self.verdicts {
            for (s, val) in v.scales.iter().zip(&v.values) {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    v.criterion,
                    v.p,
                    v.q,
                    s,
                    val,
                    v.threshold,
                    v.verdict.name(),
                    v.margin,
                    self.provenance.field_id,
                    self.provenance.grid_n,
                    self.provenance.params_hash,
                ));
            }
        }
        out
    }

    pub fn traces_csv(&self) -> String {
        let mut out = String::new();
        for t in &self.traces {
            out.push_str(&t.to_csv());
        }
        out
    }

    pub fn checks_csv(&self) -> String {
        crate::inequalities::checks_to_csv(&self.checks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_field, FlowParams, GenKind};
    use crate::grid::Grid3;
    use crate::pressure::pressure_field;

    fn tg_setup(
        n: usize,
    ) -> (
        SpaceTimeField<f64>,
        SpaceTimeField<f64>,
        [f64; 3],
        f64,
    ) {
        let grid = Grid3::two_pi(n).unwrap();
        let params = FlowParams::new(1.0, 0.3, 0.05, 1.0).unwrap();
        let u = generate_field(GenKind::TaylorGreen2d, &params, grid).unwrap();
        let sb = SpectralBox::new(grid);
        let pi = pressure_field(&sb, &u).unwrap();
        let c = std::f64::consts::PI;
        (u, pi, [c, c, c], 0.3)
    }

    #[test]
    fn params_validation() {
        let pq = ExponentPair::ints(9, 3).unwrap();
        assert!(IterationParams::<f64>::defaults(vec![0.5, 0.2, 0.1], FVariant::Case1, pq).is_ok());
        // theta >= 1/8 rejected
        assert!(IterationParams::new(
            0.2,
            1e-2,
            1e-2,
            0.05,
            vec![0.5, 0.2, 0.1],
            FVariant::Case1,
            pq
        )
        .is_err());
        // ascending ladder rejected
        assert!(
            IterationParams::<f64>::defaults(vec![0.1, 0.2, 0.5], FVariant::Case1, pq).is_err()
        );
        // wrong kappa for the variant
        let pq2 = ExponentPair::ints(3, 4).unwrap();
        assert!(
            IterationParams::<f64>::defaults(vec![0.5, 0.2, 0.1], FVariant::Case1, pq2).is_err()
        );
    }

    #[test]
    fn zero_field_trace_is_degenerate_and_halved() {
        let grid = Grid3::two_pi(16).unwrap();
        let params = FlowParams::new(1.0, 10.0, 1.0, 0.0).unwrap();
        let u = generate_field(GenKind::Zero, &params, grid).unwrap();
        let sb = SpectralBox::new(grid);
        let pi = pressure_field(&sb, &u).unwrap();
        let pq = ExponentPair::ints(9, 3).unwrap();
        let c = std::f64::consts::PI;
        let it = IterationParams::defaults(vec![2.0, 1.5, 1.0], FVariant::Case1, pq).unwrap();
        let trace = decay_trace(&u, &pi, &it, [c, c, c], 10.0).unwrap();
        assert_eq!(trace.entries.len(), 3);
        for e in &trace.entries {
            assert_eq!(e.f_value, 0.0);
        }
        for h in &trace.halving {
            assert!(h.halved);
            assert!(h.degenerate);
        }
    }

    #[test]
    fn trace_breakdown_sums_to_f() {
        let (u, pi, c, t0) = tg_setup(32);
        let pq = ExponentPair::ints(9, 3).unwrap();
        let it = IterationParams::defaults(vec![0.5, 0.4, 0.3], FVariant::Case1, pq).unwrap();
        let trace = decay_trace(&u, &pi, &it, c, t0).unwrap();
        for e in &trace.entries {
            let sum: f64 = e.terms.iter().map(|t| t.1).sum();
            assert!((sum - e.f_value).abs() <= 1e-12 * e.f_value.max(1e-300));
        }
    }

    #[test]
    fn trace_requires_three_scales() {
        let (u, pi, c, t0) = tg_setup(16);
        let pq = ExponentPair::ints(9, 3).unwrap();
        let it = IterationParams::defaults(vec![0.5, 0.25], FVariant::Case1, pq).unwrap();
        assert!(decay_trace(&u, &pi, &it, c, t0).is_err());
    }

    #[test]
    fn exponent_validation_is_exact() {
        let (u, _, c, t0) = tg_setup(16);
        let it = IterationParams::defaults(
            vec![0.5, 0.45, 0.4],
            FVariant::Case1,
            ExponentPair::ints(9, 3).unwrap(),
        )
        .unwrap();
        // (9, 3) accepted for case 1.
        assert!(evaluate_criterion(
            &u,
            TheoremCriterion::T11Case1,
            &ExponentPair::ints(9, 3).unwrap(),
            1.0,
            c,
            t0,
            &it
        )
        .is_ok());
        // (3, 3) rejected: 3/3 + 2/3 != 1.
        let err = evaluate_criterion(
            &u,
            TheoremCriterion::T11Case1,
            &ExponentPair::ints(3, 3).unwrap(),
            1.0,
            c,
            t0,
            &it,
        )
        .unwrap_err();
        assert!(err.to_string().contains("3/p + 2/q = 1"));
    }

    #[test]
    fn axis_heat_satisfies_all_criteria_with_zero_value() {
        let grid = Grid3::two_pi(32).unwrap();
        let params = FlowParams::new(1.0, 6.0, 0.5, 1.0).unwrap();
        let u = generate_field(GenKind::AxisHeat, &params, grid).unwrap();
        let c = std::f64::consts::PI;
        // All scales at or above the 8h floor (pi/2 at 32^3).
        let scales = vec![2.4, 2.0, 1.7];
        for (criterion, pq) in [
            (TheoremCriterion::T11Case1, ExponentPair::ints(9, 3).unwrap()),
            (TheoremCriterion::T11Case2, ExponentPair::ints(2, 4).unwrap()),
            (TheoremCriterion::T11Case3, ExponentPair::ints(3, 2).unwrap()),
            (TheoremCriterion::T12, ExponentPair::ints(2, 4).unwrap()),
        ] {
            let it = IterationParams::defaults(
                scales.clone(),
                FVariant::Cylinder,
                ExponentPair::ints(2, 4).unwrap(),
            )
            .unwrap();
            let v = evaluate_criterion(&u, criterion, &pq, 2.4, [c, c, c], 6.0, &it).unwrap();
            assert_eq!(v.verdict, Verdict::Satisfied, "{criterion:?}");
            assert_eq!(v.measured, 0.0, "{criterion:?}");
        }
    }

    #[test]
    fn eps_regularity_mode_ranges() {
        let (u, _, c, t0) = tg_setup(16);
        let it = IterationParams::defaults(
            vec![1.0, 0.9, 0.8],
            FVariant::Case1,
            ExponentPair::ints(9, 3).unwrap(),
        )
        .unwrap();
        // kappa = 5/2 > 2 invalid for velocity mode.
        let bad = ExponentPair::ints(2, 2).unwrap();
        assert!(eps_regularity(&u, EpsMode::Velocity, &bad, c, t0, &it).is_err());
        // (1, inf) excluded in vorticity mode.
        let pq = ExponentPair::new(
            crate::exponents::Exp::int(1).unwrap(),
            crate::exponents::Exp::Inf,
        )
        .unwrap();
        assert!(eps_regularity(&u, EpsMode::Vorticity, &pq, c, t0, &it).is_err());
    }

    #[test]
    fn report_is_deterministic() {
        let prov = Provenance {
            field_id: "test".into(),
            grid_n: 16,
            box_length: 1.0,
            params_hash: params_hash("abc"),
        };
        let r1: RunReport<f64> = RunReport::new(prov.clone());
        let r2: RunReport<f64> = RunReport::new(prov);
        assert_eq!(r1.to_json(), r2.to_json());
        assert_eq!(params_hash("x"), params_hash("x"));
        assert_ne!(params_hash("x"), params_hash("y"));
    }
}
