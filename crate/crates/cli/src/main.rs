//! `nsreg`: generate and evolve periodic flow fields, compute the
//! scale-invariant quantities, verify the lemma-level inequalities, and
//! evaluate the regularity criteria.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical failure. Every
//! failure prints one machine-parsable line to stderr:
//! `error: class=<validation|numerical> reason=<...>`.

use clap::{Args, Parser, Subcommand};
use nsreg_core::criteria::{
    decay_trace, evaluate_criterion, params_hash, validate_criterion_exponents, CriterionVerdict,
    FVariant, IterationParams, Provenance, RunReport, TheoremCriterion,
};
use nsreg_core::cylinder::Geometry;
use nsreg_core::error::Error;
use nsreg_core::exponents::{Exp, ExponentPair};
use nsreg_core::field::FieldKind;
use nsreg_core::generate::{generate_field, random_divergence_free, FlowParams, GenKind};
use nsreg_core::grid::Grid3;
use nsreg_core::harmonic::{harmonic_library, parse_degree_filter};
use nsreg_core::inequalities::{
    check_cylinder_interpolation, check_embedding, check_energy_bound, check_global_bounds,
    check_harmonic_lemma, check_interpolation, check_pressure_decay, check_poincare_reduction,
    checks_to_csv, cz_ratio, local_energy_residual, DecayVariant, EnergyVariant, InequalityCheck,
    InterpGeometry,
};
use nsreg_core::io::{load_field, persist_field};
use nsreg_core::pressure::{decompose_cutoff, decompose_sec3, pressure_field, CutoffMode, CutoffSource};
use nsreg_core::quantities::{quantity_sweep, MeanMode, QuantityKind};
use nsreg_core::spectral::SpectralBox;
use nsreg_core::{Field64, Result};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "nsreg", about = "Interior-regularity diagnostics on periodic flow fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic velocity field and write it to disk.
    Generate(GenerateArgs),
    /// Integrate the momentum system from a field or generator.
    Evolve(EvolveArgs),
    /// Sweep scale-invariant quantities over a ladder of scales.
    Quantities(QuantitiesArgs),
    /// Solve and decompose the pressure of a velocity field.
    Pressure(PressureArgs),
    /// Run an inequality suite by lemma name.
    Verify(VerifyArgs),
    /// Evaluate a regularity criterion.
    Criteria(CriteriaArgs),
    /// Trace the decay functional F over a scale ladder.
    Trace(TraceArgs),
    /// Aggregate verdicts / traces / checks JSON files into one report.
    Report(ReportArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Nodes per axis.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Box side length (2*pi by default).
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    box_length: f64,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// zero|constant|shear|taylor_green_2d|abc|axis_heat|rigid_strain|scaled_profile|random
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    viscosity: f64,
    /// Final sampled time.
    #[arg(long, default_value_t = 0.1)]
    t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Seed for kind=random.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Band limit for kind=random.
    #[arg(long, default_value_t = 5)]
    max_mode: i64,
    /// Output directory for the field.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvolveArgs {
    /// Input velocity field directory (initial state = first snapshot).
    #[arg(long)]
    field: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    viscosity: f64,
    #[arg(long)]
    t_end: f64,
    #[arg(long)]
    dt: f64,
    /// Keep every k-th step.
    #[arg(long, default_value_t = 1)]
    save_every: usize,
    /// Disable the 2/3-rule dealiasing.
    #[arg(long)]
    no_dealias: bool,
    /// Output directory (velocity under u/, pressure under pi/).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LadderArgs {
    /// Largest scale of the ladder.
    #[arg(long)]
    r0: f64,
    /// Ladder ratio between consecutive scales.
    #[arg(long = "ladder-ratio", default_value_t = 0.5)]
    ratio: f64,
    /// Number of ladder scales.
    #[arg(long, default_value_t = 3)]
    count: usize,
}

#[derive(Args)]
struct QuantitiesArgs {
    #[arg(long)]
    field: PathBuf,
    /// Comma-separated kinds: A,E,G,H,Gtilde,Htilde,G1
    #[arg(long, default_value = "A,E,G,H,G1")]
    kinds: String,
    #[arg(short, long, default_value = "2")]
    p: String,
    #[arg(short, long, default_value = "2")]
    q: String,
    #[command(flatten)]
    ladder: LadderArgs,
    /// Evaluation center "x1,x2,x3" or "center".
    #[arg(long, default_value = "center")]
    x0: String,
    /// Evaluation time (default: final sample).
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long, default_value = "ball")]
    geometry: String,
    /// none|ball|disc mean mode of the tilde kinds.
    #[arg(long, default_value = "none")]
    mean: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PressureArgs {
    #[arg(long)]
    field: PathBuf,
    /// Snapshot index to decompose (default: first).
    #[arg(long, default_value_t = 0)]
    snapshot: usize,
    /// Also split with a cutoff at this scale.
    #[arg(long)]
    cutoff_rho: Option<f64>,
    /// ball|horizontal
    #[arg(long, default_value = "ball")]
    cutoff_mode: String,
    /// pi1_terms|full_pi|gradh_pi|d3pi4_terms
    #[arg(long, default_value = "full_pi")]
    source: String,
    #[arg(long, default_value = "center")]
    x0: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// 3.1|3.2|3.3|3.4|3.6|3.7|4.1|4.2|4.3|4.4|sobolev|local-energy|poincare|cz
    #[arg(long)]
    lemma: String,
    /// Harmonic family filter for lemma 4.3, e.g. "degree<=4".
    #[arg(long)]
    family: Option<String>,
    /// Optional velocity field directory (default: built-in corpus).
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(short, long, default_value = "9")]
    p: String,
    #[arg(short, long, default_value = "3")]
    q: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CriteriaArgs {
    /// 1.1 or 1.2
    #[arg(long)]
    theorem: String,
    /// Case of theorem 1.1 (1, 2 or 3).
    #[arg(long)]
    case: Option<u32>,
    #[arg(short, long)]
    p: String,
    #[arg(short, long)]
    q: String,
    #[arg(long)]
    field: PathBuf,
    #[command(flatten)]
    ladder: LadderArgs,
    #[arg(long, default_value_t = 1.0 / 16.0)]
    theta: f64,
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    eps1: f64,
    #[arg(long, default_value = "center")]
    x0: String,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    field: PathBuf,
    /// Pressure field directory (default: spectral solve from velocity).
    #[arg(long)]
    pressure: Option<PathBuf>,
    /// case1|thm35|cylinder
    #[arg(long, default_value = "case1")]
    variant: String,
    #[arg(short, long, default_value = "9")]
    p: String,
    #[arg(short, long, default_value = "3")]
    q: String,
    #[command(flatten)]
    ladder: LadderArgs,
    #[arg(long, default_value_t = 1.0 / 16.0)]
    theta: f64,
    #[arg(long, default_value_t = 1e-2)]
    delta: f64,
    #[arg(long, default_value_t = 1e-2)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    eps1: f64,
    #[arg(long, default_value = "center")]
    x0: String,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding *.verdicts.json / *.trace.json / *.checks.json.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::Quantities(a) => cmd_quantities(a),
        Command::Pressure(a) => cmd_pressure(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Criteria(a) => cmd_criteria(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Report(a) => cmd_report(a),
    };
    if let Err(e) = outcome {
        let class = if e.exit_class() == 2 {
            "numerical"
        } else {
            "validation"
        };
        eprintln!("error: class={class} reason={e}");
        std::process::exit(e.exit_class());
    }
}

fn parse_center(s: &str, grid: &Grid3<f64>) -> Result<[f64; 3]> {
    if s == "center" {
        let c = grid.box_length() / 2.0;
        return Ok([c, c, c]);
    }
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParam(format!("bad center '{s}'")));
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad center '{s}'")))?;
    }
    Ok(out)
}

fn parse_pq(p: &str, q: &str) -> Result<ExponentPair> {
    ExponentPair::new(p.parse::<Exp>()?, q.parse::<Exp>()?)
}

fn ladder(args: &LadderArgs) -> Result<Vec<f64>> {
    if args.count == 0 {
        return Err(Error::InvalidParam("ladder count must be positive".into()));
    }
    if !(args.ratio > 0.0 && args.ratio < 1.0) {
        return Err(Error::InvalidParam("ladder ratio must lie in (0, 1)".into()));
    }
    Ok((0..args.count)
        .map(|k| args.r0 * args.ratio.powi(k as i32))
        .collect())
}

fn write(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, content)?;
    Ok(())
}

fn load_velocity(path: &Path) -> Result<Field64> {
    let f = load_field::<f64>(path)?;
    if f.kind() != FieldKind::Velocity {
        return Err(Error::Incompatible(format!(
            "{} holds a {:?} field, expected velocity",
            path.display(),
            f.kind()
        )));
    }
    Ok(f)
}

fn pressure_for(u: &Field64, path: Option<&Path>) -> Result<Field64> {
    match path {
        Some(p) => {
            let f = load_field::<f64>(p)?;
            if f.kind() != FieldKind::Pressure {
                return Err(Error::Incompatible("expected a pressure field".into()));
            }
            Ok(f)
        }
        None => {
            let sb = SpectralBox::new(u.grid());
            pressure_field(&sb, u)
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let grid = Grid3::new(a.grid.n, a.grid.box_length)?;
    let params = {
        let mut p = FlowParams::new(a.viscosity, a.t_end, a.dt, a.amplitude)?;
        p.save_every = 1;
        p
    };
    let field = if a.kind == "random" {
        random_divergence_free(grid, &params, a.seed, a.max_mode)?
    } else {
        let kind: GenKind = a.kind.parse()?;
        generate_field(kind, &params, grid)?
    };
    persist_field(&field, &a.out)?;
    println!("generated kind={} n={} snapshots={}", a.kind, a.grid.n, field.len());
    Ok(())
}

fn cmd_evolve(a: EvolveArgs) -> Result<()> {
    let u0field = load_velocity(&a.field)?;
    let mut params = FlowParams::new(a.viscosity, a.t_end, a.dt, 1.0)?;
    params.save_every = a.save_every;
    params.dealias = !a.no_dealias;
    let (u, pi) = nsreg_core::evolve::ns_evolve(u0field.snapshot(0), &params)?;
    persist_field(&u, &a.out.join("u"))?;
    persist_field(&pi, &a.out.join("pi"))?;
    println!(
        "evolved steps={} saved={} final_time={}",
        params.n_steps(),
        u.len(),
        u.end_time()
    );
    Ok(())
}

fn cmd_quantities(a: QuantitiesArgs) -> Result<()> {
    let field = load_field::<f64>(&a.field)?;
    let grid = field.grid();
    let pq = parse_pq(&a.p, &a.q)?;
    let kinds = a
        .kinds
        .split(',')
        .map(|s| s.trim().parse::<QuantityKind>())
        .collect::<Result<Vec<_>>>()?;
    let geometry = match a.geometry.as_str() {
        "ball" => Geometry::Ball,
        "vertical" => Geometry::Vertical,
        other => {
            return Err(Error::InvalidParam(format!(
                "geometry must be ball or vertical, got '{other}'"
            )))
        }
    };
    let mean = match a.mean.as_str() {
        "none" => MeanMode::None,
        "ball" => MeanMode::BallMean,
        "disc" => MeanMode::DiscMean,
        other => {
            return Err(Error::InvalidParam(format!(
                "mean must be none, ball or disc, got '{other}'"
            )))
        }
    };
    let x0 = parse_center(&a.x0, &grid)?;
    let t0 = a.t0.unwrap_or_else(|| field.end_time());
    let scales = ladder(&a.ladder)?;
    let field_id = a.field.display().to_string();
    let report = quantity_sweep(
        &kinds, &field, &pq, x0, t0, &scales, geometry, mean, &field_id,
    )?;
    write(&a.out.join("quantities.csv"), &report.to_csv())?;
    write(&a.out.join("quantities.json"), &report.to_json())?;
    println!("quantities entries={}", report.entries.len());
    Ok(())
}

fn cmd_pressure(a: PressureArgs) -> Result<()> {
    let u = load_velocity(&a.field)?;
    if a.snapshot >= u.len() {
        return Err(Error::InvalidParam(format!(
            "snapshot {} out of range (field has {})",
            a.snapshot,
            u.len()
        )));
    }
    let grid = u.grid();
    let sb = SpectralBox::new(grid);
    let snap = u.snapshot(a.snapshot);
    let dec = decompose_sec3(&sb, snap)?;
    dec.persist(&a.out)?;
    if let Some(rho) = a.cutoff_rho {
        let mode = match a.cutoff_mode.as_str() {
            "ball" => CutoffMode::Ball,
            "horizontal" => CutoffMode::Horizontal,
            other => {
                return Err(Error::InvalidParam(format!(
                    "cutoff mode must be ball or horizontal, got '{other}'"
                )))
            }
        };
        let source = match a.source.as_str() {
            "pi1_terms" => CutoffSource::Pi1Terms,
            "full_pi" => CutoffSource::FullPi,
            "gradh_pi" => CutoffSource::GradhPi,
            "d3pi4_terms" => CutoffSource::D3pi4Terms,
            other => {
                return Err(Error::InvalidParam(format!(
                    "unknown cutoff source '{other}'"
                )))
            }
        };
        let x0 = parse_center(&a.x0, &grid)?;
        let split = decompose_cutoff(&sb, source, snap, x0, rho, mode)?;
        for (name, snapshot) in [
            ("tilde_pi1", &split.tilde_pi1),
            ("tilde_pi2", &split.tilde_pi2),
        ] {
            let kindwrap = nsreg_core::field::SpaceTimeField::single(
                if snapshot.n_comps() == 1 {
                    FieldKind::Scalar
                } else {
                    FieldKind::Velocity
                },
                snapshot.clone(),
            );
            // Multi-component splits (gradh_pi) persist componentwise.
            match kindwrap {
                Ok(f) if snapshot.n_comps() == 1 => {
                    nsreg_core::io::persist_field_named(&f, &a.out.join(name), Some(&[name]))?;
                }
                _ => {
                    for c in 0..snapshot.n_comps() {
                        let comp = nsreg_core::field::Snapshot::new(
                            grid,
                            snapshot.time(),
                            vec![snapshot.comp(c).to_vec()],
                        )?;
                        let f = nsreg_core::field::SpaceTimeField::single(FieldKind::Scalar, comp)?;
                        let label = format!("{name}_{}", c + 1);
                        nsreg_core::io::persist_field_named(
                            &f,
                            &a.out.join(&label),
                            Some(&[label.as_str()]),
                        )?;
                    }
                }
            }
        }
        println!(
            "pressure decomposed; cutoff split rho={rho} completeness={:.3e}",
            split.completeness_residual()
        );
    } else {
        println!("pressure decomposed (pi, pi1, pi2, pi3, d3pi4)");
    }
    Ok(())
}

/// Built-in corpus for the verify suites: analytic families plus seeded
/// random divergence-free samples on the unit box.
fn corpus(n: usize, span: f64, dt: f64) -> Result<Vec<(String, Field64)>> {
    let grid = Grid3::new(n, 1.0)?;
    let params = FlowParams::new(1.0, span, dt, 1.0)?;
    let mut out = Vec::new();
    for kind in [GenKind::TaylorGreen2d, GenKind::Abc, GenKind::AxisHeat] {
        out.push((
            kind.name().to_string(),
            generate_field(kind, &params, grid)?,
        ));
    }
    out.push((
        "random7".into(),
        random_divergence_free(grid, &params, 7, 5)?,
    ));
    out.push((
        "random11".into(),
        random_divergence_free(grid, &params, 11, 5)?,
    ));
    Ok(out)
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let pq = parse_pq(&a.p, &a.q)?;
    let mut checks: Vec<InequalityCheck<f64>> = Vec::new();
    let mut notes: Vec<String> = Vec::new();

    match a.lemma.as_str() {
        "4.3" => {
            let max_degree = match &a.family {
                Some(f) => parse_degree_filter(f)?,
                None => 6,
            };
            for sample in harmonic_library(max_degree, true) {
                let (c1, c2) = check_harmonic_lemma(&sample, 96)?;
                checks.push(c1);
                checks.push(c2);
            }
        }
        "sobolev" => {
            let fields = corpus(a.n, 0.05, 0.025)?;
            for (name, f) in &fields {
                for ell in [2.0, 3.0, 4.0, 6.0] {
                    let mut c =
                        check_interpolation(f.snapshot(0), ell, InterpGeometry::WholeBox)?;
                    c.meta = format!("{name} {}", c.meta);
                    checks.push(c);
                }
            }
        }
        "local-energy" => {
            // Exact families on the 2*pi box with the heat3 test function.
            let grid = Grid3::new(a.n, std::f64::consts::TAU)?;
            let params = FlowParams::new(1.0, 1.05, 1.05 / 32.0, 1.0)?;
            let c = std::f64::consts::PI;
            for kind in [GenKind::TaylorGreen2d, GenKind::AxisHeat] {
                let u = generate_field(kind, &params, grid)?;
                let sb = SpectralBox::new(grid);
                let pi = pressure_field(&sb, &u)?;
                let tf = nsreg_core::cutoff::build_test_function(
                    0.25,
                    1.0,
                    nsreg_core::cutoff::KernelKind::Heat3,
                    [c, c, c],
                    1.05,
                )?;
                let rep = local_energy_residual(&u, &pi, &tf, 1.05)?;
                notes.push(format!(
                    "{}: residual={:.6e} dissipation={:.6e} ratio={:.3e}",
                    kind.name(),
                    rep.residual,
                    rep.dissipation,
                    rep.residual.abs() / rep.dissipation
                ));
            }
        }
        "poincare" => {
            let fields = corpus(a.n, 0.27, 0.03)?;
            let pq2 = if pq.kappa_is(2, 1) {
                pq
            } else {
                ExponentPair::ints(2, 4)?
            };
            for (name, f) in &fields {
                let grid = f.grid();
                let c = grid.box_length() / 2.0;
                let h = grid.spacing();
                let (r, rho) = (16.0 * h, grid.box_length() / 2.0);
                let (c1, c2) = check_poincare_reduction(
                    f,
                    r,
                    rho,
                    &pq2,
                    [c, c, c],
                    f.end_time(),
                )?;
                for mut cc in [c1, c2] {
                    cc.meta = format!("{name} {}", cc.meta);
                    checks.push(cc);
                }
            }
        }
        "cz" => {
            let fields = corpus(a.n, 0.05, 0.025)?;
            for (name, f) in &fields {
                let grid = f.grid();
                let sb = SpectralBox::new(grid);
                let ctr = grid.box_length() / 2.0;
                for pprime in [1.5, 2.0, 3.0] {
                    let ratio = cz_ratio(
                        &sb,
                        f.snapshot(0),
                        [ctr, ctr, ctr],
                        0.4 * grid.box_length(),
                        pprime,
                    )?;
                    notes.push(format!("{name}: p'={pprime} ratio={ratio:.6}"));
                }
            }
        }
        lemma @ ("3.2" | "3.6" | "4.1") => {
            let variant = match lemma {
                "3.2" => EnergyVariant::Case1,
                "3.6" => EnergyVariant::Grad,
                _ => EnergyVariant::Cylinder,
            };
            let pq_use = match variant {
                EnergyVariant::Case1 => {
                    if pq.kappa_is(1, 1) {
                        pq
                    } else {
                        ExponentPair::ints(9, 3)?
                    }
                }
                _ => {
                    if pq.kappa_is(2, 1) {
                        pq
                    } else {
                        ExponentPair::ints(2, 4)?
                    }
                }
            };
            let fields = corpus(a.n, 0.27, 0.03)?;
            for (name, u) in &fields {
                let grid = u.grid();
                let sb = SpectralBox::new(grid);
                let pi = pressure_field(&sb, u)?;
                let c = grid.box_length() / 2.0;
                let (r, rho) = (grid.box_length() / 8.0, grid.box_length() / 2.0);
                let mut chk = check_energy_bound(
                    u,
                    &pi,
                    r,
                    rho,
                    &pq_use,
                    variant,
                    [c, c, c],
                    u.end_time(),
                )?;
                chk.meta = format!("{name} {}", chk.meta);
                checks.push(chk);
            }
        }
        lemma @ ("3.3" | "3.7" | "4.4") => {
            let variant = match lemma {
                "3.3" => DecayVariant::L33,
                "3.7" => DecayVariant::L37,
                _ => DecayVariant::L44,
            };
            let pq_use = match variant {
                DecayVariant::L33 => {
                    if pq.kappa_is(1, 1) {
                        pq
                    } else {
                        ExponentPair::ints(9, 3)?
                    }
                }
                _ => {
                    if pq.kappa_is(2, 1) {
                        pq
                    } else {
                        ExponentPair::ints(2, 4)?
                    }
                }
            };
            // 8r = rho with r at the floor needs n >= 128.
            let n = a.n.max(128);
            let fields = corpus(n, 0.27, 0.03)?;
            for (name, u) in &fields {
                let grid = u.grid();
                let sb = SpectralBox::new(grid);
                let pi = pressure_field(&sb, u)?;
                let c = grid.box_length() / 2.0;
                let rho = grid.box_length() / 2.0;
                let r = rho / 8.0;
                for mut chk in check_pressure_decay(
                    u,
                    &pi,
                    r,
                    rho,
                    &pq_use,
                    variant,
                    [c, c, c],
                    u.end_time(),
                )? {
                    chk.meta = format!("{name} {}", chk.meta);
                    checks.push(chk);
                }
            }
        }
        "3.4" => {
            let pq_use = if pq.kappa_is(1, 1) {
                pq
            } else {
                ExponentPair::ints(9, 3)?
            };
            let fields = corpus(a.n, 0.27, 0.03)?;
            for (name, u) in &fields {
                let grid = u.grid();
                let sb = SpectralBox::new(grid);
                let pi = pressure_field(&sb, u)?;
                let c = grid.box_length() / 2.0;
                for mut chk in check_global_bounds(
                    u,
                    &pi,
                    &pq_use,
                    grid.box_length() / 2.0,
                    [c, c, c],
                    u.end_time(),
                )? {
                    chk.meta = format!("{name} {}", chk.meta);
                    checks.push(chk);
                }
            }
        }
        "3.1" => {
            let fields = corpus(a.n, 0.27, 0.03)?;
            let ls = if pq.kappa_is(3, 2) {
                pq
            } else {
                ExponentPair::ints(3, 4)?
            };
            for (name, u) in &fields {
                let grid = u.grid();
                let c = grid.box_length() / 2.0;
                let cyl = nsreg_core::cylinder::CylinderSpec::new(
                    [c, c, c],
                    u.end_time(),
                    grid.box_length() / 2.0,
                    Geometry::Ball,
                )?;
                let mut chk = check_embedding(u, &ls, &cyl)?;
                chk.meta = format!("{name} {}", chk.meta);
                checks.push(chk);
            }
        }
        "4.2" => {
            let fields = corpus(a.n, 0.27, 0.03)?;
            let pq_use = if pq.kappa_is(2, 1) {
                pq
            } else {
                ExponentPair::ints(2, 4)?
            };
            for (name, u) in &fields {
                let grid = u.grid();
                let c = grid.box_length() / 2.0;
                let mut chk = check_cylinder_interpolation(
                    u,
                    &pq_use,
                    grid.box_length() / 4.0,
                    [c, c, c],
                    u.end_time(),
                )?;
                chk.meta = format!("{name} {}", chk.meta);
                checks.push(chk);
            }
        }
        other => {
            return Err(Error::InvalidParam(format!(
                "unknown lemma '{other}' (expected 3.1..4.4, sobolev, local-energy, poincare, cz)"
            )))
        }
    }

    // Every implied constant must be finite.
    for c in &checks {
        if let Some(k) = c.implied_constant {
            if !k.is_finite() {
                return Err(Error::Numerical {
                    step: 0,
                    context: format!("non-finite implied constant in {}", c.name),
                });
            }
        }
    }
    write(&a.out.join("checks.csv"), &checks_to_csv(&checks))?;
    write(
        &a.out.join("checks.json"),
        &serde_json::to_string_pretty(&checks).expect("serializes"),
    )?;
    if !notes.is_empty() {
        write(&a.out.join("notes.txt"), &(notes.join("\n") + "\n"))?;
    }
    println!("verify lemma={} checks={} notes={}", a.lemma, checks.len(), notes.len());
    Ok(())
}

fn cmd_criteria(a: CriteriaArgs) -> Result<()> {
    let pq = parse_pq(&a.p, &a.q)?;
    let criterion = match (a.theorem.as_str(), a.case) {
        ("1.1", Some(1)) => TheoremCriterion::T11Case1,
        ("1.1", Some(2)) => TheoremCriterion::T11Case2,
        ("1.1", Some(3)) => TheoremCriterion::T11Case3,
        ("1.1", None) => {
            return Err(Error::InvalidParam(
                "theorem 1.1 needs --case 1, 2 or 3".into(),
            ))
        }
        ("1.2", _) => TheoremCriterion::T12,
        (other, _) => {
            return Err(Error::InvalidParam(format!(
                "unknown theorem '{other}' (expected 1.1 or 1.2)"
            )))
        }
    };
    // Exponent admissibility is exact and checked before any data loads.
    validate_criterion_exponents(criterion, &pq)?;
    let u = load_velocity(&a.field)?;
    let grid = u.grid();
    let x0 = parse_center(&a.x0, &grid)?;
    let t0 = a.t0.unwrap_or_else(|| u.end_time());
    let scales = ladder(&a.ladder)?;
    let variant = if pq.kappa_is(1, 1) {
        FVariant::Case1
    } else {
        FVariant::Cylinder
    };
    let params = IterationParams::new(
        a.theta,
        a.delta,
        a.delta,
        a.eps1,
        scales,
        variant,
        if variant == FVariant::Case1 {
            pq
        } else {
            ExponentPair::ints(2, 4)?
        },
    )?;
    let verdict = evaluate_criterion(&u, criterion, &pq, a.ladder.r0, x0, t0, &params)?;
    let report = single_verdict_report(&a.field, &u, &verdict, "criteria");
    write(&a.out.join("verdicts.csv"), &report.verdicts_csv())?;
    write(&a.out.join("verdicts.json"), &report.to_json())?;
    println!(
        "criterion={} verdict={} measured={:.6e}",
        verdict.criterion,
        verdict.verdict.name(),
        verdict.measured
    );
    Ok(())
}

fn single_verdict_report(
    path: &Path,
    u: &Field64,
    verdict: &CriterionVerdict<f64>,
    tag: &str,
) -> RunReport<f64> {
    let prov = Provenance {
        field_id: path.display().to_string(),
        grid_n: u.grid().n(),
        box_length: u.grid().box_length(),
        params_hash: params_hash(&format!("{tag}:{}", verdict.criterion)),
    };
    let mut rep = RunReport::new(prov);
    rep.verdicts.push(verdict.clone());
    rep
}

fn cmd_trace(a: TraceArgs) -> Result<()> {
    let u = load_velocity(&a.field)?;
    let pi = pressure_for(&u, a.pressure.as_deref())?;
    let grid = u.grid();
    let pq = parse_pq(&a.p, &a.q)?;
    let variant = match a.variant.as_str() {
        "case1" => FVariant::Case1,
        "thm35" => FVariant::Thm35,
        "cylinder" => FVariant::Cylinder,
        other => {
            return Err(Error::InvalidParam(format!(
                "unknown variant '{other}' (case1|thm35|cylinder)"
            )))
        }
    };
    let scales = ladder(&a.ladder)?;
    let params = IterationParams::new(a.theta, a.delta, a.eps, a.eps1, scales, variant, pq)?;
    let x0 = parse_center(&a.x0, &grid)?;
    let t0 = a.t0.unwrap_or_else(|| u.end_time());
    let trace = decay_trace(&u, &pi, &params, x0, t0)?;
    write(&a.out.join("trace.csv"), &trace.to_csv())?;
    write(
        &a.out.join("trace.json"),
        &serde_json::to_string_pretty(&trace).expect("serializes"),
    )?;
    let halved = trace.halving.iter().filter(|h| h.halved).count();
    println!(
        "trace variant={} scales={} halved={}/{}",
        variant.name(),
        trace.entries.len(),
        halved,
        trace.halving.len()
    );
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let mut verdicts: Vec<serde_json::Value> = Vec::new();
    let mut traces: Vec<serde_json::Value> = Vec::new();
    let mut checks: Vec<serde_json::Value> = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(&a.dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("");
        if !name.ends_with(".json") {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Storage(format!("bad JSON in {name}: {e}")))?;
        if name.contains("verdict") {
            verdicts.push(value);
        } else if name.contains("trace") {
            traces.push(value);
        } else if name.contains("check") {
            checks.push(value);
        }
    }
    let doc = serde_json::json!({
        "verdicts": verdicts,
        "traces": traces,
        "checks": checks,
    });
    write(
        &a.out.join("report.json"),
        &serde_json::to_string_pretty(&doc).expect("serializes"),
    )?;
    println!(
        "report verdicts={} traces={} checks={}",
        doc["verdicts"].as_array().map(|v| v.len()).unwrap_or(0),
        doc["traces"].as_array().map(|v| v.len()).unwrap_or(0),
        doc["checks"].as_array().map(|v| v.len()).unwrap_or(0),
    );
    Ok(())
}
