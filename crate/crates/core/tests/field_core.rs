//! Integration tests of the field layer: exact-solution dynamics,
//! rescaling exactness, persistence.

mod common;

use nsreg_core::evolve::ns_evolve;
use nsreg_core::field::{FieldKind, Snapshot, SpaceTimeField};
use nsreg_core::generate::{generate_field, random_divergence_free, FlowParams, GenKind};
use nsreg_core::grid::Grid3;
use nsreg_core::io::{load_field, persist_field};
use nsreg_core::rescale::rescale_field;
use nsreg_core::spectral::SpectralBox;
use proptest::prelude::*;

fn l2_sq(s: &Snapshot<f64>) -> f64 {
    let grid = s.grid();
    let mut acc = 0.0;
    for c in s.comps() {
        for &v in c {
            acc += v * v;
        }
    }
    acc * grid.cell_volume()
}

#[test]
fn taylor_green_energy_decay_32() {
    // ||u(T)||^2 = e^{-4T} ||u0||^2 for the viscous Taylor-Green flow;
    // the acceptance suite runs the 64^3 / dt=1e-3 configuration.
    let grid = Grid3::<f64>::two_pi(32).unwrap();
    let mut params = FlowParams::new(1.0, 0.05, 5e-4, 1.0).unwrap();
    params.save_every = 20;
    let u0 = generate_field(GenKind::TaylorGreen2d, &params, grid)
        .unwrap()
        .snapshot(0)
        .clone();
    let (u, pi) = ns_evolve(&u0, &params).unwrap();
    let t = u.end_time();
    let e0 = l2_sq(u.snapshot(0));
    let et = l2_sq(u.snapshot(u.len() - 1));
    let expect = (-4.0 * t).exp() * e0;
    assert!(
        (et - expect).abs() / expect < 1e-9,
        "energy {et} vs {expect}"
    );
    // Emitted pressure matches the instantaneous closed form.
    let last = pi.snapshot(pi.len() - 1);
    let decay = (-4.0 * t).exp();
    let mut worst = 0.0f64;
    for idx in 0..grid.len() {
        let [x, y, _] = grid.node(idx);
        let exact = decay * ((2.0 * x).cos() + (2.0 * y).cos()) / 4.0;
        worst = worst.max((last.comp(0)[idx] - exact).abs());
    }
    assert!(worst < 1e-10, "pressure deviation {worst}");
}

#[test]
fn axis_heat_matches_heat_propagator() {
    let grid = Grid3::<f64>::two_pi(32).unwrap();
    let mut params = FlowParams::new(1.0, 0.05, 1e-3, 1.0).unwrap();
    params.save_every = 50;
    let u0 = generate_field(GenKind::AxisHeat, &params, grid)
        .unwrap()
        .snapshot(0)
        .clone();
    let (u, _) = ns_evolve(&u0, &params).unwrap();
    let sb = SpectralBox::new(grid);
    let last = u.snapshot(u.len() - 1);
    // Horizontal-Laplacian heat propagation of the initial state is the
    // exact solution of this degenerate family.
    let exact = sb.heat_propagate(&u0, 1.0, u.end_time(), true);
    let scale = exact.max_abs();
    for c in 0..3 {
        for (a, b) in last.comp(c).iter().zip(exact.comp(c)) {
            assert!((a - b).abs() <= 1e-8 * scale, "{a} vs {b}");
        }
    }
    // The horizontal components stay identically zero.
    assert!(last.comp(0).iter().all(|&v| v == 0.0));
    assert!(last.comp(1).iter().all(|&v| v == 0.0));
}

#[test]
fn evolve_preserves_divergence_and_mean() {
    let grid = Grid3::<f64>::two_pi(32).unwrap();
    let mut params = FlowParams::new(1.0, 0.02, 1e-3, 0.5).unwrap();
    params.save_every = 10;
    let u0 = random_divergence_free(grid, &params, 5, 6)
        .unwrap()
        .snapshot(0)
        .clone();
    let (u, pi) = ns_evolve(&u0, &params).unwrap();
    let sb = SpectralBox::new(grid);
    for s in u.snapshots() {
        assert!(sb.max_divergence(s).unwrap() <= s.div_free_bound());
        for c in 0..3 {
            assert!(s.component_mean(c).abs() < 1e-12 * s.max_abs().max(1e-300));
        }
    }
    for s in pi.snapshots() {
        assert!(s.component_mean(0).abs() < 1e-12 * s.max_abs().max(1e-300));
    }
}

#[test]
fn nan_detection_reports_step() {
    let grid = Grid3::<f64>::two_pi(16).unwrap();
    let params = FlowParams::new(1.0, 0.1, 0.01, 1.0).unwrap();
    let mut comps = vec![vec![0.0; grid.len()]; 3];
    comps[0][0] = f64::NAN;
    let u0 = Snapshot::new(grid, 0.0, comps).unwrap();
    let err = ns_evolve(&u0, &params).unwrap_err();
    assert!(matches!(err, nsreg_core::Error::Numerical { .. }));
}

#[test]
fn rescale_composes_exactly_on_dyadic_ladder() {
    let grid = Grid3::<f64>::two_pi(16).unwrap();
    let params = FlowParams::new(1.0, 0.04, 0.01, 1.0).unwrap();
    let f = generate_field(GenKind::Abc, &params, grid).unwrap();
    let up = rescale_field(&rescale_field(&f, 2.0).unwrap(), 0.5).unwrap();
    for (a, b) in f.snapshots().iter().zip(up.snapshots()) {
        assert_eq!(a.comps(), b.comps());
        assert_eq!(a.time().to_bits(), b.time().to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn persistence_roundtrip_bits(seed in 0u64..1000) {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid3::<f64>::new(16, 1.0).unwrap();
        let params = FlowParams::new(1.0, 0.02, 0.01, 0.7).unwrap();
        let f = random_divergence_free(grid, &params, seed, 3).unwrap();
        persist_field(&f, dir.path()).unwrap();
        let g: SpaceTimeField<f64> = load_field(dir.path()).unwrap();
        prop_assert_eq!(f.len(), g.len());
        for (a, b) in f.snapshots().iter().zip(g.snapshots()) {
            for (ca, cb) in a.comps().iter().zip(b.comps()) {
                for (x, y) in ca.iter().zip(cb) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn rescale_scales_values_exactly(k in 1u32..4) {
        let lambda = 2.0f64.powi(k as i32);
        let grid = Grid3::<f64>::new(16, 1.0).unwrap();
        let params = FlowParams::new(1.0, 0.02, 0.01, 1.0).unwrap();
        let f = generate_field(GenKind::TaylorGreen2d, &params, grid).unwrap();
        let r = rescale_field(&f, lambda).unwrap();
        prop_assert_eq!(r.max_abs(), lambda * f.max_abs());
        prop_assert_eq!(r.grid().box_length(), 1.0 / lambda);
        prop_assert_eq!(r.dt(), f.dt() / (lambda * lambda));
        prop_assert!(!r.resampled);
    }
}

#[test]
fn velocity_field_kind_is_enforced() {
    let grid = Grid3::<f64>::new(16, 1.0).unwrap();
    let s = Snapshot::zeros(grid, 0.0, 1);
    assert!(SpaceTimeField::new(FieldKind::Velocity, vec![s]).is_err());
}
