use elsim::formats::{Family, ScenarioConfig};
use elsim::harness::{
    bump, emit_report, fit_decay, load_record, load_records, make_initial_data, run_scenario, run_sweep, save_record,
    status_label, sweep_summary_csv, taylor_green_rate, FitError, HarnessError, RunOptions, Status, SweepAxes,
    SweepSpec,
};
use elsim::spectral::{max_abs, Grid};
use proptest::prelude::*;

fn small(family: Family) -> ScenarioConfig {
    ScenarioConfig {
        dim: 2,
        n_points: 64,
        box_length: 32.0,
        epsilon: 0.05,
        family,
        support_radius: 6.0,
        horizon: 2.0,
        sample_dt: 0.5,
        kappa_max: 1,
        seed: 11,
        ..ScenarioConfig::flagship()
    }
}

fn quick() -> RunOptions {
    RunOptions { h_lambda: false, ..Default::default() }
}

#[test]
fn bump_profile() {
    assert_eq!(bump(0.0), 1.0);
    assert_eq!(bump(1.0), 0.0);
    assert_eq!(bump(1.5), 0.0);
    assert!(bump(0.5) > bump(0.6) && bump(0.6) > 0.0);
}

#[test]
fn fit_recovers_power_law() {
    let pts: Vec<(f64, f64)> = (1..=200).map(|i| i as f64 * 50.0).map(|t| (t, 3.0 * t.powf(-0.75))).collect();
    let f = fit_decay(&pts, (1000.0, 10000.0), false).unwrap();
    assert!((f.exponent + 0.75).abs() < 1e-6, "{f:?}");
    assert!(f.residual < 1e-6);
    assert_eq!(f.samples, 181);
}

#[test]
fn log_corrected_fit_removes_log_factor() {
    let br = |t: f64| (1.0 + t * t).sqrt();
    let pts: Vec<(f64, f64)> = (1..=100).map(|i| i as f64 * 10.0).map(|t| (t, br(t).powf(-0.5) * br(t).ln().sqrt())).collect();
    let f = fit_decay(&pts, (10.0, 1000.0), true).unwrap();
    assert!((f.exponent + 0.5).abs() < 1e-12);
}

#[test]
fn fit_errors() {
    let pts = [(1.0, 1.0), (2.0, 0.5), (3.0, 0.2)];
    assert_eq!(fit_decay(&pts, (0.0, 10.0), false), Err(FitError::TooFewSamples(3)));
    let pts = [(1.0, 1.0), (2.0, 0.5), (3.0, 0.0), (4.0, 0.1)];
    assert!(matches!(fit_decay(&pts, (0.0, 10.0), false), Err(FitError::NonPositive { .. })));
    let pts = [(0.0, 1.0), (1.0, 0.5), (2.0, 0.2), (3.0, 0.1)];
    assert_eq!(fit_decay(&pts, (0.0, 3.0), true), Err(FitError::ZeroTime));
}

#[test]
fn initial_data_is_admissible() {
    let cfg = small(Family::Mixed);
    let g = Grid::from_spec(cfg.grid_spec()).unwrap();
    let s = make_initial_data(&g, &cfg).unwrap();
    assert!(max_abs(&g.divergence(&s.v)) < 1e-12);
    for i in 0..g.len() {
        let n: f64 = (0..3).map(|c| s.d[c][i].powi(2)).sum();
        let dq: f64 = (0..3).map(|c| s.d[c][i] * s.q[c][i]).sum();
        assert!((n - 1.0).abs() < 1e-14 && dq.abs() < 1e-15);
        if g.radius()[i] >= cfg.support_radius {
            assert_eq!(s.d[2][i], 1.0);
            assert_eq!(s.q[0][i], 0.0);
        }
    }
    assert_eq!(s, make_initial_data(&g, &cfg).unwrap());
    let other = make_initial_data(&g, &ScenarioConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(s, other);
}

#[test]
fn geodesic_amplitude_is_limited() {
    let cfg = ScenarioConfig {
        dim: 1,
        box_length: 6.0,
        epsilon: 2.0,
        family: Family::Geodesic,
        ..small(Family::Geodesic)
    };
    let g = Grid::from_spec(cfg.grid_spec()).unwrap();
    assert!(matches!(make_initial_data(&g, &cfg), Err(HarnessError::InitialData(_))));
}

#[test]
fn small_run_completes_and_persists() {
    let cfg = small(Family::Mixed);
    let rec = run_scenario(&cfg, &RunOptions { store_checkpoints: true, ..quick() }).unwrap();
    assert_eq!(rec.status, Status::Completed);
    assert_eq!(rec.frames.len(), 5);
    assert_eq!(rec.checkpoints.len(), 5);
    assert!(rec.frames.iter().all(|f| f.div_v_max < 1e-10 && f.boundary_mass < 1e-8));

    let dir = tempfile::tempdir().unwrap();
    save_record(&rec, dir.path()).unwrap();
    let back = load_record(dir.path()).unwrap();
    assert_eq!(back, rec);
    let all = load_records(dir.path()).unwrap();
    assert_eq!(all.len(), 1);

    // identical inputs give identical files
    let dir2 = tempfile::tempdir().unwrap();
    save_record(&run_scenario(&cfg, &RunOptions { store_checkpoints: true, ..quick() }).unwrap(), dir2.path()).unwrap();
    for f in ["record.json", "series.csv", "checkpoints/ckpt_00004.bin"] {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), std::fs::read(dir2.path().join(f)).unwrap(), "{f}");
    }

    let out = tempfile::tempdir().unwrap();
    let bundle = emit_report(&[rec], out.path()).unwrap();
    assert!(bundle.files.iter().all(|p| p.is_file()));
    let summary = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(std::fs::read_to_string(out.path().join("run_000/linf_v.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn boundary_contact_stops_the_run() {
    // a profile two cells wide leaks spectral tails into the outer shell
    let cfg = ScenarioConfig { n_points: 32, support_radius: 4.0, ..small(Family::Mixed) };
    let rec = run_scenario(&cfg, &quick()).unwrap();
    assert!(matches!(rec.status, Status::BoundaryContact { .. }), "{:?}", rec.status);
    assert!(status_label(&rec.status).starts_with("boundary-contact@"));
}

#[test]
fn taylor_green_control_rate() {
    assert!((taylor_green_rate(0.5) - 1.0).abs() < 1e-8);
}

#[test]
fn sweep_runs_grid_of_configs() {
    let base = ScenarioConfig { horizon: 1.0, ..small(Family::BumpDirector) };
    let axes = SweepAxes { epsilon: vec![0.01, 0.02], ..Default::default() };
    assert!(matches!(run_sweep(&base, &axes, &quick(), 1), Err(HarnessError::SweepTooLarge(2, 1))));
    let res = run_sweep(&base, &axes, &quick(), 4).unwrap();
    assert_eq!(res.summary.len(), 2);
    assert!(res.summary.iter().all(|r| r.status == "completed"));
    let csv = sweep_summary_csv(&res.summary);
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("epsilon,mu,sigma1,n_points,status"));
}

#[test]
fn sweep_spec_parsing() {
    let base = small(Family::Mixed).to_json();
    let spec = SweepSpec::from_json(&format!(r#"{{"base": {base}, "mu": [0.5, 1.0]}}"#)).unwrap();
    assert_eq!(spec.axes().mu, vec![0.5, 1.0]);
    assert_eq!(spec.cap, 16);
    assert!(SweepSpec::from_json(&format!(r#"{{"base": {base}, "nu": [1]}}"#)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fit_is_exact_for_any_power(p in -2.0f64..1.0, c in 0.1f64..10.0) {
        let br = |t: f64| (1.0 + t * t).sqrt();
        let pts: Vec<(f64, f64)> = (0..40).map(|i| i as f64).map(|t| (t, c * br(t).powf(p))).collect();
        let f = fit_decay(&pts, (0.0, 39.0), false).unwrap();
        prop_assert!((f.exponent - p).abs() < 1e-10);
        prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
    }
}
