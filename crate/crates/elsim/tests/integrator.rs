use std::f64::consts::PI;
use std::sync::Arc;

use elsim::dynamics::{Dynamics, Model, Params, State};
use elsim::integrator::{
    detect_blowup, renormalize_constraints, stability_dt, step, total_energy, wave_propagator, IntegratorError,
    StepperConfig,
};
use elsim::spectral::{max_abs, Grid};
use proptest::prelude::*;

type M2 = [[f64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// exp(M) by scaling and squaring a truncated Taylor series.
fn expm(m: &M2) -> M2 {
    let norm = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut s = 0;
    while norm / f64::from(1u32 << s) > 0.25 {
        s += 1;
    }
    let scale = f64::from(1u32 << s);
    let a = [[m[0][0] / scale, m[0][1] / scale], [m[1][0] / scale, m[1][1] / scale]];
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    let mut sum = term;
    for k in 1..30 {
        term = mul(&term, &a);
        for r in term.iter_mut().flatten() {
            *r /= k as f64;
        }
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = mul(&sum, &sum);
    }
    sum
}

fn check_propagator(k2: f64, s0: f64, s1: f64, h: f64) {
    let a = [[0.0, h], [-k2 / s0 * h, -s1 / s0 * h]];
    let e = expm(&a);
    let p = wave_propagator(k2, s0, s1, h);
    let got = [[p[0], p[1]], [p[2], p[3]]];
    let scale = e.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    for i in 0..2 {
        for j in 0..2 {
            assert!(
                (got[i][j] - e[i][j]).abs() < 1e-11 * scale,
                "k2={k2} s0={s0} s1={s1} h={h}: {got:?} vs {e:?}"
            );
        }
    }
}

#[test]
fn propagator_matches_matrix_exponential() {
    for &(k2, s0, s1, h) in &[
        (0.0, 1.0, 0.0, 0.3),
        (1.0, 1.0, 0.0, 0.5),
        (9.0, 2.0, 0.5, 0.1),
        (1e-8, 1.0, 0.0, 0.5),
        (0.25, 1.0, 1.0, 0.7),
        (0.01, 1.0, 3.0, 0.4),
        (400.0, 0.5, 0.2, 0.02),
    ] {
        check_propagator(k2, s0, s1, h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagator_random_parameters(
        k2 in 0.0f64..50.0,
        s0 in 0.2f64..3.0,
        s1 in 0.0f64..2.0,
        h in 1e-4f64..0.5,
    ) {
        check_propagator(k2, s0, s1, h);
    }

    #[test]
    fn renormalization_lands_on_tangent_bundle(
        raw in prop::collection::vec(-1.0f64..1.0, 6 * 16),
    ) {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let mut s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
        for c in 0..3 {
            for i in 0..16 {
                s.d[c][i] = 0.2 * raw[c * 16 + i] + if c == 2 { 1.0 } else { 0.0 };
                s.q[c][i] = raw[48 + c * 16 + i];
            }
        }
        let (out, _) = renormalize_constraints(&s).unwrap();
        for i in 0..16 {
            let n: f64 = (0..3).map(|c| out.d[c][i].powi(2)).sum();
            let dot: f64 = (0..3).map(|c| out.d[c][i] * out.q[c][i]).sum();
            prop_assert!((n - 1.0).abs() < 1e-14);
            prop_assert!(dot.abs() < 1e-14);
        }
    }
}

#[test]
fn renormalization_reports_drift_and_rejects_collapse() {
    let g = Grid::new(1, 8, 1.0).unwrap();
    let mut s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    s.d[2][3] = 1.25;
    let (_, drift) = renormalize_constraints(&s).unwrap();
    assert!((drift - 0.25).abs() < 1e-15);
    s.d[2][3] = 0.1;
    assert!(matches!(renormalize_constraints(&s), Err(IntegratorError::CorruptedState { .. })));
}

#[test]
fn stepper_config_validation() {
    assert!(StepperConfig::with_dt(1e-3).validate().is_ok());
    assert!(StepperConfig::with_dt(0.0).validate().is_err());
    assert!(StepperConfig::with_dt(f64::NAN).validate().is_err());
    assert!(StepperConfig { cfl_safety: 1.5, ..Default::default() }.validate().is_err());
}

#[test]
fn cfl_rule() {
    let g = Grid::new(2, 16, 8.0).unwrap();
    let mut s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    assert!((stability_dt(&g, &s, 0.5) - 0.25).abs() < 1e-15);
    s.v[0][5] = -4.0;
    assert!((stability_dt(&g, &s, 0.5) - 0.0625).abs() < 1e-15);
}

fn dyn2(n: usize, model: Model) -> (Arc<Grid>, Dynamics) {
    let g = Arc::new(Grid::new(2, n, 2.0 * PI).unwrap());
    let dy = Dynamics::new(g.clone(), Params::default(), model).unwrap();
    (g, dy)
}

#[test]
fn equilibrium_is_a_fixed_point() {
    let (g, dy) = dyn2(16, Model::Coupled);
    let s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    let out = step(&dy, &s, &StepperConfig::with_dt(0.1)).unwrap();
    assert!((out.state.t - 0.1).abs() < 1e-15);
    for (a, b) in out.state.d.iter().zip(&s.d) {
        assert!(a.iter().zip(b).all(|(x, y)| x == y));
    }
    assert!(out.state.v.iter().chain(&out.state.q).all(|c| max_abs(c) == 0.0));
}

#[test]
fn taylor_green_step_decays_exactly() {
    let (g, dy) = dyn2(16, Model::Coupled);
    let mut s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    for i in 0..g.len() {
        let (x, y) = (g.coord(0)[i], g.coord(1)[i]);
        s.v[0][i] = x.cos() * y.sin();
        s.v[1][i] = -x.sin() * y.cos();
    }
    let dt = 0.05;
    let out = step(&dy, &s, &StepperConfig::with_dt(dt)).unwrap();
    let f = (-2.0 * dt).exp();
    for (a, b) in out.state.v.iter().zip(&s.v) {
        let err = a.iter().zip(b).map(|(x, y)| (x - f * y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13, "err {err}");
    }
}

#[test]
fn sphere_drift_is_second_order() {
    let (g, dy) = dyn2(16, Model::DirectorOnly);
    let mut s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    for i in 0..g.len() {
        let u = 0.3 * g.coord(0)[i].sin() * g.coord(1)[i].cos();
        s.d[0][i] = u.sin();
        s.d[2][i] = u.cos();
        let ut = 0.2 * g.coord(1)[i].sin();
        s.q[0][i] = ut * u.cos();
        s.q[2][i] = -ut * u.sin();
    }
    // summed over a fixed interval; a single step is one order better
    let drift = |dt: f64| {
        let cfg = StepperConfig::with_dt(dt);
        let mut st = s.clone();
        let mut total = 0.0;
        for _ in 0..(0.4 / dt).round() as usize {
            let out = step(&dy, &st, &cfg).unwrap();
            total += out.drift;
            st = out.state;
        }
        total
    };
    let (a, b, c) = (drift(0.04), drift(0.02), drift(0.01));
    assert!(a / b > 3.0 && a / b < 16.0 / 3.0, "{a} {b}");
    assert!(b / c > 3.0 && b / c < 16.0 / 3.0, "{b} {c}");
}

#[test]
fn wave_map_energy_is_conserved() {
    let g = Arc::new(Grid::new(1, 64, 2.0 * PI).unwrap());
    let dy = Dynamics::new(g.clone(), Params::default(), Model::DirectorOnly).unwrap();
    let mut s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    for i in 0..g.len() {
        let u = 0.5 * g.coord(0)[i].sin();
        s.d[0][i] = u.sin();
        s.d[2][i] = u.cos();
    }
    let e0 = total_energy(&dy, &s);
    let cfg = StepperConfig::with_dt(1e-3);
    for _ in 0..2000 {
        s = step(&dy, &s, &cfg).unwrap().state;
    }
    assert!((total_energy(&dy, &s) - e0).abs() < 1e-6 * e0);
}

#[test]
fn blowup_detection() {
    let (g, dy) = dyn2(8, Model::Coupled);
    let mut s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    s.v[0][1] = 1.0;
    let e0 = total_energy(&dy, &s);
    let cfg = StepperConfig::default();
    assert!(!detect_blowup(&dy, &s, e0, &cfg));
    s.v[0][1] = 1e3;
    assert!(detect_blowup(&dy, &s, e0, &cfg));
    s.v[0][1] = f64::NAN;
    assert!(detect_blowup(&dy, &s, e0, &cfg));
}
