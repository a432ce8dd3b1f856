use std::f64::consts::PI;

use elsim::dynamics::State;
use elsim::spectral::{max_abs, Field, Grid};
use elsim::verification::{
    fd_divergence, geodesic_oracle, heat_evolve, probe_family, sobolev_probe, state_distance, taylor_green_oracle,
    wave_evolve, Check, OracleSpec, Suite, VerificationError,
};

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn wave_evolution_of_single_modes() {
    let g = Grid::new(1, 32, 2.0 * PI).unwrap();
    let u0: Field = g.coord(0).iter().map(|x| (3.0 * x).sin()).collect();
    let u1: Field = g.coord(0).iter().map(|x| (2.0 * x).cos() + 0.5).collect();
    let t = 1.3;
    let (u, ut) = wave_evolve(&g, &u0, &u1, t);
    let eu: Field = g.coord(0).iter().map(|x| (3.0 * t).cos() * (3.0 * x).sin() + (2.0 * t).sin() / 2.0 * (2.0 * x).cos() + 0.5 * t).collect();
    let eut: Field =
        g.coord(0).iter().map(|x| -3.0 * (3.0 * t).sin() * (3.0 * x).sin() + (2.0 * t).cos() * (2.0 * x).cos() + 0.5).collect();
    assert!(sup_diff(&u, &eu) < 1e-12);
    assert!(sup_diff(&ut, &eut) < 1e-12);
}

#[test]
fn heat_semigroup_on_a_mode() {
    let g = Grid::new(2, 16, 2.0 * PI).unwrap();
    let f: Field = (0..g.len()).map(|i| (g.coord(0)[i] + 2.0 * g.coord(1)[i]).cos()).collect();
    let out = heat_evolve(&g, &f, 0.3, 0.7);
    let factor = (-0.3 * 5.0 * 0.7f64).exp();
    assert!(sup_diff(&out, &f.iter().map(|x| factor * x).collect::<Field>()) < 1e-13);
}

#[test]
fn geodesic_oracle_is_a_unit_tangent_pair() {
    let g = Grid::new(1, 32, 2.0 * PI).unwrap();
    let s = geodesic_oracle(&g, &OracleSpec::geodesic(0.7), 0.9).unwrap();
    for i in 0..g.len() {
        let n: f64 = (0..3).map(|c| s.d[c][i].powi(2)).sum();
        let dq: f64 = (0..3).map(|c| s.d[c][i] * s.q[c][i]).sum();
        assert!((n - 1.0).abs() < 1e-14 && dq.abs() < 1e-14);
        let u = 0.7 * 0.9f64.cos() * g.coord(0)[i].sin();
        assert!((s.d[0][i] - u.sin()).abs() < 1e-13);
    }
    assert!(matches!(geodesic_oracle(&g, &OracleSpec::geodesic(2.0), 0.0), Err(VerificationError::OutsideChart(_))));
    assert!(matches!(geodesic_oracle(&g, &OracleSpec::taylor_green(1.0), 0.0), Err(VerificationError::WrongOracle(..))));
}

#[test]
fn taylor_green_oracle_decays() {
    let g = Grid::new(2, 16, 2.0 * PI).unwrap();
    let spec = OracleSpec::taylor_green(0.4);
    let a = taylor_green_oracle(&g, &spec, 0.0).unwrap();
    let b = taylor_green_oracle(&g, &spec, 1.5).unwrap();
    let f = (-2.0 * 0.4 * 1.5f64).exp();
    for (x, y) in a.v.iter().zip(&b.v) {
        assert!(sup_diff(y, &x.iter().map(|p| f * p).collect::<Field>()) < 1e-14);
    }
    assert!(max_abs(&g.divergence(&a.v)) < 1e-12);
    let g1 = Grid::new(1, 16, 1.0).unwrap();
    assert!(taylor_green_oracle(&g1, &spec, 0.0).is_err());
}

#[test]
fn fd_divergence_of_solenoidal_field() {
    let g = Grid::new(2, 32, 2.0 * PI).unwrap();
    let v = vec![
        (0..g.len()).map(|i| g.coord(0)[i].cos() * g.coord(1)[i].sin()).collect::<Field>(),
        (0..g.len()).map(|i| -g.coord(0)[i].sin() * g.coord(1)[i].cos()).collect::<Field>(),
    ];
    assert!(max_abs(&fd_divergence(&g.spec(), &v)) < 1e-12);
    let grad = vec![(0..g.len()).map(|i| g.coord(0)[i].sin()).collect::<Field>(), g.zeros()];
    assert!(max_abs(&fd_divergence(&g.spec(), &grad)) > 0.5);
}

#[test]
fn state_distance_is_a_sup_norm() {
    let g = Grid::new(2, 8, 1.0).unwrap();
    let a = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    let mut b = a.clone();
    assert_eq!(state_distance(&a, &b), 0.0);
    b.q[1][5] = -0.25;
    b.v[0][2] = 0.125;
    assert_eq!(state_distance(&a, &b), 0.25);
}

#[test]
fn sobolev_ratios_are_scale_invariant() {
    let g = Grid::new(2, 64, 16.0).unwrap();
    let fam = probe_family(&g);
    let a = sobolev_probe(&g, &fam, 6.0).unwrap();
    let doubled: Vec<Field> = fam.iter().map(|f| f.iter().map(|x| 3.0 * x).collect()).collect();
    let b = sobolev_probe(&g, &doubled, 6.0).unwrap();
    for (x, y) in a.as_array().iter().zip(b.as_array()) {
        let (x, y) = (x.unwrap(), y.unwrap());
        assert!(x.is_finite() && x > 0.0);
        assert!((x - y).abs() < 1e-12 * x);
    }
    let zero = sobolev_probe(&g, &[g.zeros()], 6.0).unwrap();
    assert!(zero.as_array().iter().all(|r| r.is_none()));
    let g1 = Grid::new(1, 16, 1.0).unwrap();
    assert!(sobolev_probe(&g1, &[g1.zeros()], 0.0).is_err());
}

#[test]
fn suite_names_and_check_formatting() {
    assert_eq!("duhamel".parse::<Suite>().unwrap(), Suite::Duhamel);
    assert!("nope".parse::<Suite>().is_err());
    let c = Check::at_most("err", 1e-9, 1e-8);
    assert!(c.passed());
    assert!(c.to_string().starts_with("PASS err"));
    let c = Check::within("ratio", 2.0, 3.0, 16.0 / 3.0);
    assert!(!c.passed());
    assert!(c.to_string().starts_with("FAIL ratio"));
    assert!(Check::at_least("order", 2.0, 1.9).passed());
}
