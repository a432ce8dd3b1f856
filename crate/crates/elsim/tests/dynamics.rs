use std::f64::consts::PI;
use std::sync::Arc;

use elsim::dynamics::{Dynamics, DynamicsError, Model, Params, State};
use elsim::spectral::{max_abs, Field, Grid};
use proptest::prelude::*;

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn setup(dim: usize, n: usize, model: Model) -> (Arc<Grid>, Dynamics) {
    let g = Arc::new(Grid::new(dim, n, 2.0 * PI).unwrap());
    let dy = Dynamics::new(g.clone(), Params::default(), model).unwrap();
    (g, dy)
}

/// Director `(sin u, 0, cos u)` with `u = ε cos t sin x₁` and its time derivative.
fn geodesic(g: &Grid, eps: f64, t: f64) -> State {
    let mut s = State::equilibrium(g, [0.0, 0.0, 1.0]);
    s.t = t;
    for i in 0..g.len() {
        let x = g.coord(0)[i];
        let u = eps * t.cos() * x.sin();
        let ut = -eps * t.sin() * x.sin();
        s.d[0][i] = u.sin();
        s.d[2][i] = u.cos();
        s.q[0][i] = ut * u.cos();
        s.q[2][i] = -ut * u.sin();
    }
    s
}

fn taylor_green(g: &Grid) -> State {
    let mut s = State::equilibrium(g, [0.0, 0.0, 1.0]);
    for i in 0..g.len() {
        let (x, y) = (g.coord(0)[i], g.coord(1)[i]);
        s.v[0][i] = x.cos() * y.sin();
        s.v[1][i] = -x.sin() * y.cos();
    }
    s
}

#[test]
fn constructor_rejects_bad_setups() {
    let g1 = Arc::new(Grid::new(1, 8, 1.0).unwrap());
    assert_eq!(Dynamics::new(g1, Params::default(), Model::Coupled).unwrap_err(), DynamicsError::OneDimensional);
    let g2 = Arc::new(Grid::new(2, 8, 1.0).unwrap());
    let p = Params { sigma0: 0.0, ..Params::default() };
    assert_eq!(Dynamics::new(g2.clone(), p, Model::Coupled).unwrap_err(), DynamicsError::ZeroInertia);
    let p = Params { e: [0.0, 0.0, 2.0], ..Params::default() };
    assert!(matches!(Dynamics::new(g2, p, Model::Coupled), Err(DynamicsError::InvalidParams(_))));
}

#[test]
fn stress_of_constant_director_vanishes() {
    let (g, dy) = setup(3, 8, Model::Coupled);
    let d = State::equilibrium(&g, [0.6, 0.0, 0.8]).d;
    assert!(dy.ericksen_stress_div(&d).iter().all(|c| max_abs(c) < 1e-14));
}

#[test]
fn stress_of_geodesic_profile() {
    let (g, dy) = setup(2, 32, Model::Coupled);
    let eps = 0.3;
    let s = geodesic(&g, eps, 0.0);
    let f = dy.ericksen_stress_div(&s.d);
    let expect: Field = g.coord(0).iter().map(|x| -eps * eps * (2.0 * x).sin()).collect();
    assert!(sup_diff(&f[0], &expect) < 1e-12);
    assert!(max_abs(&f[1]) < 1e-14);
}

#[test]
fn momentum_rhs_at_rest_is_zero() {
    let (g, dy) = setup(2, 16, Model::Coupled);
    let s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    assert!(dy.momentum_rhs(&s).unwrap().iter().all(|c| max_abs(c) < 1e-15));
}

#[test]
fn taylor_green_only_diffuses() {
    let (g, dy) = setup(2, 16, Model::Coupled);
    let s = taylor_green(&g);
    let rhs = dy.momentum_rhs(&s).unwrap();
    for (r, v) in rhs.iter().zip(&s.v) {
        let expect: Field = v.iter().map(|x| -2.0 * x).collect();
        assert!(sup_diff(r, &expect) < 1e-12);
    }
}

#[test]
fn geodesic_stress_is_a_pure_gradient() {
    let (g, dy) = setup(2, 32, Model::Coupled);
    let s = geodesic(&g, 0.3, 0.0);
    let stress = dy.ericksen_stress_div(&s.d);
    let expect: Vec<Field> =
        g.leray_project(&stress).unwrap().iter().map(|c| c.iter().map(|x| -x).collect()).collect();
    let rhs = dy.momentum_rhs(&s).unwrap();
    for (a, b) in rhs.iter().zip(&expect) {
        assert!(sup_diff(a, b) < 1e-12);
        assert!(max_abs(a) < 1e-12);
    }
}

#[test]
fn multiplier_examples() {
    let (g, dy) = setup(2, 16, Model::DirectorOnly);
    let eps = 0.2;
    let mut s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    assert!(max_abs(&dy.lagrange_multiplier(&s)) < 1e-15);
    let w = [0.6, 0.8, 0.0];
    for c in 0..3 {
        s.q[c] = vec![eps * w[c]; g.len()];
    }
    let lam = dy.lagrange_multiplier(&s);
    assert!(lam.iter().all(|l| (l + eps * eps).abs() < 1e-15));
    let rhs = dy.director_rhs(&s, &[]).unwrap();
    assert!(max_abs(&rhs[0]) < 1e-14 && max_abs(&rhs[1]) < 1e-14);
    assert!(rhs[2].iter().all(|x| (x + eps * eps).abs() < 1e-14));

    let s = geodesic(&g, eps, 0.0);
    let lam = dy.lagrange_multiplier(&s);
    let expect: Field = g.coord(0).iter().map(|x| eps * eps * x.cos().powi(2)).collect();
    assert!(sup_diff(&lam, &expect) < 1e-12);
}

#[test]
fn director_rhs_vanishes_at_equilibrium() {
    let (g, dy) = setup(3, 8, Model::Coupled);
    let s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    let dv = vec![g.zeros(); 3];
    assert!(dy.director_rhs(&s, &dv).unwrap().iter().all(|c| max_abs(c) < 1e-15));
}

#[test]
fn geodesic_state_satisfies_director_equation() {
    // u = ε cos t sin x₁ solves □u = 0, so d = (sin u, 0, cos u) is a wave map.
    let (g, dy) = setup(1, 64, Model::DirectorOnly);
    let eps = 0.4;
    for &t in &[0.0, 0.7, 2.3] {
        let s = geodesic(&g, eps, t);
        let rhs = dy.director_rhs(&s, &[]).unwrap();
        let mut exact = vec![g.zeros(); 3];
        for i in 0..g.len() {
            let x = g.coord(0)[i];
            let u = eps * t.cos() * x.sin();
            let ut = -eps * t.sin() * x.sin();
            let utt = -u;
            exact[0][i] = utt * u.cos() - ut * ut * u.sin();
            exact[2][i] = -utt * u.sin() - ut * ut * u.cos();
        }
        for c in 0..3 {
            assert!(sup_diff(&rhs[c], &exact[c]) < 1e-10, "t = {t}, component {c}");
        }
    }
}

#[test]
fn pressure_examples() {
    let (g, dy) = setup(2, 16, Model::Coupled);
    let s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
    assert!(dy.pressure_gradient(&s).unwrap().iter().all(|c| max_abs(c) < 1e-15));
    // returned field is (Id - 𝕡) of the forcing, i.e. -∇(cos 2x₁ + cos 2x₂)/4 here
    let s = taylor_green(&g);
    let gp = dy.pressure_gradient(&s).unwrap();
    for a in 0..2 {
        let expect: Field = g.coord(a).iter().map(|x| 0.5 * (2.0 * x).sin()).collect();
        assert!(sup_diff(&gp[a], &expect) < 1e-12);
    }
}

#[test]
fn tendency_splits_into_linear_and_forcing_parts() {
    let (g, dy) = setup(2, 16, Model::Coupled);
    let mut s = geodesic(&g, 0.3, 0.5);
    let tg = taylor_green(&g);
    s.v = tg.v.iter().map(|c| c.iter().map(|x| 0.1 * x).collect()).collect();
    let t = dy.tendency(&s);
    for c in 0..3 {
        let lap = g.laplacian(&s.d[c]);
        let nl = g.inverse(&t.director_forcing_hat[c]);
        let sum: Field = nl.iter().zip(&lap).map(|(a, b)| a + b).collect();
        assert!(sup_diff(&sum, &t.dq[c]) < 1e-12);
    }
    assert!(max_abs(&g.divergence(&t.dv)) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pressure_gradient_is_curl_free(
        a in prop::collection::vec(-0.2f64..0.2, 64),
        b in prop::collection::vec(-0.2f64..0.2, 64),
        c in prop::collection::vec(-0.3f64..0.3, 64),
    ) {
        let (g, dy) = setup(2, 8, Model::Coupled);
        let mut s = State::equilibrium(&g, [0.0, 0.0, 1.0]);
        s.v = vec![a, b];
        for i in 0..g.len() {
            s.d[0][i] = c[i].sin();
            s.d[2][i] = c[i].cos();
        }
        let gp = dy.pressure_gradient(&s).unwrap();
        let curl: Field = g
            .spectral_derivative(&gp[1], 0, 1)
            .unwrap()
            .iter()
            .zip(g.spectral_derivative(&gp[0], 1, 1).unwrap())
            .map(|(x, y)| x - y)
            .collect();
        prop_assert!(max_abs(&curl) < 1e-11);
    }
}
