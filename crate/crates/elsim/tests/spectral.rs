use std::f64::consts::PI;

use elsim::spectral::{max_abs, Field, Grid, SpectralError};
use proptest::prelude::*;

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Random field whose modes all lie inside the dealias mask (|k_a| ≤ 2 on N = 16).
fn band_limited(g: &Grid, coeffs: &[f64]) -> Field {
    let base = 2.0 * PI / g.box_length();
    (0..g.len())
        .map(|i| {
            let mut acc = 0.0;
            let mut c = coeffs.iter();
            for m1 in 0..3 {
                for m2 in 0..3 {
                    let ph = base * (m1 as f64 * g.coord(0)[i] + m2 as f64 * g.coord(1)[i]);
                    acc += c.next().copied().unwrap_or(0.0) * ph.cos() + c.next().copied().unwrap_or(0.0) * ph.sin();
                }
            }
            acc
        })
        .collect()
}

#[test]
fn derivative_of_fundamental_mode() {
    let l = 3.0;
    let g = Grid::new(2, 32, l).unwrap();
    let k = 2.0 * PI / l;
    let f: Field = g.coord(0).iter().map(|x| (k * x).sin()).collect();
    let df = g.spectral_derivative(&f, 0, 1).unwrap();
    let expect: Field = g.coord(0).iter().map(|x| k * (k * x).cos()).collect();
    assert!(sup_diff(&df, &expect) < 1e-12);
    let d2 = g.spectral_derivative(&f, 1, 1).unwrap();
    assert!(max_abs(&d2) < 1e-12);
}

#[test]
fn constant_has_zero_derivatives() {
    let g = Grid::new(3, 8, 5.0).unwrap();
    let f = vec![2.5; g.len()];
    for axis in 0..3 {
        for order in 1..4 {
            assert!(max_abs(&g.spectral_derivative(&f, axis, order).unwrap()) < 1e-12);
        }
    }
}

#[test]
fn derivative_rejects_bad_arguments() {
    let g = Grid::new(2, 8, 1.0).unwrap();
    let f = g.zeros();
    assert!(matches!(g.spectral_derivative(&f, 2, 1), Err(SpectralError::AxisOutOfRange { .. })));
    assert!(matches!(g.spectral_derivative(&f, 0, 0), Err(SpectralError::ZeroOrder)));
}

#[test]
fn gradient_projects_to_zero() {
    let g = Grid::new(2, 16, 2.0 * PI).unwrap();
    let phi: Field = (0..g.len()).map(|i| g.coord(0)[i].sin() * g.coord(1)[i].sin()).collect();
    let p = g.leray_project(&g.gradient(&phi)).unwrap();
    assert!(p.iter().all(|c| max_abs(c) < 1e-12));
}

#[test]
fn curl_is_left_unchanged() {
    let g = Grid::new(2, 16, 2.0 * PI).unwrap();
    let psi: Field = (0..g.len()).map(|i| (g.coord(0)[i] + 2.0 * g.coord(1)[i]).cos() + g.coord(0)[i].sin()).collect();
    let gp = g.gradient(&psi);
    let v = vec![gp[1].clone(), gp[0].iter().map(|x| -x).collect()];
    let p = g.leray_project(&v).unwrap();
    for (a, b) in p.iter().zip(&v) {
        assert!(sup_diff(a, b) < 1e-12);
    }
}

#[test]
fn aligned_single_mode_projects_to_zero() {
    // f = (sin x₁, 0, 0): its only wavevector is (±1, 0, 0), parallel to f.
    let g = Grid::new(3, 8, 2.0 * PI).unwrap();
    let f = vec![g.coord(0).iter().map(|x| x.sin()).collect(), g.zeros(), g.zeros()];
    let p = g.leray_project(&f).unwrap();
    assert!(p.iter().all(|c| max_abs(c) < 1e-13));
}

#[test]
fn projection_needs_two_dimensions() {
    let g = Grid::new(1, 8, 1.0).unwrap();
    assert!(matches!(g.leray_project(&[g.zeros()]), Err(SpectralError::OneDimensionalProjection)));
}

#[test]
fn nyquist_mode_is_dealiased() {
    let g = Grid::new(1, 16, 2.0 * PI).unwrap();
    let f: Field = g.coord(0).iter().map(|x| (8.0 * x).cos()).collect();
    assert!(max_abs(&g.dealias_truncate(&f)) < 1e-13);
    let low: Field = g.coord(0).iter().map(|x| (3.0 * x).cos() + (5.0 * x).sin()).collect();
    assert!(sup_diff(&g.dealias_truncate(&low), &low) < 1e-13);
}

#[test]
fn parseval_matches_quadrature() {
    let g = Grid::new(3, 8, 4.0).unwrap();
    let f: Field = (0..g.len()).map(|i| ((i * 37) % 17) as f64 - 8.0).collect();
    let a = g.l2_norm_sq(&f);
    let b = g.spectral_l2_norm_sq(&g.forward(&f));
    assert!((a - b).abs() < 1e-10 * a);
}

#[test]
fn grid_rejects_odd_sizes() {
    assert!(Grid::new(2, 7, 1.0).is_err());
    assert!(Grid::new(4, 8, 1.0).is_err());
    assert!(Grid::new(2, 8, -1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mixed_partials_commute(coeffs in prop::collection::vec(-1.0f64..1.0, 18)) {
        let g = Grid::new(2, 16, 2.0 * PI).unwrap();
        let f = band_limited(&g, &coeffs);
        let a = g.spectral_derivative(&g.spectral_derivative(&f, 0, 1).unwrap(), 1, 1).unwrap();
        let b = g.spectral_derivative(&g.spectral_derivative(&f, 1, 1).unwrap(), 0, 1).unwrap();
        prop_assert!(sup_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn dealias_is_idempotent(vals in prop::collection::vec(-1.0f64..1.0, 256)) {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let once = g.dealias_truncate(&vals);
        let twice = g.dealias_truncate(&once);
        prop_assert!(sup_diff(&once, &twice) < 1e-13);
    }

    #[test]
    fn projection_is_idempotent_and_solenoidal(
        a in prop::collection::vec(-1.0f64..1.0, 512),
        b in prop::collection::vec(-1.0f64..1.0, 512),
        c in prop::collection::vec(-1.0f64..1.0, 512),
    ) {
        let g = Grid::new(3, 8, 2.0).unwrap();
        let p = g.leray_project(&[a, b, c]).unwrap();
        prop_assert!(max_abs(&g.divergence(&p)) < 1e-10);
        let pp = g.leray_project(&p).unwrap();
        for (x, y) in p.iter().zip(&pp) {
            prop_assert!(sup_diff(x, y) < 1e-13);
        }
    }
}
