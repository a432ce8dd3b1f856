//! Heun stepper with modewise integrating factors (viscosity, director wave
//! operator) and pointwise renormalization of the director after every step.

use rustfft::num_complex::Complex64;

use crate::dynamics::{Dynamics, State};
use crate::spectral::{max_abs, Field, Grid};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegratorError {
    #[error("non-finite values after stepping from t = {last_valid_t}")]
    BlowUp { last_valid_t: f64 },
    #[error("director magnitude fell to {min_norm} (below 0.5)")]
    CorruptedState { min_norm: f64 },
    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub dt: f64,
    pub cfl_safety: f64,
    pub constraint_tol: f64,
    pub blowup_energy_factor: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig { dt: 1e-3, cfl_safety: 0.5, constraint_tol: 1e-12, blowup_energy_factor: 1e4 }
    }
}

impl StepperConfig {
    pub fn with_dt(dt: f64) -> Self {
        StepperConfig { dt, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(IntegratorError::InvalidConfig(format!("dt = {}", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(IntegratorError::InvalidConfig(format!("cfl_safety = {}", self.cfl_safety)));
        }
        Ok(())
    }
}

/// Result of one step: the new state and the pre-projection sphere drift.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: State,
    pub drift: f64,
}

/// Modewise `exp(hA)` for `d' = q, q' = -(k²/σ₀)d - (σ₁/σ₀)q`, as `[e00, e01, e10, e11]`.
pub fn wave_propagator(k2: f64, sigma0: f64, sigma1: f64, h: f64) -> [f64; 4] {
    let w2 = k2 / sigma0;
    let g = sigma1 / sigma0;
    let b2 = w2 - 0.25 * g * g;
    let z = b2 * h * h;
    let (c, sn) = if z.abs() < 1e-6 {
        (1.0 - 0.5 * z + z * z / 24.0, h * (1.0 - z / 6.0 + z * z / 120.0))
    } else if b2 > 0.0 {
        let b = b2.sqrt();
        ((b * h).cos(), (b * h).sin() / b)
    } else {
        let a = (-b2).sqrt();
        ((a * h).cosh(), (a * h).sinh() / a)
    };
    let f = (-0.5 * g * h).exp();
    [f * (c + 0.5 * g * sn), f * sn, -f * sn * w2, f * (c - 0.5 * g * sn)]
}

/// One Heun step in integrating-factor form: viscosity and the director's
/// linear wave part are propagated exactly, the rest is extrapolated.
pub fn step(dy: &Dynamics, s: &State, cfg: &StepperConfig) -> Result<StepOutcome, IntegratorError> {
    let g = &dy.grid;
    let p = &dy.params;
    let dt = cfg.dt;
    let t0 = dy.tendency(s);

    let factor: Vec<f64> = g.k_squared().iter().map(|k2| (-p.mu * k2 * dt).exp()).collect();
    let wave: Vec<[f64; 4]> = g.k_squared().iter().map(|&k2| wave_propagator(k2, p.sigma0, p.sigma1, dt)).collect();
    let v_hat: Vec<Vec<Complex64>> =
        if dy.coupled() { s.v.iter().map(|c| g.forward(c)).collect() } else { Vec::new() };
    let d_hat: Vec<Vec<Complex64>> = s.d.iter().map(|c| g.forward(c)).collect();
    let q_hat: Vec<Vec<Complex64>> = s.q.iter().map(|c| g.forward(c)).collect();

    // E·(d, q + h·n) for one component
    let propagate = |dh: &[Complex64], qh: &[Complex64], n: &[Complex64], h: f64| -> (Field, Field) {
        let mut a = vec![Complex64::new(0.0, 0.0); dh.len()];
        let mut b = a.clone();
        for i in 0..dh.len() {
            let [e00, e01, e10, e11] = wave[i];
            let q = qh[i] + n[i] * h;
            a[i] = dh[i] * e00 + q * e01;
            b[i] = dh[i] * e10 + q * e11;
        }
        (g.inverse(&a), g.inverse(&b))
    };

    let mut pred = State { t: s.t + dt, v: s.v.clone(), d: Vec::with_capacity(3), q: Vec::with_capacity(3) };
    for c in 0..3 {
        let (d, q) = propagate(&d_hat[c], &q_hat[c], &t0.director_forcing_hat[c], dt);
        pred.d.push(d);
        pred.q.push(q);
    }
    if dy.coupled() {
        pred.v = v_hat
            .iter()
            .zip(&t0.forcing_hat)
            .map(|(vh, nh)| {
                let w: Vec<Complex64> =
                    vh.iter().zip(nh).zip(&factor).map(|((a, b), e)| (a + b * dt) * e).collect();
                g.inverse(&w)
            })
            .collect();
    }
    let t1 = dy.tendency(&pred);

    let mut next = State { t: s.t + dt, v: s.v.clone(), d: Vec::with_capacity(3), q: Vec::with_capacity(3) };
    for c in 0..3 {
        let (mut d, mut q) = propagate(&d_hat[c], &q_hat[c], &t0.director_forcing_hat[c], 0.5 * dt);
        let n1 = g.inverse(&t1.director_forcing_hat[c]);
        for (x, y) in q.iter_mut().zip(&n1) {
            *x += 0.5 * dt * y;
        }
        next.d.push(std::mem::take(&mut d));
        next.q.push(q);
    }
    if dy.coupled() {
        next.v = v_hat
            .iter()
            .zip(t0.forcing_hat.iter().zip(&t1.forcing_hat))
            .map(|(vh, (n0, n1))| {
                let w: Vec<Complex64> = vh
                    .iter()
                    .zip(n0.iter().zip(n1))
                    .zip(&factor)
                    .map(|((a, (b0, b1)), e)| a * e + (b0 * e + b1) * (0.5 * dt))
                    .collect();
                g.inverse(&w)
            })
            .collect();
    }
    if !next.is_finite() {
        return Err(IntegratorError::BlowUp { last_valid_t: s.t });
    }
    let (state, drift) = renormalize_constraints(&next)?;
    Ok(StepOutcome { state, drift })
}

/// `d ← d/|d|`, `q ← q - (q·d)d`; returns the new state and `max ||d| - 1|` before projection.
pub fn renormalize_constraints(s: &State) -> Result<(State, f64), IntegratorError> {
    let len = s.d[0].len();
    let mut out = s.clone();
    let mut drift = 0.0f64;
    let mut min_norm = f64::INFINITY;
    for i in 0..len {
        let nd = (s.d[0][i].powi(2) + s.d[1][i].powi(2) + s.d[2][i].powi(2)).sqrt();
        min_norm = min_norm.min(nd);
        drift = drift.max((nd - 1.0).abs());
        if nd > 0.0 {
            let dd = [s.d[0][i] / nd, s.d[1][i] / nd, s.d[2][i] / nd];
            let qd = s.q[0][i] * dd[0] + s.q[1][i] * dd[1] + s.q[2][i] * dd[2];
            for c in 0..3 {
                out.d[c][i] = dd[c];
                out.q[c][i] = s.q[c][i] - qd * dd[c];
            }
        }
    }
    if !(min_norm >= 0.5) {
        return Err(IntegratorError::CorruptedState { min_norm });
    }
    Ok((out, drift))
}

/// `cfl_safety · min(Δx, Δx / max|v|)`; viscosity is integrated exactly.
pub fn stability_dt(g: &Grid, s: &State, cfl_safety: f64) -> f64 {
    let dx = g.dx();
    let vmax = s.v.iter().map(|c| max_abs(c)).fold(0.0, f64::max);
    let adv = if vmax > 0.0 { dx / vmax } else { f64::INFINITY };
    cfl_safety * dx.min(adv)
}

/// `½∫(|v|² + σ₀|q|² + |∇d|²)`.
pub fn total_energy(dy: &Dynamics, s: &State) -> f64 {
    let g = &dy.grid;
    let mut e = 0.0;
    for c in &s.v {
        e += g.l2_norm_sq(c);
    }
    for c in &s.q {
        e += dy.params.sigma0 * g.l2_norm_sq(c);
    }
    for c in &s.d {
        for gc in g.gradient(c) {
            e += g.l2_norm_sq(&gc);
        }
    }
    0.5 * e
}

pub fn detect_blowup(dy: &Dynamics, s: &State, baseline_energy: f64, cfg: &StepperConfig) -> bool {
    if !s.is_finite() {
        return true;
    }
    let e = total_energy(dy, s);
    !e.is_finite() || e > cfg.blowup_energy_factor * baseline_energy
}
