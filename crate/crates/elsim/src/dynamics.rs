//! Right-hand sides of the inertial Ericksen-Leslie system written first
//! order in time for `(v, d, q = ∂_t d)`.
//!
//! Momentum: `∂_t v = 𝕡[-v·∇v + μΔv - ∇·(∇d⊗∇d)]` with `(∇d⊗∇d)_ij = ∂_i d·∂_j d`.
//! Director: with `m = q + v·∇d` and `λ = |∇d|² - σ₀|m|²`,
//! `∂_t q = σ₀⁻¹(Δd + λd - σ₁m) - ∂_t v·∇d - 2v·∇q - v·∇(v·∇d)`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral::{Field, Grid, SpectralError, Spectrum};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("incompressible dynamics need dim >= 2")]
    OneDimensional,
    #[error("sigma0 = 0 (parabolic regime) is not supported")]
    ZeroInertia,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub sigma0: f64,
    pub sigma1: f64,
    pub mu: f64,
    /// Equilibrium director.
    pub e: [f64; 3],
}

impl Default for Params {
    fn default() -> Self {
        Params { sigma0: 1.0, sigma1: 0.0, mu: 1.0, e: [0.0, 0.0, 1.0] }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.sigma0.is_finite() && self.sigma0 >= 0.0) {
            return Err(DynamicsError::InvalidParams(format!("sigma0 = {}", self.sigma0)));
        }
        if !(self.sigma1.is_finite() && self.sigma1 >= 0.0) {
            return Err(DynamicsError::InvalidParams(format!("sigma1 = {}", self.sigma1)));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(DynamicsError::InvalidParams(format!("mu = {}", self.mu)));
        }
        let ne = self.e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (ne - 1.0).abs() > 1e-12 {
            return Err(DynamicsError::InvalidParams(format!("|e| = {ne}")));
        }
        Ok(())
    }
}

/// Whether the velocity equation is solved or `v ≡ 0` is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Coupled,
    DirectorOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    /// `dim` components.
    pub v: Vec<Field>,
    /// Three components regardless of `dim`.
    pub d: Vec<Field>,
    pub q: Vec<Field>,
}

impl State {
    pub fn equilibrium(grid: &Grid, e: [f64; 3]) -> Self {
        State {
            t: 0.0,
            v: vec![grid.zeros(); grid.dim()],
            d: e.iter().map(|&c| vec![c; grid.len()]).collect(),
            q: vec![grid.zeros(); 3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().chain(&self.d).chain(&self.q).all(|c| c.iter().all(|x| x.is_finite()))
    }
}

/// Time derivative of the full state, plus the projected non-viscous
/// velocity forcing `𝕡[-v·∇v - ∇·(∇d⊗∇d)]` in spectral form.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub dv: Vec<Field>,
    pub dq: Vec<Field>,
    pub forcing_hat: Vec<Spectrum>,
    /// Dealiased part of `∂_t q` without `σ₀⁻¹(Δd - σ₁q)`.
    pub director_forcing_hat: Vec<Spectrum>,
}

#[derive(Debug, Clone)]
pub struct Dynamics {
    pub grid: Arc<Grid>,
    pub params: Params,
    pub model: Model,
}

fn add_scaled(acc: &mut [f64], a: f64, x: &[f64]) {
    for (y, v) in acc.iter_mut().zip(x) {
        *y += a * v;
    }
}

fn dot_grad(v: &[Field], grad: &[Field]) -> Field {
    let mut out = vec![0.0; v[0].len()];
    for (vj, gj) in v.iter().zip(grad) {
        for ((o, a), b) in out.iter_mut().zip(vj).zip(gj) {
            *o += a * b;
        }
    }
    out
}

impl Dynamics {
    pub fn new(grid: Arc<Grid>, params: Params, model: Model) -> Result<Self, DynamicsError> {
        params.validate()?;
        if model == Model::Coupled && grid.dim() == 1 {
            return Err(DynamicsError::OneDimensional);
        }
        if params.sigma0 == 0.0 {
            return Err(DynamicsError::ZeroInertia);
        }
        Ok(Dynamics { grid, params, model })
    }

    pub fn coupled(&self) -> bool {
        self.model == Model::Coupled
    }

    fn grads(&self, f: &[Field]) -> Vec<Vec<Field>> {
        f.iter().map(|c| self.grid.gradient(c)).collect()
    }

    fn masked(&self, f: &[f64]) -> Spectrum {
        let mut s = self.grid.forward(f);
        self.grid.dealias_spectrum(&mut s);
        s
    }

    /// Spectrum of `∇·(∇d⊗∇d)` from precomputed director gradients `gd[c][j]`.
    fn stress_div_hat(&self, gd: &[Vec<Field>]) -> Vec<Spectrum> {
        let g = &self.grid;
        let dim = g.dim();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); g.spectral_len()]; dim];
        for i in 0..dim {
            for j in i..dim {
                let mut t = vec![0.0; g.len()];
                for gc in gd {
                    for ((o, a), b) in t.iter_mut().zip(&gc[i]).zip(&gc[j]) {
                        *o += a * b;
                    }
                }
                let th = self.masked(&t);
                let di = g.derivative_spectrum(&th, j, 1);
                for (o, x) in out[i].iter_mut().zip(&di) {
                    *o += x;
                }
                if i != j {
                    let dj = g.derivative_spectrum(&th, i, 1);
                    for (o, x) in out[j].iter_mut().zip(&dj) {
                        *o += x;
                    }
                }
            }
        }
        out
    }

    pub fn ericksen_stress_div(&self, d: &[Field]) -> Vec<Field> {
        let gd = self.grads(d);
        self.stress_div_hat(&gd).iter().map(|s| self.grid.inverse(s)).collect()
    }

    /// Unprojected `-v·∇v - ∇·(∇d⊗∇d)` in spectral form.
    fn raw_forcing_hat(&self, v: &[Field], gv: &[Vec<Field>], gd: &[Vec<Field>]) -> Vec<Spectrum> {
        let mut out = self.stress_div_hat(gd);
        for (i, o) in out.iter_mut().enumerate() {
            let adv = self.masked(&dot_grad(v, &gv[i]));
            for (x, a) in o.iter_mut().zip(adv) {
                *x = -*x - a;
            }
        }
        out
    }

    pub fn momentum_rhs(&self, s: &State) -> Result<Vec<Field>, DynamicsError> {
        let g = &self.grid;
        if g.dim() == 1 {
            return Err(DynamicsError::OneDimensional);
        }
        let gv = self.grads(&s.v);
        let gd = self.grads(&s.d);
        let mut f = self.raw_forcing_hat(&s.v, &gv, &gd);
        g.project_spectra(&mut f)?;
        let mu = self.params.mu;
        Ok(f
            .iter()
            .zip(&s.v)
            .map(|(fh, vc)| {
                let vh = g.forward(vc);
                let tot: Spectrum =
                    fh.iter().zip(&vh).zip(g.k_squared()).map(|((a, b), k2)| a - b * (mu * k2)).collect();
                g.inverse(&tot)
            })
            .collect())
    }

    /// `𝕡[-v·∇v - ∇·(∇d⊗∇d)]` for arbitrary `v` and `d`.
    pub fn projected_forcing(&self, v: &[Field], d: &[Field]) -> Result<Vec<Field>, DynamicsError> {
        self.projected_forcing_from(v, &self.grads(v), &self.grads(d))
    }

    /// As [`Dynamics::projected_forcing`] with caller-supplied gradients `gv[i][j] = ∂_j v_i`, `gd[c][j] = ∂_j d_c`.
    pub fn projected_forcing_from(&self, v: &[Field], gv: &[Vec<Field>], gd: &[Vec<Field>]) -> Result<Vec<Field>, DynamicsError> {
        let g = &self.grid;
        if g.dim() == 1 {
            return Err(DynamicsError::OneDimensional);
        }
        let mut f = self.raw_forcing_hat(v, gv, gd);
        g.project_spectra(&mut f)?;
        Ok(f.iter().map(|h| g.inverse(h)).collect())
    }

    /// `∇p = (Id - 𝕡)[-v·∇v - ∇·(∇d⊗∇d)]`.
    pub fn pressure_gradient(&self, s: &State) -> Result<Vec<Field>, DynamicsError> {
        let g = &self.grid;
        if g.dim() == 1 {
            return Err(DynamicsError::OneDimensional);
        }
        let gv = self.grads(&s.v);
        let gd = self.grads(&s.d);
        let raw = self.raw_forcing_hat(&s.v, &gv, &gd);
        let mut proj = raw.clone();
        g.project_spectra(&mut proj)?;
        Ok(raw
            .iter()
            .zip(&proj)
            .map(|(a, b)| {
                let diff: Spectrum = a.iter().zip(b).map(|(x, y)| x - y).collect();
                g.inverse(&diff)
            })
            .collect())
    }

    fn velocity_or_zero<'a>(&self, s: &'a State) -> Option<&'a [Field]> {
        if self.coupled() {
            Some(&s.v)
        } else {
            None
        }
    }

    pub fn lagrange_multiplier(&self, s: &State) -> Field {
        let gd = self.grads(&s.d);
        self.multiplier_from(s, &gd).0
    }

    /// Returns `(λ, m)` with `m = q + v·∇d`.
    fn multiplier_from(&self, s: &State, gd: &[Vec<Field>]) -> (Field, Vec<Field>) {
        let len = self.grid.len();
        let m: Vec<Field> = match self.velocity_or_zero(s) {
            Some(v) => gd
                .iter()
                .zip(&s.q)
                .map(|(gc, qc)| {
                    let mut w = dot_grad(v, gc);
                    add_scaled(&mut w, 1.0, qc);
                    w
                })
                .collect(),
            None => s.q.clone(),
        };
        let mut lam = vec![0.0; len];
        for gc in gd {
            for gcj in gc {
                for (l, x) in lam.iter_mut().zip(gcj) {
                    *l += x * x;
                }
            }
        }
        for mc in &m {
            add_scaled_sq(&mut lam, -self.params.sigma0, mc);
        }
        (lam, m)
    }

    /// `∂_t q` given `∂_t v` (the output of [`Dynamics::momentum_rhs`] on the same state).
    pub fn director_rhs(&self, s: &State, dv_dt: &[Field]) -> Result<Vec<Field>, DynamicsError> {
        if self.params.sigma0 == 0.0 {
            return Err(DynamicsError::ZeroInertia);
        }
        let gd = self.grads(&s.d);
        Ok(self.director_from(s, &gd, dv_dt).0)
    }

    fn director_from(&self, s: &State, gd: &[Vec<Field>], dv_dt: &[Field]) -> (Vec<Field>, Vec<Spectrum>) {
        let g = &self.grid;
        let p = &self.params;
        let inv_s0 = 1.0 / p.sigma0;
        let (lam, m) = self.multiplier_from(s, gd);
        let mut out = Vec::with_capacity(3);
        let mut nonlinear = Vec::with_capacity(3);
        for c in 0..3 {
            // products are dealiased, the linear part is kept exact
            let mut r: Field = lam.iter().zip(&s.d[c]).map(|(l, dd)| l * dd).collect();
            if p.sigma1 != 0.0 {
                for ((x, mc), qc) in r.iter_mut().zip(&m[c]).zip(&s.q[c]) {
                    *x -= p.sigma1 * (mc - qc);
                }
            }
            for x in r.iter_mut() {
                *x *= inv_s0;
            }
            if let Some(v) = self.velocity_or_zero(s) {
                let vt = dot_grad(dv_dt, &gd[c]);
                add_scaled(&mut r, -1.0, &vt);
                let gq = g.gradient(&s.q[c]);
                let vq = dot_grad(v, &gq);
                add_scaled(&mut r, -2.0, &vq);
                let w = dot_grad(v, &gd[c]);
                let wh = self.masked(&w);
                let gw: Vec<Field> =
                    (0..g.dim()).map(|j| g.inverse(&g.derivative_spectrum(&wh, j, 1))).collect();
                let vw = dot_grad(v, &gw);
                add_scaled(&mut r, -1.0, &vw);
            }
            let mut rh = self.masked(&r);
            nonlinear.push(rh.clone());
            let dh = g.forward(&s.d[c]);
            let qh = if p.sigma1 != 0.0 { Some(g.forward(&s.q[c])) } else { None };
            for (i, (x, k2)) in rh.iter_mut().zip(g.k_squared()).enumerate() {
                let mut lin = -dh[i] * *k2;
                if let Some(q) = &qh {
                    lin -= q[i] * p.sigma1;
                }
                *x += lin * inv_s0;
            }
            out.push(g.inverse(&rh));
        }
        (out, nonlinear)
    }

    /// Full time derivative of `(v, d, q)`.
    pub fn tendency(&self, s: &State) -> Tendency {
        let g = &self.grid;
        let gd = self.grads(&s.d);
        let (dv, forcing_hat) = if self.coupled() {
            let gv = self.grads(&s.v);
            let mut f = self.raw_forcing_hat(&s.v, &gv, &gd);
            g.project_spectra(&mut f).expect("coupled model has dim >= 2");
            let mu = self.params.mu;
            let dv = f
                .iter()
                .zip(&s.v)
                .map(|(fh, vc)| {
                    let vh = g.forward(vc);
                    let tot: Spectrum =
                        fh.iter().zip(&vh).zip(g.k_squared()).map(|((a, b), k2)| a - b * (mu * k2)).collect();
                    g.inverse(&tot)
                })
                .collect();
            (dv, f)
        } else {
            (vec![g.zeros(); g.dim()], vec![vec![Complex64::new(0.0, 0.0); g.spectral_len()]; g.dim()])
        };
        let (dq, director_forcing_hat) = self.director_from(s, &gd, &dv);
        Tendency { dv, dq, forcing_hat, director_forcing_hat }
    }
}

fn add_scaled_sq(acc: &mut [f64], a: f64, x: &[f64]) {
    for (y, v) in acc.iter_mut().zip(x) {
        *y += a * v * v;
    }
}

/// Pointwise `Σ_c a_c b_c` over three-component fields.
pub fn pointwise_dot(a: &[Field], b: &[Field]) -> Field {
    let mut out = vec![0.0; a[0].len()];
    for (ac, bc) in a.iter().zip(b) {
        for ((o, x), y) in out.iter_mut().zip(ac).zip(bc) {
            *o += x * y;
        }
    }
    out
}
