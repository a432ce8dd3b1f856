//! Scenario construction, run orchestration, persistence, decay fitting
//! and report generation.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{apply_vectorfield, boundary_mass, compute_frame, DiagnosticsFrame, FieldHistory, Jet, Target, VectorFieldOp};
use crate::dynamics::{Dynamics, Model, State};
use crate::formats::{decode_checkpoint, encode_checkpoint, write_series, Checkpoint, Family, ScenarioConfig};
use crate::integrator::{detect_blowup, stability_dt, step, total_energy, StepperConfig};
use crate::spectral::{Field, Grid};

/// Boundary-contact threshold on the outer-shell energy fraction.
pub const BOUNDARY_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Format(#[from] crate::formats::FormatError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error(transparent)]
    Diagnostics(#[from] crate::diagnostics::DiagnosticsError),
    #[error("initial data: {0}")]
    InitialData(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Corrupt { path: PathBuf, msg: String },
    #[error("sweep of {0} runs exceeds the cap of {1}")]
    SweepTooLarge(usize, usize),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

/// Sharpness of the compact bump; larger values concentrate the profile and
/// shorten its spectral tail.
pub const BUMP_SHARPNESS: f64 = 16.0;

/// Smooth bump `exp(-aρ²/(1 - ρ²))` on `ρ < 1`, equal to 1 at the origin.
pub fn bump(rho: f64) -> f64 {
    bump_with(rho, BUMP_SHARPNESS)
}

pub fn bump_with(rho: f64, sharpness: f64) -> f64 {
    let r2 = rho * rho;
    if r2 < 1.0 {
        (-sharpness * r2 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> [f64; 3] {
    loop {
        let mut a = [0.0; 3];
        for x in a.iter_mut().take(dim) {
            *x = rng.gen_range(-1.0..1.0);
        }
        let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return a.map(|x| x / n);
        }
    }
}

pub fn model_for(cfg: &ScenarioConfig) -> Model {
    if cfg.dim >= 2 {
        Model::Coupled
    } else {
        Model::DirectorOnly
    }
}

/// Initial state for a scenario. `d₀` is the exponential map of a tangent
/// bump around `e`, `d₁` is projected tangent to `d₀` and `v₀` is a spectral curl.
pub fn make_initial_data(grid: &Grid, cfg: &ScenarioConfig) -> Result<State, HarnessError> {
    cfg.validate()?;
    let e = [0.0, 0.0, 1.0];
    let mut s = State::equilibrium(grid, e);
    let eps = cfg.epsilon;
    let len = grid.len();
    let dim = grid.dim();
    let r = grid.radius();
    let big_r = cfg.support_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match cfg.family {
        Family::Geodesic => {
            let k = 2.0 * std::f64::consts::PI / grid.box_length();
            if eps >= std::f64::consts::FRAC_PI_2 {
                return Err(HarnessError::InitialData(format!("geodesic amplitude {eps} leaves the hemisphere")));
            }
            for i in 0..len {
                let u = eps * (k * grid.coord(0)[i]).sin();
                s.d[0][i] = u.sin();
                s.d[2][i] = u.cos();
            }
        }
        Family::TaylorGreen => {
            let k = 2.0 * std::f64::consts::PI / grid.box_length();
            for i in 0..len {
                let (x1, x2) = (grid.coord(0)[i], grid.coord(1)[i]);
                s.v[0][i] = eps * (k * x1).cos() * (k * x2).sin();
                s.v[1][i] = -eps * (k * x1).sin() * (k * x2).cos();
            }
        }
        Family::BumpDirector | Family::BumpVelocity | Family::Mixed => {
            let a = random_unit(&mut rng, dim);
            let w1 = random_unit(&mut rng, 3);
            let b = random_unit(&mut rng, 3);
            if matches!(cfg.family, Family::BumpDirector | Family::Mixed) {
                for i in 0..len {
                    let phi = bump(r[i] / big_r);
                    if phi == 0.0 {
                        continue;
                    }
                    let ax: f64 = (0..dim).map(|j| a[j] * grid.coord(j)[i]).sum::<f64>() / big_r;
                    // tangent vector at e (third component zero)
                    let wx = eps * phi;
                    let wy = eps * phi * ax;
                    let th = (wx * wx + wy * wy).sqrt();
                    let sinc = if th < 1e-8 { 1.0 - th * th / 6.0 } else { th.sin() / th };
                    s.d[0][i] = sinc * wx;
                    s.d[1][i] = sinc * wy;
                    s.d[2][i] = th.cos();
                    let psi = eps * phi;
                    let q = [psi * w1[0], psi * w1[1], psi * w1[2]];
                    let dq = q[0] * s.d[0][i] + q[1] * s.d[1][i] + q[2] * s.d[2][i];
                    for c in 0..3 {
                        s.q[c][i] = q[c] - dq * s.d[c][i];
                    }
                }
            }
            if matches!(cfg.family, Family::BumpVelocity | Family::Mixed) {
                let chi: Field = r.iter().map(|x| eps * big_r * bump(x / big_r)).collect();
                let gchi = grid.gradient(&chi);
                if dim == 2 {
                    s.v[0] = gchi[1].clone();
                    s.v[1] = gchi[0].iter().map(|x| -x).collect();
                } else {
                    for i in 0..len {
                        let gx = [gchi[0][i], gchi[1][i], gchi[2][i]];
                        s.v[0][i] = gx[1] * b[2] - gx[2] * b[1];
                        s.v[1][i] = gx[2] * b[0] - gx[0] * b[2];
                        s.v[2][i] = gx[0] * b[1] - gx[1] * b[0];
                    }
                }
            }
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Status {
    Completed,
    Blowup { t: f64 },
    BoundaryContact { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Fixed step; `None` uses the CFL rule.
    pub dt: Option<f64>,
    pub cfl_safety: f64,
    pub diagnostics: bool,
    pub store_checkpoints: bool,
    pub h_lambda: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { dt: None, cfl_safety: 0.5, diagnostics: true, store_checkpoints: false, h_lambda: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: ScenarioConfig,
    pub frames: Vec<DiagnosticsFrame>,
    pub checkpoints: Vec<Checkpoint>,
    pub status: Status,
    /// Discrete `H^κ_Λ` surrogate of the initial data.
    pub initial_h_lambda: Option<f64>,
    /// Largest pre-projection sphere drift over the run.
    pub max_drift: f64,
}

impl RunRecord {
    pub fn column(&self, name: &str) -> Vec<(f64, f64)> {
        let header = crate::formats::series_header(self.config.kappa_max);
        let idx = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("unknown column {name}"));
        self.frames.iter().map(|f| (f.t, crate::formats::frame_row(f)[idx])).collect()
    }
}

pub fn checkpoint_of(dy: &Dynamics, s: &State) -> Checkpoint {
    let g = &dy.grid;
    let nonlinear = if dy.coupled() {
        dy.tendency(s).forcing_hat.iter().map(|h| g.inverse(h).into_iter().map(|x| -x).collect()).collect()
    } else {
        Vec::new()
    };
    Checkpoint { grid: g.spec(), params: dy.params, state: s.clone(), nonlinear }
}

pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunRecord, HarnessError> {
    cfg.validate()?;
    let grid = Arc::new(Grid::from_spec(cfg.grid_spec())?);
    let dy = Dynamics::new(grid.clone(), cfg.params(), model_for(cfg))?;
    let mut s = make_initial_data(&grid, cfg)?;
    let baseline = total_energy(&dy, &s);
    let stepper = StepperConfig { cfl_safety: opts.cfl_safety, ..StepperConfig::default() };
    let h_lambda = if opts.h_lambda { Some(h_lambda_norm(&grid, &s, cfg.kappa_max)) } else { None };

    let mut record = RunRecord {
        config: cfg.clone(),
        frames: Vec::new(),
        checkpoints: Vec::new(),
        status: Status::Completed,
        initial_h_lambda: h_lambda,
        max_drift: 0.0,
    };
    let sample = |s: &State, drift: f64, rec: &mut RunRecord| -> Result<(), HarnessError> {
        if opts.diagnostics {
            let hist = FieldHistory::build(&dy, s, cfg.kappa_max)?;
            rec.frames.push(compute_frame(&dy, &hist, cfg.kappa_max, drift)?);
        }
        if opts.store_checkpoints {
            rec.checkpoints.push(checkpoint_of(&dy, s));
        }
        Ok(())
    };
    sample(&s, 0.0, &mut record)?;

    let n_samples = (cfg.horizon / cfg.sample_dt + 1e-9).floor() as usize;
    for k in 1..=n_samples {
        let t_target = k as f64 * cfg.sample_dt;
        let dt_max = opts.dt.unwrap_or_else(|| stability_dt(&grid, &s, opts.cfl_safety));
        let n_sub = ((t_target - s.t) / dt_max - 1e-9).ceil().max(1.0) as usize;
        let h = (t_target - s.t) / n_sub as f64;
        let cfg_step = StepperConfig { dt: h, ..stepper };
        let mut drift = 0.0f64;
        for _ in 0..n_sub {
            match step(&dy, &s, &cfg_step) {
                Ok(o) => {
                    drift = drift.max(o.drift);
                    s = o.state;
                }
                Err(_) => {
                    record.status = Status::Blowup { t: s.t };
                    return Ok(record);
                }
            }
        }
        s.t = t_target;
        record.max_drift = record.max_drift.max(drift);
        if detect_blowup(&dy, &s, baseline, &cfg_step) {
            record.status = Status::Blowup { t: s.t };
            return Ok(record);
        }
        if cfg.family.is_localized() && boundary_mass(&grid, &s) > BOUNDARY_TOL {
            record.status = Status::BoundaryContact { t: s.t };
            return Ok(record);
        }
        sample(&s, drift, &mut record)?;
    }
    Ok(record)
}

/// Discrete `Σ_{|a|≤κ} ||Λ^a v|| + ||∇Λ^a (d - e)|| + ||Λ^a q||` with `Λ = {∇, Ω̃, r∂_r}`.
pub fn h_lambda_norm(g: &Grid, s: &State, kappa: usize) -> f64 {
    let dim = g.dim();
    let mut ops: Vec<Option<VectorFieldOp>> = (0..dim).map(|a| Some(VectorFieldOp::Translation(a))).collect();
    match dim {
        3 => ops.extend((0..3).map(|i| Some(VectorFieldOp::Rotation(i)))),
        2 => ops.push(Some(VectorFieldOp::Rotation(2))),
        _ => {}
    }
    ops.push(None); // r∂_r
    let radial = |f: &[Field]| -> Vec<Field> {
        f.iter()
            .map(|c| {
                let gr = g.gradient(c);
                let mut out = vec![0.0; g.len()];
                for (a, ga) in gr.iter().enumerate() {
                    for ((o, x), d) in out.iter_mut().zip(g.coord(a)).zip(ga) {
                        *o += x * d;
                    }
                }
                out
            })
            .collect()
    };
    let apply = |op: Option<VectorFieldOp>, f: &[Field], target: Target| -> Vec<Field> {
        if f.is_empty() {
            return Vec::new();
        }
        match op {
            Some(o) => {
                let jet = Jet { t: s.t, levels: vec![f.to_vec()] };
                apply_vectorfield(g, o, &jet, target).expect("spatial operator").levels.remove(0)
            }
            None => radial(f),
        }
    };
    let norm = |f: &[Field]| f.iter().map(|c| g.l2_norm_sq(c)).sum::<f64>().sqrt();
    fn walk(
        depth: usize,
        min_idx: usize,
        kappa: usize,
        fields: (Vec<Field>, Vec<Field>, Vec<Field>),
        nops: usize,
        visit: &mut dyn FnMut(&(Vec<Field>, Vec<Field>, Vec<Field>)),
        apply: &dyn Fn(usize, &(Vec<Field>, Vec<Field>, Vec<Field>)) -> (Vec<Field>, Vec<Field>, Vec<Field>),
    ) {
        visit(&fields);
        if depth == kappa {
            return;
        }
        for i in 0..=min_idx.min(nops - 1) {
            let child = apply(i, &fields);
            walk(depth + 1, i, kappa, child, nops, visit, apply);
        }
    }
    let v = if s.v.iter().all(|c| c.iter().all(|x| *x == 0.0)) { Vec::new() } else { s.v.clone() };
    let mut total = 0.0;
    let mut visit = |f: &(Vec<Field>, Vec<Field>, Vec<Field>)| {
        let gd: Vec<Field> = f.1.iter().flat_map(|c| g.gradient(c)).collect();
        total += norm(&f.0) + norm(&gd) + norm(&f.2);
    };
    let step_fn = |i: usize, f: &(Vec<Field>, Vec<Field>, Vec<Field>)| {
        (apply(ops[i], &f.0, Target::Velocity), apply(ops[i], &f.1, Target::Director), apply(ops[i], &f.2, Target::Director))
    };
    walk(0, usize::MAX, kappa, (v, s.d.clone(), s.q.clone()), ops.len(), &mut visit, &step_fn);
    total
}

// ---- decay fitting ----

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 4 samples in the window, got {0}")]
    TooFewSamples(usize),
    #[error("nonpositive value {value} at t = {t}")]
    NonPositive { t: f64, value: f64 },
    #[error("log correction needs t > 0")]
    ZeroTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares slope of `log value` against `log⟨t⟩` on `window`; with
/// `log_corrected`, `value / (ln⟨t⟩)^{1/2}` is fitted instead.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64), log_corrected: bool) -> Result<DecayFit, FitError> {
    let tol = 1e-9 * (1.0 + window.1.abs());
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= window.0 - tol && *t <= window.1 + tol).collect();
    if pts.len() < 4 {
        return Err(FitError::TooFewSamples(pts.len()));
    }
    let mut xs = Vec::with_capacity(pts.len());
    let mut ys = Vec::with_capacity(pts.len());
    for &(t, v) in &pts {
        if !(v > 0.0) {
            return Err(FitError::NonPositive { t, value: v });
        }
        let lt = (1.0 + t * t).sqrt().ln();
        let mut y = v.ln();
        if log_corrected {
            if lt <= 0.0 {
                return Err(FitError::ZeroTime);
            }
            y -= 0.5 * lt.ln();
        }
        xs.push(lt);
        ys.push(y);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { exponent: slope, intercept, residual, samples: pts.len() })
}

/// Fit window truncated to the recorded (pre-contact) frames.
pub fn record_fit(rec: &RunRecord, column: &str, window: (f64, f64), log_corrected: bool) -> Result<DecayFit, FitError> {
    fit_decay(&rec.column(column), window, log_corrected)
}

// ---- sweeps ----

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepAxes {
    pub epsilon: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma1: Vec<f64>,
    pub n_points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub epsilon: f64,
    pub mu: f64,
    pub sigma1: f64,
    pub n_points: usize,
    pub status: String,
    pub slope_linf_v: Option<f64>,
    pub slope_linf_grad_v: Option<f64>,
    pub slope_linf_dzd: Option<f64>,
    pub growth_e_d: Option<f64>,
    pub final_e_d: Option<f64>,
    /// Measured decay constant of a Taylor-Green control at this `μ` (exact value `2μ`).
    pub taylor_green_rate: f64,
}

#[derive(Debug)]
pub struct SweepResult {
    pub configs: Vec<ScenarioConfig>,
    pub records: Vec<Result<RunRecord, String>>,
    pub summary: Vec<SummaryRow>,
}

/// Decay constant of `||v||` for a 2π-periodic Taylor-Green vortex over `t ∈ [0, 0.5]`.
pub fn taylor_green_rate(mu: f64) -> f64 {
    let cfg = ScenarioConfig {
        dim: 2,
        n_points: 16,
        box_length: 2.0 * std::f64::consts::PI,
        mu,
        sigma0: 1.0,
        sigma1: 0.0,
        epsilon: 1.0,
        family: Family::TaylorGreen,
        support_radius: 1.0,
        horizon: 0.5,
        sample_dt: 0.5,
        kappa_max: 0,
        seed: 0,
    };
    let opts = RunOptions { dt: Some(1e-3), diagnostics: true, h_lambda: false, ..Default::default() };
    match run_scenario(&cfg, &opts) {
        Ok(rec) if rec.frames.len() == 2 => {
            let (a, b) = (&rec.frames[0], rec.frames.last().unwrap());
            -0.5 * (b.e_v[0] / a.e_v[0]).ln() / (b.t - a.t)
        }
        _ => f64::NAN,
    }
}

fn window_for(cfg: &ScenarioConfig) -> (f64, f64) {
    let t1 = cfg.horizon;
    ((5.0f64).min(0.125 * t1), t1)
}

pub fn summarize(rec: &RunRecord) -> SummaryRow {
    let cfg = &rec.config;
    let w = window_for(cfg);
    let k = cfg.kappa_max;
    let fit = |c: &str| record_fit(rec, c, w, false).ok().map(|f| f.exponent);
    SummaryRow {
        epsilon: cfg.epsilon,
        mu: cfg.mu,
        sigma1: cfg.sigma1,
        n_points: cfg.n_points,
        status: status_label(&rec.status),
        slope_linf_v: fit("linf_v"),
        slope_linf_grad_v: fit("linf_grad_v"),
        slope_linf_dzd: fit(&format!("linf_dZd_{}", k.min(1))),
        growth_e_d: fit(&format!("E_d_{}", k + 1)),
        final_e_d: rec.frames.last().map(|f| f.e_d[k]),
        taylor_green_rate: taylor_green_rate(cfg.mu),
    }
}

pub fn status_label(s: &Status) -> String {
    match s {
        Status::Completed => "completed".into(),
        Status::Blowup { t } => format!("blowup@{t}"),
        Status::BoundaryContact { t } => format!("boundary-contact@{t}"),
    }
}

/// Sweep description as read from JSON: a base scenario plus axis lists;
/// empty lists keep the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub mu: Vec<f64>,
    #[serde(default)]
    pub sigma1: Vec<f64>,
    #[serde(default)]
    pub n_points: Vec<usize>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_cap() -> usize {
    16
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self, crate::formats::FormatError> {
        let spec: SweepSpec =
            serde_json::from_str(text).map_err(|e| crate::formats::FormatError::Config(e.to_string()))?;
        spec.base.validate()?;
        Ok(spec)
    }

    pub fn axes(&self) -> SweepAxes {
        SweepAxes { epsilon: self.epsilon.clone(), mu: self.mu.clone(), sigma1: self.sigma1.clone(), n_points: self.n_points.clone() }
    }
}

pub fn sweep_summary_csv(rows: &[SummaryRow]) -> String {
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
    let mut out = String::from(
        "epsilon,mu,sigma1,n_points,status,slope_linf_v,slope_linf_grad_v,slope_linf_dZd,growth_E_d,final_E_d,taylor_green_rate\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:?},{:?},{:?},{},{},{},{},{},{},{},{:.6}\n",
            r.epsilon,
            r.mu,
            r.sigma1,
            r.n_points,
            r.status,
            opt(r.slope_linf_v),
            opt(r.slope_linf_grad_v),
            opt(r.slope_linf_dzd),
            opt(r.growth_e_d),
            r.final_e_d.map(|v| format!("{v:.6e}")).unwrap_or_default(),
            r.taylor_green_rate
        ));
    }
    out
}

pub fn run_sweep(base: &ScenarioConfig, axes: &SweepAxes, opts: &RunOptions, cap: usize) -> Result<SweepResult, HarnessError> {
    let or_base = |v: &Vec<f64>, b: f64| if v.is_empty() { vec![b] } else { v.clone() };
    let eps = or_base(&axes.epsilon, base.epsilon);
    let mus = or_base(&axes.mu, base.mu);
    let s1 = or_base(&axes.sigma1, base.sigma1);
    let ns = if axes.n_points.is_empty() { vec![base.n_points] } else { axes.n_points.clone() };
    let total = eps.len() * mus.len() * s1.len() * ns.len();
    if total > cap {
        return Err(HarnessError::SweepTooLarge(total, cap));
    }
    let mut configs = Vec::with_capacity(total);
    for &e in &eps {
        for &m in &mus {
            for &s in &s1 {
                for &n in &ns {
                    configs.push(ScenarioConfig { epsilon: e, mu: m, sigma1: s, n_points: n, ..base.clone() });
                }
            }
        }
    }
    let records: Vec<Result<RunRecord, String>> =
        configs.par_iter().map(|c| run_scenario(c, opts).map_err(|e| e.to_string())).collect();
    let summary = records
        .iter()
        .zip(&configs)
        .map(|(r, c)| match r {
            Ok(rec) => summarize(rec),
            Err(e) => SummaryRow {
                epsilon: c.epsilon,
                mu: c.mu,
                sigma1: c.sigma1,
                n_points: c.n_points,
                status: format!("error: {e}"),
                slope_linf_v: None,
                slope_linf_grad_v: None,
                slope_linf_dzd: None,
                growth_e_d: None,
                final_e_d: None,
                taylor_green_rate: taylor_green_rate(c.mu),
            },
        })
        .collect();
    Ok(SweepResult { configs, records, summary })
}

// ---- persistence ----

#[derive(Serialize, Deserialize)]
struct RecordFile {
    config: ScenarioConfig,
    status: Status,
    initial_h_lambda: Option<f64>,
    max_drift: f64,
    frames: Vec<DiagnosticsFrame>,
    checkpoints: usize,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes).map_err(io_err(path))
}

/// Writes `record.json`, `series.csv` and `checkpoints/ckpt_NNNNN.bin` under `dir`.
pub fn save_record(rec: &RunRecord, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let file = RecordFile {
        config: rec.config.clone(),
        status: rec.status,
        initial_h_lambda: rec.initial_h_lambda,
        max_drift: rec.max_drift,
        frames: rec.frames.clone(),
        checkpoints: rec.checkpoints.len(),
    };
    let p = dir.join("record.json");
    write_file(&p, serde_json::to_string_pretty(&file).expect("record serializes").as_bytes())?;
    write_file(&dir.join("series.csv"), write_series(rec.config.kappa_max, &rec.frames).as_bytes())?;
    if !rec.checkpoints.is_empty() {
        let cd = dir.join("checkpoints");
        fs::create_dir_all(&cd).map_err(io_err(&cd))?;
        for (i, c) in rec.checkpoints.iter().enumerate() {
            write_file(&cd.join(format!("ckpt_{i:05}.bin")), &encode_checkpoint(c))?;
        }
    }
    Ok(())
}

/// Records under `dir`: `dir` itself if it holds `record.json`, otherwise
/// every immediate subdirectory that does, in name order.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    if dir.join("record.json").is_file() {
        return Ok(vec![load_record(dir)?]);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("record.json").is_file())
        .collect();
    subdirs.sort();
    subdirs.iter().map(|p| load_record(p)).collect()
}

pub fn load_record(dir: &Path) -> Result<RunRecord, HarnessError> {
    let p = dir.join("record.json");
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    let file: RecordFile = serde_json::from_str(&text).map_err(|e| HarnessError::Corrupt { path: p.clone(), msg: e.to_string() })?;
    let mut checkpoints = Vec::with_capacity(file.checkpoints);
    for i in 0..file.checkpoints {
        let cp = dir.join("checkpoints").join(format!("ckpt_{i:05}.bin"));
        let bytes = fs::read(&cp).map_err(io_err(&cp))?;
        checkpoints.push(decode_checkpoint(&bytes).map_err(|e| HarnessError::Corrupt { path: cp.clone(), msg: e.to_string() })?);
    }
    Ok(RunRecord {
        config: file.config,
        frames: file.frames,
        checkpoints,
        status: file.status,
        initial_h_lambda: file.initial_h_lambda,
        max_drift: file.max_drift,
    })
}

// ---- reports ----

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportBundle {
    pub files: Vec<PathBuf>,
}

fn tracked_columns(kappa: usize) -> Vec<String> {
    vec![
        "linf_v".into(),
        "linf_grad_v".into(),
        "linf_grad2_v".into(),
        format!("linf_dZd_{}", kappa.min(1)),
        format!("E_d_{}", kappa + 1),
        "nullform_ratio".into(),
    ]
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// Log-log plot of one column with its fitted line, as a small SVG document.
pub fn render_svg(title: &str, pts: &[(f64, f64)], fit: Option<&DecayFit>) -> String {
    let (w, h, m) = (480.0, 320.0, 48.0);
    let data: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(_, y)| *y > 0.0 && y.is_finite())
        .map(|(t, y)| ((1.0 + t * t).sqrt().ln(), y.ln()))
        .collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{m}\" y=\"20\" font-family=\"monospace\" font-size=\"12\">{title} (log-log vs &lt;t&gt;)</text>\n"
    );
    if data.len() >= 2 {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for (x, y) in &data {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        svg.push_str(&format!(
            "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
            w - 2.0 * m,
            h - 2.0 * m
        ));
        let line: Vec<String> = data.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        svg.push_str(&format!("<polyline fill=\"none\" stroke=\"steelblue\" points=\"{}\"/>\n", line.join(" ")));
        if let Some(f) = fit {
            let (ya, yb) = (f.intercept + f.exponent * x0, f.intercept + f.exponent * x1);
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"firebrick\" stroke-dasharray=\"4 3\"/>\n",
                px(x0),
                py(ya),
                px(x1),
                py(yb)
            ));
            svg.push_str(&format!(
                "<text x=\"{m}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">slope {:.4}</text>\n",
                h - 12.0,
                f.exponent
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{m}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\">ln&lt;t&gt; {x0:.3} .. {x1:.3}, ln y {y0:.3} .. {y1:.3}</text>\n",
            h - m + 16.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

const SUMMARY_HEADER: &str =
    "run,family,dim,n_points,epsilon,mu,sigma1,status,t_end,slope_linf_v,slope_linf_grad_v,slope_linf_dZd,growth_E_d,h_lambda_0";

/// Writes `summary.csv` plus, per run, `series.csv`, `loglog.csv` and one SVG per tracked column.
pub fn emit_report(records: &[RunRecord], out: &Path) -> Result<ReportBundle, HarnessError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut bundle = ReportBundle::default();
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for (i, rec) in records.iter().enumerate() {
        let cfg = &rec.config;
        let w = window_for(cfg);
        let row = summarize_light(rec, w);
        summary.push_str(&format!(
            "{i},{},{},{},{:?},{:?},{:?},{},{},{},{},{},{},{}\n",
            serde_json::to_value(cfg.family).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            cfg.dim,
            cfg.n_points,
            cfg.epsilon,
            cfg.mu,
            cfg.sigma1,
            status_label(&rec.status),
            rec.frames.last().map(|f| format!("{:?}", f.t)).unwrap_or_default(),
            fmt_opt(row.0),
            fmt_opt(row.1),
            fmt_opt(row.2),
            fmt_opt(row.3),
            rec.initial_h_lambda.map(|x| format!("{x:.6e}")).unwrap_or_default(),
        ));
        let dir = out.join(format!("run_{i:03}"));
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let series = dir.join("series.csv");
        write_file(&series, write_series(cfg.kappa_max, &rec.frames).as_bytes())?;
        bundle.files.push(series);
        let mut loglog = String::from("column,t,log_t,log_value,fit_log_value\n");
        for col in tracked_columns(cfg.kappa_max) {
            let pts = rec.column(&col);
            let fit = fit_decay(&pts, w, false).ok();
            for (t, y) in &pts {
                let lt = (1.0 + t * t).sqrt().ln();
                let ly = if *y > 0.0 { format!("{:.12e}", y.ln()) } else { String::new() };
                let lf = fit.map(|f| format!("{:.12e}", f.intercept + f.exponent * lt)).unwrap_or_default();
                loglog.push_str(&format!("{col},{t:?},{lt:.12e},{ly},{lf}\n"));
            }
            let p = dir.join(format!("{col}.svg"));
            write_file(&p, render_svg(&col, &pts, fit.as_ref()).as_bytes())?;
            bundle.files.push(p);
        }
        let p = dir.join("loglog.csv");
        write_file(&p, loglog.as_bytes())?;
        bundle.files.push(p);
    }
    let p = out.join("summary.csv");
    write_file(&p, summary.as_bytes())?;
    bundle.files.insert(0, p);
    Ok(bundle)
}

fn summarize_light(rec: &RunRecord, w: (f64, f64)) -> (Option<f64>, Option<f64>, Option<f64>, Option<f64>) {
    let k = rec.config.kappa_max;
    let fit = |c: &str| record_fit(rec, c, w, false).ok().map(|f| f.exponent);
    (fit("linf_v"), fit("linf_grad_v"), fit(&format!("linf_dZd_{}", k.min(1))), fit(&format!("E_d_{}", k + 1)))
}
