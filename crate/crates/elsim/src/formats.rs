//! On-disk formats: scenario config (JSON), time series (CSV) and
//! checkpoints (JSON header line + little-endian f64 payload).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsFrame;
use crate::dynamics::{Params, State};
use crate::spectral::{Field, GridSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("config: {0}")]
    Config(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    BumpDirector,
    BumpVelocity,
    Mixed,
    /// Single-mode geodesic wave map on a periodic box.
    Geodesic,
    /// Taylor-Green vortex with `d ≡ e`.
    TaylorGreen,
}

impl Family {
    /// Families with compact support, for which boundary contact is meaningful.
    pub fn is_localized(self) -> bool {
        matches!(self, Family::BumpDirector | Family::BumpVelocity | Family::Mixed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dim: usize,
    pub n_points: usize,
    pub box_length: f64,
    pub mu: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub epsilon: f64,
    pub family: Family,
    pub support_radius: f64,
    pub horizon: f64,
    pub sample_dt: f64,
    pub kappa_max: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    /// The flagship decay run.
    pub fn flagship() -> Self {
        ScenarioConfig {
            dim: 3,
            n_points: 128,
            box_length: 128.0,
            mu: 1.0,
            sigma0: 1.0,
            sigma1: 0.0,
            epsilon: 1e-2,
            family: Family::Mixed,
            support_radius: 8.0,
            horizon: 40.0,
            sample_dt: 2.0,
            kappa_max: 2,
            seed: 7,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| FormatError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn params(&self) -> Params {
        Params { sigma0: self.sigma0, sigma1: self.sigma1, mu: self.mu, ..Params::default() }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec { dim: self.dim, n: self.n_points, box_length: self.box_length, dealias_fraction: 2.0 / 3.0 }
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        let bad = |m: String| Err(FormatError::Config(m));
        if !(1..=3).contains(&self.dim) {
            return bad(format!("dim must be 1, 2 or 3, got {}", self.dim));
        }
        if self.n_points < 4 || self.n_points % 2 != 0 || self.n_points > 1024 {
            return bad(format!("n_points must be even in [4, 1024], got {}", self.n_points));
        }
        for (name, v) in [("box_length", self.box_length), ("mu", self.mu), ("sigma0", self.sigma0)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.sigma1.is_finite() && self.sigma1 >= 0.0) {
            return bad(format!("sigma1 must be nonnegative, got {}", self.sigma1));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad(format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return bad(format!("horizon must be nonnegative, got {}", self.horizon));
        }
        if !(self.sample_dt.is_finite() && self.sample_dt > 0.0) {
            return bad(format!("sample_dt must be positive, got {}", self.sample_dt));
        }
        if self.kappa_max > crate::diagnostics::KAPPA_CAP {
            return bad(format!("kappa_max must be at most {}, got {}", crate::diagnostics::KAPPA_CAP, self.kappa_max));
        }
        if self.family.is_localized() {
            if !(self.support_radius.is_finite() && self.support_radius > 0.0) {
                return bad(format!("support_radius must be positive, got {}", self.support_radius));
            }
            if self.support_radius + self.horizon >= 0.5 * self.box_length {
                return bad(format!(
                    "support_radius + horizon = {} must stay below L/2 = {}",
                    self.support_radius + self.horizon,
                    0.5 * self.box_length
                ));
            }
        }
        if self.family == Family::TaylorGreen && self.dim < 2 {
            return bad("taylor-green needs dim >= 2".into());
        }
        if matches!(self.family, Family::BumpVelocity | Family::Mixed) && self.dim < 2 {
            return bad("velocity families need dim >= 2".into());
        }
        Ok(())
    }
}

// ---- time series ----

pub fn series_header(kappa: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..=kappa).map(|k| format!("E_v_{k}")));
    h.extend((1..=kappa + 1).map(|k| format!("E_d_{k}")));
    h.extend((2..=kappa + 1).map(|k| format!("X_d_{k}")));
    for s in ["linf_v", "linf_grad_v", "linf_grad2_v", "linf_dtv"] {
        h.push(s.into());
    }
    h.extend((0..=kappa).map(|k| format!("linf_dZd_{k}")));
    for s in ["good_unknown", "nullform_ratio", "mod_energy", "div_v_max", "constraint_drift", "boundary_mass"] {
        h.push(s.into());
    }
    h
}

pub fn frame_row(f: &DiagnosticsFrame) -> Vec<f64> {
    let mut r = vec![f.t];
    r.extend(&f.e_v);
    r.extend(&f.e_d);
    r.extend(&f.x_d);
    r.extend([f.linf_v, f.linf_grad_v, f.linf_grad2_v, f.linf_dtv]);
    r.extend(&f.linf_dzd);
    r.push(f.good_unknown.last().copied().unwrap_or(0.0));
    r.push(f.nullform_ratio);
    r.push(f.modified_energy.last().copied().unwrap_or(0.0));
    r.extend([f.div_v_max, f.constraint_drift, f.boundary_mass]);
    r
}

/// CSV text for a series of frames; floats use the shortest round-trip form.
pub fn write_series(kappa: usize, frames: &[DiagnosticsFrame]) -> String {
    let mut out = series_header(kappa).join(",");
    out.push('\n');
    for f in frames {
        let row = frame_row(f);
        let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// `(t, column)` pairs.
    pub fn pairs(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let t = self.column("t")?;
        let y = self.column(name)?;
        Some(t.into_iter().zip(y).collect())
    }
}

/// Parse a numeric CSV with a header row that includes a `t` column.
pub fn parse_series(text: &[u8]) -> Result<Series, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text);
    let columns: Vec<String> = rdr
        .headers()
        .map_err(|e| FormatError::Csv(e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if !columns.iter().any(|c| c == "t") {
        return Err(FormatError::Csv("missing `t` column".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| FormatError::Csv(e.to_string()))?;
        if rec.len() != columns.len() {
            return Err(FormatError::Csv(format!("row {} has {} cells, expected {}", i + 1, rec.len(), columns.len())));
        }
        let row = rec
            .iter()
            .map(|c| c.trim().parse::<f64>().map_err(|e| FormatError::Csv(format!("row {}: `{c}`: {e}", i + 1))))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(Series { columns, rows })
}

// ---- checkpoints ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldEntry {
    pub name: String,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub grid: GridSpec,
    pub time: f64,
    pub params: Params,
    pub fields: Vec<FieldEntry>,
}

/// A state plus the projected nonlinear term `𝕡[v·∇v + ∇·(∇d⊗∇d)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub grid: GridSpec,
    pub params: Params,
    pub state: State,
    pub nonlinear: Vec<Field>,
}

pub fn encode_checkpoint(c: &Checkpoint) -> Vec<u8> {
    let header = CheckpointHeader {
        grid: c.grid,
        time: c.state.t,
        params: c.params,
        fields: vec![
            FieldEntry { name: "v".into(), components: c.state.v.len() },
            FieldEntry { name: "d".into(), components: c.state.d.len() },
            FieldEntry { name: "q".into(), components: c.state.q.len() },
            FieldEntry { name: "nonlinear".into(), components: c.nonlinear.len() },
        ],
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for f in c.state.v.iter().chain(&c.state.d).chain(&c.state.q).chain(&c.nonlinear) {
        for x in f {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, FormatError> {
    let err = |m: String| FormatError::Checkpoint(m);
    let nl = bytes.iter().position(|b| *b == b'\n').ok_or_else(|| err("missing header line".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl]).map_err(|e| err(e.to_string()))?;
    let g = header.grid;
    if !(1..=3).contains(&g.dim) || g.n < 4 || g.n % 2 != 0 || g.n > 1024 {
        return Err(err(format!("bad grid {g:?}")));
    }
    let len = g.n.checked_pow(g.dim as u32).ok_or_else(|| err("grid too large".into()))?;
    let payload = &bytes[nl + 1..];
    let mut total = 0usize;
    for f in &header.fields {
        total = f
            .components
            .checked_mul(len)
            .and_then(|x| x.checked_mul(8))
            .and_then(|x| x.checked_add(total))
            .ok_or_else(|| err("payload size overflow".into()))?;
    }
    if total != payload.len() {
        return Err(err(format!("payload has {} bytes, manifest needs {total}", payload.len())));
    }
    let names: Vec<&str> = header.fields.iter().map(|f| f.name.as_str()).collect();
    if names != ["v", "d", "q", "nonlinear"] {
        return Err(err(format!("unexpected field manifest {names:?}")));
    }
    let comps: Vec<usize> = header.fields.iter().map(|f| f.components).collect();
    if comps[0] != g.dim || comps[1] != 3 || comps[2] != 3 || (comps[3] != 0 && comps[3] != g.dim) {
        return Err(err(format!("unexpected component counts {comps:?}")));
    }
    let mut chunks = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut take = |n: usize| -> Vec<Field> { (0..n).map(|_| chunks.by_ref().take(len).collect()).collect() };
    let v = take(comps[0]);
    let d = take(comps[1]);
    let q = take(comps[2]);
    let nonlinear = take(comps[3]);
    Ok(Checkpoint { grid: g, params: header.params, state: State { t: header.time, v, d, q }, nonlinear })
}

/// Human-readable table with fixed formatting, used by reports.
pub fn format_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    s
}
