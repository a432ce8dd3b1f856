//! Vector-field calculus on solution snapshots: generalized energies,
//! the Klainerman-Sideris weighted norm, light-cone quantities and
//! modified energies.
//!
//! Time derivatives are never differenced. A [`FieldHistory`] stores the
//! jet `(f, ∂_t f, ∂_t² f, ...)` obtained by substituting the equations:
//! `∂_t^{j+1} U = d^j/ds^j F(Σ_{i≤j} s^i/i! ∂_t^i U)|_{s=0}`, which is exact
//! because `F` is polynomial; the derivative in `s` is taken with a
//! central stencil wide enough to be exact for that degree.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Dynamics, State};
use crate::harness::fit_decay;
use crate::spectral::{max_abs, Field, Grid, Spectrum};

pub const KAPPA_CAP: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("time derivative requested without enough history")]
    MissingHistory,
    #[error("operator {0:?} is not defined in dimension {1}")]
    InvalidOperator(VectorFieldOp, usize),
    #[error("order {kappa} exceeds the history depth {max}")]
    KappaTooLarge { kappa: usize, max: usize },
    #[error("weighted norm needs kappa >= 2, got {0}")]
    KappaTooSmall(usize),
    #[error("need at least 4 frames, got {0}")]
    InsufficientData(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VectorFieldOp {
    TimeDerivative,
    /// `∂_{axis+1}`.
    Translation(usize),
    /// `Ω̃_{axis+1}`; only `Rotation(2)` exists in two dimensions.
    Rotation(usize),
    Scaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Velocity,
    Director,
    Scalar,
}

/// The ordered generator list `(S, ∂_t, ∂_1.., Ω̃..)` for a dimension.
pub fn generators(dim: usize) -> Vec<VectorFieldOp> {
    let mut ops = vec![VectorFieldOp::Scaling, VectorFieldOp::TimeDerivative];
    ops.extend((0..dim).map(VectorFieldOp::Translation));
    match dim {
        3 => ops.extend((0..3).map(VectorFieldOp::Rotation)),
        2 => ops.push(VectorFieldOp::Rotation(2)),
        _ => {}
    }
    ops
}

/// Time-derivative levels of a multi-component field at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub t: f64,
    /// `levels[j][c] = ∂_t^j f_c`.
    pub levels: Vec<Vec<Field>>,
}

impl Jet {
    pub fn components(&self) -> usize {
        self.levels.first().map_or(0, |l| l.len())
    }
    pub fn depth(&self) -> usize {
        self.levels.len()
    }
    fn truncated(&self, n: usize) -> Jet {
        Jet { t: self.t, levels: self.levels[..n.min(self.levels.len())].to_vec() }
    }
}

/// Snapshot of `(v, d)` with enough exact time derivatives for the
/// vector fields `∂_t` and `S`.
#[derive(Debug, Clone)]
pub struct FieldHistory {
    pub t: f64,
    pub v: Jet,
    pub d: Jet,
    /// Largest `κ` this history supports.
    pub kappa_max: usize,
}

/// Central finite-difference weights for `d^m/ds^m` at 0 on nodes `-p..=p`.
pub(crate) fn stencil_weights(m: usize, p: usize) -> Vec<f64> {
    // Fornberg's recursion on integer nodes
    let nodes: Vec<f64> = (-(p as i64)..=p as i64).map(|x| x as f64).collect();
    let n = nodes.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0];
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i];
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl FieldHistory {
    /// Jets deep enough for diagnostics up to order `kappa`.
    pub fn build(dy: &Dynamics, s: &State, kappa: usize) -> Result<Self, DiagnosticsError> {
        if kappa > KAPPA_CAP {
            return Err(DiagnosticsError::KappaTooLarge { kappa, max: KAPPA_CAP });
        }
        // director needs kappa + 2 levels, velocity kappa + 1
        let d_levels = kappa + 2;
        let mut vl: Vec<Vec<Field>> = vec![s.v.clone()];
        let mut dl: Vec<Vec<Field>> = vec![s.d.clone(), s.q.clone()];
        let t0 = dy.tendency(s);
        vl.push(t0.dv);
        dl.push(t0.dq);
        // level j+1 of (v, q) from the j-th s-derivative of F along the Taylor curve
        let mut j: usize = 2;
        while dl.len() < d_levels {
            let degree = 5 * (j - 1);
            let p = degree.div_ceil(2).max(j.div_ceil(2) + 1);
            let w = stencil_weights(j - 1, p);
            let scale = (1..j)
                .map(|i| {
                    let a = vl[i].iter().chain(&dl[i]).chain(&dl[i + 1]).map(|c| max_abs(c)).fold(0.0, f64::max);
                    a.powf(1.0 / i as f64)
                })
                .fold(1.0f64, f64::max);
            let h = 0.5 / scale;
            let len = s.d[0].len();
            let mut acc_v = vec![vec![0.0; len]; s.v.len()];
            let mut acc_q = vec![vec![0.0; len]; 3];
            for (idx, wm) in w.iter().enumerate() {
                if *wm == 0.0 {
                    continue;
                }
                let sv = (idx as f64 - p as f64) * h;
                let mut st = s.clone();
                for i in 1..j {
                    let coef = sv.powi(i as i32) / factorial(i);
                    axpy_all(&mut st.v, coef, &vl[i]);
                    axpy_all(&mut st.d, coef, &dl[i]);
                    axpy_all(&mut st.q, coef, &dl[i + 1]);
                }
                let tn = dy.tendency(&st);
                let c = wm / h.powi(j as i32 - 1);
                axpy_all(&mut acc_v, c, &tn.dv);
                axpy_all(&mut acc_q, c, &tn.dq);
            }
            vl.push(acc_v);
            dl.push(acc_q);
            j += 1;
        }
        vl.truncate(kappa + 1);
        dl.truncate(d_levels);
        let v_levels = if dy.coupled() { vl } else { vec![Vec::new(); kappa + 1] };
        Ok(FieldHistory { t: s.t, v: Jet { t: s.t, levels: v_levels }, d: Jet { t: s.t, levels: dl }, kappa_max: kappa })
    }

    /// History from explicitly supplied jets.
    pub fn from_jets(v: Jet, d: Jet) -> Self {
        let kappa_max = v.depth().saturating_sub(1).min(d.depth().saturating_sub(2));
        FieldHistory { t: d.t, v, d, kappa_max }
    }

    pub fn state(&self) -> State {
        State {
            t: self.t,
            v: self.v.levels[0].clone(),
            d: self.d.levels[0].clone(),
            q: self.d.levels.get(1).cloned().unwrap_or_default(),
        }
    }
}

fn axpy_all(y: &mut [Field], a: f64, x: &[Field]) {
    for (yc, xc) in y.iter_mut().zip(x) {
        for (p, q) in yc.iter_mut().zip(xc) {
            *p += a * q;
        }
    }
}

/// Gradients of every level below `upto`: `[level][comp][axis]`.
fn jet_gradients(g: &Grid, jet: &Jet, upto: usize) -> Vec<Vec<Vec<Field>>> {
    jet.levels.iter().take(upto).map(|lv| lv.iter().map(|c| g.gradient(c)).collect()).collect()
}

fn check_op(op: VectorFieldOp, dim: usize) -> Result<(), DiagnosticsError> {
    let ok = match op {
        VectorFieldOp::Translation(a) => a < dim,
        VectorFieldOp::Rotation(i) => (dim == 3 && i < 3) || (dim == 2 && i == 2),
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(DiagnosticsError::InvalidOperator(op, dim))
    }
}

fn apply_with_grads(
    g: &Grid,
    op: VectorFieldOp,
    jet: &Jet,
    grads: &[Vec<Vec<Field>>],
    target: Target,
    out_levels: usize,
) -> Result<Jet, DiagnosticsError> {
    let t = jet.t;
    let ncomp = jet.components();
    let levels = match op {
        VectorFieldOp::TimeDerivative => {
            if jet.depth() < out_levels + 1 {
                return Err(DiagnosticsError::MissingHistory);
            }
            jet.levels[1..=out_levels].to_vec()
        }
        VectorFieldOp::Translation(a) => (0..out_levels).map(|j| grads[j].iter().map(|gc| gc[a].clone()).collect()).collect(),
        VectorFieldOp::Rotation(i) => {
            let (ja, ka) = ((i + 1) % 3, (i + 2) % 3);
            let (xj, xk) = (g.coord(ja), g.coord(ka));
            (0..out_levels)
                .map(|j| {
                    let mut lv: Vec<Field> = grads[j]
                        .iter()
                        .map(|gc| {
                            xj.iter()
                                .zip(&gc[ka])
                                .zip(xk.iter().zip(&gc[ja]))
                                .map(|((a, b), (c, e))| a * b - c * e)
                                .collect()
                        })
                        .collect();
                    if target == Target::Velocity && ncomp > 0 {
                        let src = &jet.levels[j];
                        for (a, b) in lv[ja].iter_mut().zip(&src[ka]) {
                            *a += b;
                        }
                        for (a, b) in lv[ka].iter_mut().zip(&src[ja]) {
                            *a -= b;
                        }
                    }
                    lv
                })
                .collect()
        }
        VectorFieldOp::Scaling => {
            if jet.depth() < out_levels + 1 {
                return Err(DiagnosticsError::MissingHistory);
            }
            (0..out_levels)
                .map(|j| {
                    (0..ncomp)
                        .map(|c| {
                            let mut f: Field =
                                jet.levels[j + 1][c].iter().zip(&jet.levels[j][c]).map(|(a, b)| t * a + j as f64 * b).collect();
                            for (a, ga) in grads[j][c].iter().enumerate() {
                                for ((y, x), dg) in f.iter_mut().zip(g.coord(a)).zip(ga) {
                                    *y += x * dg;
                                }
                            }
                            f
                        })
                        .collect()
                })
                .collect()
        }
    };
    Ok(Jet { t, levels })
}

/// Apply one generator to a jet. Spatial generators act level by level;
/// `∂_t` and `S` consume one level.
pub fn apply_vectorfield(g: &Grid, op: VectorFieldOp, jet: &Jet, target: Target) -> Result<Jet, DiagnosticsError> {
    check_op(op, g.dim())?;
    let out = match op {
        VectorFieldOp::TimeDerivative | VectorFieldOp::Scaling => {
            if jet.depth() < 2 {
                return Err(DiagnosticsError::MissingHistory);
            }
            jet.depth() - 1
        }
        _ => jet.depth(),
    };
    let grads = match op {
        VectorFieldOp::TimeDerivative => Vec::new(),
        _ => jet_gradients(g, jet, out),
    };
    apply_with_grads(g, op, jet, &grads, target, out)
}

/// Apply `Z^a = S^{a_1} Γ^{a'}` given as an outer-to-inner operator string.
pub fn apply_string(g: &Grid, ops: &[VectorFieldOp], jet: &Jet, target: Target) -> Result<Jet, DiagnosticsError> {
    let mut cur = jet.clone();
    for op in ops.iter().rev() {
        cur = apply_vectorfield(g, *op, &cur, target)?;
    }
    Ok(cur)
}

/// Weight used by the Klainerman-Sideris norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XWeight {
    /// `⟨r - t⟩²`.
    Standard,
    /// Weight 1, for consistency checks.
    Unit,
}

/// Per-order sums over all `Z^a` with `|a| = k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Survey {
    pub kappa: usize,
    /// `Σ ||Z^a v||²`.
    pub e_v: Vec<f64>,
    /// `Σ ||∂Z^a d||²`.
    pub e_d: Vec<f64>,
    /// `Σ ||w ∂²Z^a d||²`, orders `0..kappa`.
    pub x_d: Vec<f64>,
    /// `max |∂Z^a d|`.
    pub linf_dzd: Vec<f64>,
    /// `Σ ||⟨t⟩(∂_t + ∂_r)∂Z^a d||²` over the light-cone region, orders `0..kappa`.
    pub good_unknown: Vec<f64>,
    /// Modified energy density integrals.
    pub modified: Vec<f64>,
    pub region_empty: bool,
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

struct Ctx<'a> {
    g: &'a Grid,
    ops: Vec<VectorFieldOp>,
    kappa: usize,
    weight: Vec<f64>,
    region: Vec<bool>,
    omega: Vec<Field>,
    tb: f64,
    root_v: Vec<Field>,
    root_gd: Vec<Vec<Field>>,
    out: Survey,
}

struct Node {
    depth: usize,
    min_idx: usize,
    v: Jet,
    d: Jet,
}

impl Ctx<'_> {
    fn d_levels(&self, depth: usize) -> usize {
        self.kappa - depth + 2
    }
    fn v_levels(&self, depth: usize) -> usize {
        self.kappa - depth + 1
    }

    fn visit(&mut self, node: Node) -> Result<(), DiagnosticsError> {
        let g = self.g;
        let k = node.depth;
        let dim = g.dim();
        let want_children = k < self.kappa;
        let dgrad_levels = if want_children { self.d_levels(k) - 1 } else { 1 };
        let gd = jet_gradients(g, &node.d, dgrad_levels.max(if k < self.kappa { 2 } else { 1 }));
        let gv = if want_children && node.v.components() > 0 {
            jet_gradients(g, &node.v, self.v_levels(k) - 1)
        } else {
            Vec::new()
        };

        let a0 = &node.d.levels[0];
        let a1 = &node.d.levels[1];
        let vz = &node.v.levels[0];
        let len = g.len();
        let dv = g.cell_volume();

        // energies and sup norms
        let mut ev = 0.0;
        for c in vz {
            ev += c.iter().map(|x| x * x).sum::<f64>();
        }
        let mut dens = vec![0.0; len];
        for c in 0..3 {
            for (p, x) in dens.iter_mut().zip(&a1[c]) {
                *p += x * x;
            }
            for ga in &gd[0][c] {
                for (p, x) in dens.iter_mut().zip(ga) {
                    *p += x * x;
                }
            }
        }
        let ed: f64 = dens.iter().sum();
        let linf = dens.iter().fold(0.0f64, |m, x| m.max(*x)).sqrt();

        // modified energy: ½|∂Z d|² - ½|(v·∇)Z d|² + (Z v·∇)d·∂_t Z d + ½|(Z v·∇)d|²
        let mut modi = 0.5 * ed;
        if !self.root_v.is_empty() {
            for c in 0..3 {
                for i in 0..len {
                    let mut vgz = 0.0;
                    let mut zvgd = 0.0;
                    for a in 0..dim {
                        vgz += self.root_v[a][i] * gd[0][c][a][i];
                        zvgd += vz[a][i] * self.root_gd[c][a][i];
                    }
                    modi += -0.5 * vgz * vgz + zvgd * a1[c][i] + 0.5 * zvgd * zvgd;
                }
            }
        }

        self.out.e_v[k] += ev * dv;
        self.out.e_d[k] += ed * dv;
        self.out.linf_dzd[k] = self.out.linf_dzd[k].max(linf);
        self.out.modified[k] += modi * dv;

        if k < self.kappa {
            let a2 = &node.d.levels[2];
            let mut xsum = 0.0;
            let mut good = 0.0;
            for c in 0..3 {
                let spec: Spectrum = g.forward(&a0[c]);
                let mut hess: Vec<Vec<Field>> = vec![Vec::new(); dim];
                for i in 0..dim {
                    let di = g.derivative_spectrum(&spec, i, 1);
                    for j in 0..dim {
                        if j < i {
                            let h = hess[j][i].clone();
                            hess[i].push(h);
                        } else {
                            hess[i].push(g.inverse(&g.derivative_spectrum(&di, j, 1)));
                        }
                    }
                }
                let ht = &gd[1][c];
                for p in 0..len {
                    let w = self.weight[p];
                    let mut s2 = a2[c][p] * a2[c][p];
                    for i in 0..dim {
                        s2 += 2.0 * ht[i][p] * ht[i][p];
                        for j in 0..dim {
                            s2 += hess[i][j][p] * hess[i][j][p];
                        }
                    }
                    xsum += w * s2;
                    if self.region[p] {
                        let mut gt = a2[c][p];
                        for i in 0..dim {
                            gt += self.omega[i][p] * ht[i][p];
                        }
                        good += gt * gt;
                        for j in 0..dim {
                            let mut gj = ht[j][p];
                            for i in 0..dim {
                                gj += self.omega[i][p] * hess[i][j][p];
                            }
                            good += gj * gj;
                        }
                    }
                }
            }
            self.out.x_d[k] += xsum * dv;
            self.out.good_unknown[k] += self.tb * self.tb * good * dv;
        }

        if want_children {
            let top = node.min_idx.min(self.ops.len() - 1);
            let dl = self.d_levels(k + 1);
            let vl = self.v_levels(k + 1);
            for i in 0..=top {
                let op = self.ops[i];
                let cd = apply_with_grads(g, op, &node.d, &gd, Target::Director, dl)?;
                let cv = if node.v.components() > 0 {
                    apply_with_grads(g, op, &node.v, &gv, Target::Velocity, vl)?
                } else {
                    Jet { t: node.v.t, levels: vec![Vec::new(); vl] }
                };
                self.visit(Node { depth: k + 1, min_idx: i, v: cv, d: cd })?;
            }
        }
        Ok(())
    }
}

/// One pass over every `Z^a` with `|a| ≤ kappa`.
pub fn survey(g: &Grid, hist: &FieldHistory, kappa: usize, weight: XWeight) -> Result<Survey, DiagnosticsError> {
    if kappa > hist.kappa_max {
        return Err(DiagnosticsError::KappaTooLarge { kappa, max: hist.kappa_max });
    }
    let t = hist.t;
    let tb = bracket(t);
    let len = g.len();
    let r = g.radius();
    let w: Vec<f64> = match weight {
        XWeight::Standard => r.iter().map(|x| 1.0 + (x - t) * (x - t)).collect(),
        XWeight::Unit => vec![1.0; len],
    };
    let region: Vec<bool> = r.iter().map(|x| *x >= 0.5 * tb).collect();
    let omega: Vec<Field> = (0..g.dim())
        .map(|a| g.coord(a).iter().zip(r).map(|(x, rr)| if *rr > 0.0 { x / rr } else { 0.0 }).collect())
        .collect();
    let root_gd: Vec<Vec<Field>> = hist.d.levels[0].iter().map(|c| g.gradient(c)).collect();
    let mut ctx = Ctx {
        g,
        ops: generators(g.dim()),
        kappa,
        weight: w,
        region: region.clone(),
        omega,
        tb,
        root_v: hist.v.levels[0].clone(),
        root_gd,
        out: Survey {
            kappa,
            e_v: vec![0.0; kappa + 1],
            e_d: vec![0.0; kappa + 1],
            x_d: vec![0.0; kappa],
            linf_dzd: vec![0.0; kappa + 1],
            good_unknown: vec![0.0; kappa],
            modified: vec![0.0; kappa + 1],
            region_empty: !region.iter().any(|x| *x),
        },
    };
    let root = Node {
        depth: 0,
        min_idx: usize::MAX,
        v: hist.v.truncated(kappa + 1),
        d: hist.d.truncated(kappa + 2),
    };
    ctx.visit(root)?;
    Ok(ctx.out)
}

fn cumulative(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// `(E^v_κ, E^d_{κ+1})`.
pub fn generalized_energy(g: &Grid, hist: &FieldHistory, kappa: usize) -> Result<(f64, f64), DiagnosticsError> {
    let s = survey(g, hist, kappa, XWeight::Standard)?;
    Ok((s.e_v.iter().sum(), s.e_d.iter().sum()))
}

/// `X^d_κ = ||⟨r - t⟩ ∂² Z^{κ-2} d||²`.
pub fn weighted_x_norm(g: &Grid, hist: &FieldHistory, kappa: usize, weight: XWeight) -> Result<f64, DiagnosticsError> {
    if kappa < 2 {
        return Err(DiagnosticsError::KappaTooSmall(kappa));
    }
    let s = survey(g, hist, kappa - 1, weight)?;
    Ok(s.x_d.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightCone {
    /// `||⟨t⟩(∂_t + ∂_r)∂Z^a d||` over `r ≥ ⟨t⟩/2`, aggregated over `|a| ≤ κ`.
    pub good_unknown: f64,
    /// `||(ω∂_t + ∇)d|| / ||∂d||` over the same region; 0 when the denominator vanishes.
    pub nullform_ratio: f64,
    pub region_empty: bool,
}

fn null_ratio(g: &Grid, hist: &FieldHistory) -> (f64, bool) {
    let t = hist.t;
    let tb = bracket(t);
    let r = g.radius();
    let d = &hist.d.levels[0];
    let q = &hist.d.levels[1];
    let mut num = 0.0;
    let mut den = 0.0;
    let mut any = false;
    for c in 0..3 {
        let gr = g.gradient(&d[c]);
        for p in 0..g.len() {
            if r[p] < 0.5 * tb {
                continue;
            }
            any = true;
            den += q[c][p] * q[c][p];
            for i in 0..g.dim() {
                let w = g.coord(i)[p] / r[p];
                let x = w * q[c][p] + gr[i][p];
                num += x * x;
                den += gr[i][p] * gr[i][p];
            }
        }
    }
    (if den > 0.0 { (num / den).sqrt() } else { 0.0 }, !any)
}

pub fn lightcone_diagnostics(g: &Grid, hist: &FieldHistory, kappa: usize) -> Result<LightCone, DiagnosticsError> {
    let s = survey(g, hist, kappa + 1, XWeight::Standard)?;
    let (ratio, empty) = null_ratio(g, hist);
    Ok(LightCone { good_unknown: s.good_unknown.iter().sum::<f64>().sqrt(), nullform_ratio: ratio, region_empty: empty })
}

/// `∫ Σ_i (ω_i∂_t + ∂_i)b·(ω_i∂_t - ∂_i)c` over the light-cone region, for
/// three-component `b`, `c` with time derivatives `bt`, `ct`.
pub fn null_form_pairing(g: &Grid, t: f64, b: &[Field], bt: &[Field], c: &[Field], ct: &[Field]) -> f64 {
    let tb = bracket(t);
    let r = g.radius();
    let mut acc = 0.0;
    for k in 0..b.len() {
        let gb = g.gradient(&b[k]);
        let gc = g.gradient(&c[k]);
        for p in 0..g.len() {
            if r[p] < 0.5 * tb {
                continue;
            }
            for i in 0..g.dim() {
                let w = g.coord(i)[p] / r[p];
                acc += (w * bt[k][p] + gb[i][p]) * (w * ct[k][p] - gc[i][p]);
            }
        }
    }
    acc * g.cell_volume()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayProfile {
    pub linf_v: f64,
    pub linf_grad_v: f64,
    pub linf_grad2_v: f64,
    pub linf_dtv: f64,
    pub linf_dzd: Vec<f64>,
}

fn pointwise_max_norm(fields: &[Field]) -> f64 {
    if fields.is_empty() {
        return 0.0;
    }
    let len = fields[0].len();
    (0..len).map(|i| fields.iter().map(|f| f[i] * f[i]).sum::<f64>()).fold(0.0, f64::max).sqrt()
}

fn velocity_sup_norms(g: &Grid, hist: &FieldHistory) -> (f64, f64, f64, f64) {
    let v = &hist.v.levels[0];
    if v.is_empty() {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let mut grads = Vec::new();
    let mut hess = Vec::new();
    for c in v {
        let s = g.forward(c);
        for i in 0..g.dim() {
            let di = g.derivative_spectrum(&s, i, 1);
            grads.push(g.inverse(&di));
            for j in 0..g.dim() {
                hess.push(g.inverse(&g.derivative_spectrum(&di, j, 1)));
            }
        }
    }
    let dtv = hist.v.levels.get(1).map_or(0.0, |l| pointwise_max_norm(l));
    (pointwise_max_norm(v), pointwise_max_norm(&grads), pointwise_max_norm(&hess), dtv)
}

pub fn pointwise_decay_profile(g: &Grid, hist: &FieldHistory, kappa: usize) -> Result<DecayProfile, DiagnosticsError> {
    let s = survey(g, hist, kappa, XWeight::Standard)?;
    let (a, b, c, d) = velocity_sup_norms(g, hist);
    Ok(DecayProfile { linf_v: a, linf_grad_v: b, linf_grad2_v: c, linf_dtv: d, linf_dzd: s.linf_dzd })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedEnergy {
    pub value: f64,
    /// `½ E^d_{κ+1}`.
    pub half_energy: f64,
    /// `value ∈ [½·half_energy, 2·half_energy]`.
    pub perturbative: bool,
}

fn equivalence(value: f64, half: f64) -> bool {
    if half == 0.0 {
        value == 0.0
    } else {
        value >= 0.5 * half && value <= 2.0 * half
    }
}

pub fn modified_energy(g: &Grid, hist: &FieldHistory, kappa: usize) -> Result<ModifiedEnergy, DiagnosticsError> {
    let s = survey(g, hist, kappa, XWeight::Standard)?;
    let value: f64 = s.modified.iter().sum();
    let half = 0.5 * s.e_d.iter().sum::<f64>();
    Ok(ModifiedEnergy { value, half_energy: half, perturbative: equivalence(value, half) })
}

/// All monitored quantities at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsFrame {
    pub t: f64,
    /// `E^v_κ`, κ = 0..=κ_max.
    pub e_v: Vec<f64>,
    /// `E^d_{κ+1}`, κ = 0..=κ_max.
    pub e_d: Vec<f64>,
    /// `X^d_κ`, κ = 2..=κ_max+1.
    pub x_d: Vec<f64>,
    pub linf_v: f64,
    pub linf_grad_v: f64,
    pub linf_grad2_v: f64,
    pub linf_dtv: f64,
    pub linf_dzd: Vec<f64>,
    /// Good-unknown norm aggregated over `|a| ≤ k`, k = 0..κ_max.
    pub good_unknown: Vec<f64>,
    pub nullform_ratio: f64,
    /// Modified energy summed over `|a| ≤ κ`, κ = 0..=κ_max.
    pub modified_energy: Vec<f64>,
    pub div_v_max: f64,
    pub constraint_drift: f64,
    pub boundary_mass: f64,
}

impl DiagnosticsFrame {
    pub fn kappa_max(&self) -> usize {
        self.e_v.len() - 1
    }
}

/// Fraction of the director energy `|q|² + |∇d|²` lying in the outer shell
/// `max_a |x_a| > L/2 - L/16`. The velocity is left out: its pressure-driven
/// tails reach the boundary instantly.
pub fn boundary_mass(g: &Grid, s: &State) -> f64 {
    let edge = 0.5 * g.box_length() - g.box_length() / 16.0;
    let mut dens = vec![0.0; g.len()];
    let add = |dens: &mut Vec<f64>, f: &Field| {
        for (p, x) in dens.iter_mut().zip(f) {
            *p += x * x;
        }
    };
    for c in &s.q {
        add(&mut dens, c);
    }
    for c in &s.d {
        for gc in g.gradient(c) {
            add(&mut dens, &gc);
        }
    }
    let total: f64 = dens.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let outer: f64 = (0..g.len())
        .filter(|&p| (0..g.dim()).any(|a| g.coord(a)[p].abs() > edge))
        .map(|p| dens[p])
        .sum();
    outer / total
}

pub fn compute_frame(dy: &Dynamics, hist: &FieldHistory, kappa: usize, drift: f64) -> Result<DiagnosticsFrame, DiagnosticsError> {
    let g = &dy.grid;
    let s = survey(g, hist, kappa, XWeight::Standard)?;
    let (lv, lgv, lg2v, ldtv) = velocity_sup_norms(g, hist);
    let (ratio, _) = null_ratio(g, hist);
    let state = hist.state();
    let div = if dy.coupled() { max_abs(&g.divergence(&state.v)) } else { 0.0 };
    Ok(DiagnosticsFrame {
        t: hist.t,
        e_v: cumulative(&s.e_v),
        e_d: cumulative(&s.e_d),
        x_d: cumulative(&s.x_d),
        linf_v: lv,
        linf_grad_v: lgv,
        linf_grad2_v: lg2v,
        linf_dtv: ldtv,
        linf_dzd: s.linf_dzd.clone(),
        good_unknown: cumulative(&s.good_unknown).iter().map(|x| x.sqrt()).collect(),
        nullform_ratio: ratio,
        modified_energy: cumulative(&s.modified),
        div_v_max: div,
        constraint_drift: drift,
        boundary_mass: boundary_mass(g, &state),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub kappa: usize,
    /// `sup_t E^v_κ(t) / E^v_κ(0)`.
    pub sup_velocity_ratio: f64,
    /// `sup_t E^d_{κ-1}(t) / E^d_{κ-1}(0)`; `None` when κ < 2.
    pub sup_low_director_ratio: Option<f64>,
    /// Fitted exponent of `E^d_{κ+1}` against `⟨t⟩`.
    pub growth_exponent: f64,
    /// `sup_t X^d_κ / E^d_κ`; `None` when κ < 2.
    pub sup_x_over_e: Option<f64>,
    /// `sup_t ⟨t⟩ max_k linf_dzd[k] / sqrt(E^d_{κ+1})`.
    pub sup_weighted_linf: f64,
}

fn ratio_or_zero(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else if a == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn bootstrap_monitor(series: &[DiagnosticsFrame]) -> Result<MonitorReport, DiagnosticsError> {
    if series.len() < 4 {
        return Err(DiagnosticsError::InsufficientData(series.len()));
    }
    let kappa = series[0].kappa_max();
    let first = &series[0];
    let sup_v = series.iter().map(|f| ratio_or_zero(f.e_v[kappa], first.e_v[kappa])).fold(0.0, f64::max);
    let sup_low = (kappa >= 2).then(|| {
        series.iter().map(|f| ratio_or_zero(f.e_d[kappa - 2], first.e_d[kappa - 2])).fold(0.0, f64::max)
    });
    let pts: Vec<(f64, f64)> = series.iter().map(|f| (f.t, f.e_d[kappa])).collect();
    let t0 = series.first().unwrap().t;
    let t1 = series.last().unwrap().t;
    let growth = if pts.iter().all(|p| p.1 > 0.0) {
        fit_decay(&pts, (t0, t1), false).map(|f| f.exponent).unwrap_or(0.0)
    } else {
        0.0
    };
    let sup_x = (kappa >= 2).then(|| {
        series.iter().map(|f| ratio_or_zero(f.x_d[kappa - 2], f.e_d[kappa - 1])).fold(0.0, f64::max)
    });
    let sup_w = series
        .iter()
        .map(|f| {
            let l = f.linf_dzd.iter().fold(0.0f64, |m, x| m.max(*x));
            ratio_or_zero(bracket(f.t) * l, f.e_d[kappa].sqrt())
        })
        .fold(0.0, f64::max);
    Ok(MonitorReport {
        kappa,
        sup_velocity_ratio: sup_v,
        sup_low_director_ratio: sup_low,
        growth_exponent: growth,
        sup_x_over_e: sup_x,
        sup_weighted_linf: sup_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_first_derivative_six_points() {
        let w = stencil_weights(1, 3);
        let expect = [-1.0 / 60.0, 9.0 / 60.0, -45.0 / 60.0, 0.0, 45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14, "{w:?}");
        }
    }

    #[test]
    fn stencil_exact_on_polynomials() {
        let p = 5;
        let w = stencil_weights(2, p);
        // d²/ds² of s^k at 0 is 2 for k = 2 and 0 otherwise
        for k in 0..=10 {
            let val: f64 = w.iter().enumerate().map(|(i, wi)| wi * ((i as f64 - p as f64).powi(k))).sum();
            let expect = if k == 2 { 2.0 } else { 0.0 };
            assert!((val - expect).abs() < 1e-9, "k={k} val={val}");
        }
    }
}
