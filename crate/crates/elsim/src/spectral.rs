//! Periodic-box field algebra on a box centred at the origin.
//!
//! Physical fields are flat row-major arrays with the last axis contiguous.
//! Spectra use the real-FFT half layout: the last axis keeps `n/2 + 1`
//! modes, every other axis keeps all `n`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

pub type Field = Vec<f64>;
pub type Spectrum = Vec<Complex64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("derivative order must be at least 1")]
    ZeroOrder,
    #[error("Leray projection is degenerate in one dimension")]
    OneDimensionalProjection,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Serializable grid description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub box_length: f64,
    pub dealias_fraction: f64,
}

#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    nh: usize,
    len: usize,
    spec_len: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    bwd: Arc<dyn Fft<f64>>,
    // per-axis wavenumbers over the spectral layout
    k: Vec<Vec<f64>>,
    // same, with the Nyquist entry zeroed (symbol of an odd derivative)
    k_odd: Vec<Vec<f64>>,
    k2: Vec<f64>,
    mask: Vec<bool>,
    coords: Vec<Field>,
    radius: Field,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

fn integer_wavenumber(j: usize, n: usize, half: bool) -> i64 {
    if half || j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl Grid {
    pub fn new(dim: usize, n: usize, box_length: f64) -> Result<Self, SpectralError> {
        Self::from_spec(GridSpec { dim, n, box_length, dealias_fraction: 2.0 / 3.0 })
    }

    pub fn from_spec(spec: GridSpec) -> Result<Self, SpectralError> {
        let GridSpec { dim, n, box_length, dealias_fraction } = spec;
        if !(1..=3).contains(&dim) {
            return Err(SpectralError::InvalidGrid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(SpectralError::InvalidGrid(format!("points per axis must be even and >= 4, got {n}")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(SpectralError::InvalidGrid(format!("box length must be positive, got {box_length}")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(SpectralError::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        let nh = n / 2 + 1;
        let len = n.pow(dim as u32);
        let spec_len = n.pow(dim as u32 - 1) * nh;
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();

        let base = 2.0 * std::f64::consts::PI / box_length;
        let cutoff = dealias_fraction * (n / 2) as f64;
        let mut k = vec![vec![0.0; spec_len]; dim];
        let mut k_odd = vec![vec![0.0; spec_len]; dim];
        let mut k2 = vec![0.0; spec_len];
        let mut mask = vec![true; spec_len];
        let sizes = spectral_sizes(dim, n, nh);
        for idx in 0..spec_len {
            let mut rem = idx;
            for a in (0..dim).rev() {
                let j = rem % sizes[a];
                rem /= sizes[a];
                let ki = integer_wavenumber(j, n, a == dim - 1);
                let kv = base * ki as f64;
                k[a][idx] = kv;
                k_odd[a][idx] = if ki.unsigned_abs() as usize == n / 2 { 0.0 } else { kv };
                k2[idx] += kv * kv;
                if ki.unsigned_abs() as f64 > cutoff {
                    mask[idx] = false;
                }
            }
        }

        let dx = box_length / n as f64;
        let mut coords = vec![vec![0.0; len]; dim];
        for idx in 0..len {
            let mut rem = idx;
            for a in (0..dim).rev() {
                let i = rem % n;
                rem /= n;
                coords[a][idx] = -0.5 * box_length + i as f64 * dx;
            }
        }
        let radius = (0..len)
            .map(|i| coords.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .collect();

        Ok(Grid {
            spec,
            nh,
            len,
            spec_len,
            r2c: rp.plan_fft_forward(n),
            c2r: rp.plan_fft_inverse(n),
            fwd: cp.plan_fft_forward(n),
            bwd: cp.plan_fft_inverse(n),
            k,
            k_odd,
            k2,
            mask,
            coords,
            radius,
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }
    pub fn dim(&self) -> usize {
        self.spec.dim
    }
    pub fn points_per_axis(&self) -> usize {
        self.spec.n
    }
    pub fn box_length(&self) -> f64 {
        self.spec.box_length
    }
    pub fn dealias_fraction(&self) -> f64 {
        self.spec.dealias_fraction
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn spectral_len(&self) -> usize {
        self.spec_len
    }
    pub fn dx(&self) -> f64 {
        self.spec.box_length / self.spec.n as f64
    }
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.spec.dim as i32)
    }
    /// Wavenumbers along `axis` over the spectral layout.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.k[axis]
    }
    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }
    pub fn dealias_mask(&self) -> &[bool] {
        &self.mask
    }
    /// Coordinate `x_{axis+1}` at every node.
    pub fn coord(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }
    pub fn radius(&self) -> &[f64] {
        &self.radius
    }
    pub fn zeros(&self) -> Field {
        vec![0.0; self.len]
    }

    fn check_axis(&self, axis: usize) -> Result<(), SpectralError> {
        if axis >= self.spec.dim {
            Err(SpectralError::AxisOutOfRange { axis, dim: self.spec.dim })
        } else {
            Ok(())
        }
    }

    // ---- transforms ----

    pub fn forward(&self, f: &[f64]) -> Spectrum {
        assert_eq!(f.len(), self.len, "field length does not match grid");
        let n = self.spec.n;
        let nh = self.nh;
        let mut out = vec![Complex64::new(0.0, 0.0); self.spec_len];
        let r2c = &self.r2c;
        out.par_chunks_mut(nh).zip(f.par_chunks(n)).for_each_init(
            || (r2c.make_input_vec(), r2c.make_scratch_vec()),
            |(buf, scratch), (o, row)| {
                buf.copy_from_slice(row);
                r2c.process_with_scratch(buf, o, scratch).expect("real fft");
            },
        );
        for axis in 0..self.spec.dim - 1 {
            self.complex_axis(&mut out, axis, &self.fwd);
        }
        out
    }

    /// Inverse transform, normalized so that `inverse(forward(f)) == f`.
    pub fn inverse(&self, s: &[Complex64]) -> Field {
        assert_eq!(s.len(), self.spec_len, "spectrum length does not match grid");
        let n = self.spec.n;
        let nh = self.nh;
        let mut work = s.to_vec();
        for axis in 0..self.spec.dim - 1 {
            self.complex_axis(&mut work, axis, &self.bwd);
        }
        let scale = 1.0 / self.len as f64;
        let mut out = vec![0.0; self.len];
        let c2r = &self.c2r;
        out.par_chunks_mut(n).zip(work.par_chunks_mut(nh)).for_each_init(
            || (c2r.make_output_vec(), c2r.make_scratch_vec()),
            |(buf, scratch), (o, row)| {
                row[0].im = 0.0;
                row[nh - 1].im = 0.0;
                c2r.process_with_scratch(row, buf, scratch).expect("inverse real fft");
                for (x, y) in o.iter_mut().zip(buf.iter()) {
                    *x = y * scale;
                }
            },
        );
        out
    }

    fn complex_axis(&self, data: &mut [Complex64], axis: usize, plan: &Arc<dyn Fft<f64>>) {
        let n = self.spec.n;
        let sizes = spectral_sizes(self.spec.dim, n, self.nh);
        let stride: usize = sizes[axis + 1..self.spec.dim].iter().product();
        const TILE: usize = 16;
        data.par_chunks_mut(n * stride).for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); TILE * n],
                    vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), block| {
                let mut c0 = 0;
                while c0 < stride {
                    let w = TILE.min(stride - c0);
                    for i in 0..n {
                        let row = &block[i * stride + c0..i * stride + c0 + w];
                        for (c, v) in row.iter().enumerate() {
                            buf[c * n + i] = *v;
                        }
                    }
                    plan.process_with_scratch(&mut buf[..w * n], scratch);
                    for i in 0..n {
                        let row = &mut block[i * stride + c0..i * stride + c0 + w];
                        for (c, v) in row.iter_mut().enumerate() {
                            *v = buf[c * n + i];
                        }
                    }
                    c0 += w;
                }
            },
        );
    }

    // ---- modewise operators on spectra ----

    /// Multiply a spectrum by `(i k_axis)^order`; the Nyquist mode is dropped for odd orders.
    pub fn derivative_spectrum(&self, s: &[Complex64], axis: usize, order: u32) -> Spectrum {
        let k = if order % 2 == 1 { &self.k_odd[axis] } else { &self.k[axis] };
        let i_pow = match order % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        s.par_iter().zip(k.par_iter()).map(|(v, kk)| v * i_pow * kk.powi(order as i32)).collect()
    }

    pub fn laplacian_spectrum(&self, s: &[Complex64]) -> Spectrum {
        s.par_iter().zip(self.k2.par_iter()).map(|(v, k2)| -v * k2).collect()
    }

    pub fn dealias_spectrum(&self, s: &mut [Complex64]) {
        s.par_iter_mut().zip(self.mask.par_iter()).for_each(|(v, keep)| {
            if !keep {
                *v = Complex64::new(0.0, 0.0);
            }
        });
    }

    /// Modewise `f - k (k . f) / |k|^2` using the odd-derivative symbol, so the
    /// spectral divergence of the output vanishes identically.
    pub fn project_spectra(&self, s: &mut [Spectrum]) -> Result<(), SpectralError> {
        let dim = self.spec.dim;
        if dim == 1 {
            return Err(SpectralError::OneDimensionalProjection);
        }
        assert_eq!(s.len(), dim);
        for idx in 0..self.spec_len {
            let mut kk = 0.0;
            let mut kf = Complex64::new(0.0, 0.0);
            for a in 0..dim {
                let ka = self.k_odd[a][idx];
                kk += ka * ka;
                kf += s[a][idx] * ka;
            }
            if kk > 0.0 {
                let c = kf / kk;
                for a in 0..dim {
                    s[a][idx] -= c * self.k_odd[a][idx];
                }
            }
        }
        Ok(())
    }

    // ---- physical-space conveniences ----

    pub fn spectral_derivative(&self, f: &[f64], axis: usize, order: u32) -> Result<Field, SpectralError> {
        self.check_axis(axis)?;
        if order == 0 {
            return Err(SpectralError::ZeroOrder);
        }
        Ok(self.inverse(&self.derivative_spectrum(&self.forward(f), axis, order)))
    }

    pub fn gradient(&self, f: &[f64]) -> Vec<Field> {
        let s = self.forward(f);
        (0..self.spec.dim).map(|a| self.inverse(&self.derivative_spectrum(&s, a, 1))).collect()
    }

    pub fn laplacian(&self, f: &[f64]) -> Field {
        self.inverse(&self.laplacian_spectrum(&self.forward(f)))
    }

    pub fn divergence(&self, v: &[Field]) -> Field {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.spec_len];
        for (a, c) in v.iter().enumerate() {
            let d = self.derivative_spectrum(&self.forward(c), a, 1);
            for (x, y) in acc.iter_mut().zip(d) {
                *x += y;
            }
        }
        self.inverse(&acc)
    }

    pub fn leray_project(&self, f: &[Field]) -> Result<Vec<Field>, SpectralError> {
        if self.spec.dim == 1 {
            return Err(SpectralError::OneDimensionalProjection);
        }
        let mut s: Vec<Spectrum> = f.iter().map(|c| self.forward(c)).collect();
        self.project_spectra(&mut s)?;
        Ok(s.iter().map(|c| self.inverse(c)).collect())
    }

    pub fn dealias_truncate(&self, f: &[f64]) -> Field {
        let mut s = self.forward(f);
        self.dealias_spectrum(&mut s);
        self.inverse(&s)
    }

    // ---- quadrature ----

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn l2_norm_sq(&self, f: &[f64]) -> f64 {
        f.iter().map(|x| x * x).sum::<f64>() * self.cell_volume()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * self.cell_volume()
    }

    /// L² norm squared evaluated from the half-spectrum (Parseval).
    pub fn spectral_l2_norm_sq(&self, s: &[Complex64]) -> f64 {
        let nh = self.nh;
        let n = self.spec.n;
        let mut acc = 0.0;
        for (idx, v) in s.iter().enumerate() {
            let j = idx % nh;
            let w = if j == 0 || j == n / 2 { 1.0 } else { 2.0 };
            acc += w * v.norm_sqr();
        }
        acc * self.spec.box_length.powi(self.spec.dim as i32) / (self.len as f64 * self.len as f64)
    }
}

fn spectral_sizes(dim: usize, n: usize, nh: usize) -> [usize; 3] {
    let mut s = [n; 3];
    s[dim - 1] = nh;
    s
}

pub fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Pointwise Euclidean magnitude of a multi-component field.
pub fn magnitude(f: &[Field]) -> Field {
    let len = f[0].len();
    (0..len).map(|i| f.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()).collect()
}
