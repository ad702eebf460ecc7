//! Periodic-box discretization: grids, fields, the Fourier-multiplier fractional
//! Laplacian, norms, mass projection, dilation and symmetric rearrangement.
//!
//! The box is [−L, L)^N with M points per axis, x_j = −L + j h, h = 2L/M, and
//! frequencies ξ_k = πk/L for integer k ∈ [−M/2, M/2). With the unnormalized DFT
//! U_k, Plancherel reads ∫u² = (h/M)^N Σ|U_k|².

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{epstein, par};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has {got} values, grid needs {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("aliasing risk: field not negligible outside radius {radius} (t = {t})")]
    AliasingRisk { radius: f64, t: f64 },
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub points_per_axis: usize,
    pub half_length: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, half_length: f64) -> Result<Self, SpectralError> {
        if !(1..=3).contains(&dim) {
            return Err(SpectralError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points_per_axis < 16 || !points_per_axis.is_power_of_two() {
            return Err(SpectralError::InvalidGrid(format!(
                "points per axis {points_per_axis} must be a power of two >= 16"
            )));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(SpectralError::InvalidGrid(format!("half length {half_length} must be positive")));
        }
        Ok(Self { dim, points_per_axis, half_length })
    }

    pub fn m(&self) -> usize {
        self.points_per_axis
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    pub fn with_half_length(&self, half_length: f64) -> Self {
        Self { half_length, ..*self }
    }

    /// Coordinate of index j along one axis.
    /// Exactly odd under j → M − j, so reflected points share their radius bit for bit.
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.m() / 2) as f64) * self.spacing()
    }

    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.m()).map(|j| self.coord(j)).collect()
    }

    /// Per-axis indices of a flat row-major index (axis 0 slowest).
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let m = self.m();
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % m;
            idx /= m;
        }
        out
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let ix = self.unravel(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coord(ix[axis]);
        }
        x
    }

    pub fn radius_sq(&self, idx: usize) -> f64 {
        self.point(idx).iter().map(|c| c * c).sum()
    }

    /// Signed integer frequency of FFT slot k.
    pub fn freq_index(&self, k: usize) -> i64 {
        let m = self.m() as i64;
        let k = k as i64;
        if k < m / 2 {
            k
        } else {
            k - m
        }
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        std::f64::consts::PI * self.freq_index(k) as f64 / self.half_length
    }

    /// Indicator of the open ball of radius `frac`·L about the origin.
    pub fn ball_mask(&self, frac: f64) -> Vec<f64> {
        let r2 = (frac * self.half_length).powi(2);
        par::map_range(self.len(), |i| if self.radius_sq(i) < r2 { 1.0 } else { 0.0 })
    }

    /// Index of the point reflected through the origin (j → M − j mod M per axis).
    pub fn reflect(&self, idx: usize) -> usize {
        let m = self.m();
        let ix = self.unravel(idx);
        let mut out = 0;
        for &j in ix.iter().take(self.dim) {
            out = out * m + (m - j) % m;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::LengthMismatch { got: values.len(), want: grid.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64 + Sync + Send) -> Self {
        let values = par::map_range(grid.len(), |i| f(grid.point(i)));
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn integrate(&self) -> f64 {
        par::sum_slice(&self.values, |v| v) * self.grid.cell_volume()
    }

    /// ∫|u|^p.
    pub fn power_integral(&self, p: f64) -> f64 {
        power_sum(&self.values, p) * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, values: par::map_slice(&self.values, |v| c * v) }
    }

    pub fn abs(&self) -> Self {
        Self { grid: self.grid, values: par::map_slice(&self.values, f64::abs) }
    }

    /// The exact discrete dilation t⋆u realized by rescaling the box:
    /// samples times e^{Nt/2} on the grid with half length L e^{−t}.
    pub fn rescale_box(&self, t: f64) -> Self {
        let n = self.grid.dim as f64;
        let grid = self.grid.with_half_length(self.grid.half_length * (-t).exp());
        Self { grid, values: par::map_slice(&self.values, |v| v * (0.5 * n * t).exp()) }
    }

    pub fn inner(&self, other: &Field) -> f64 {
        par::dot(&self.values, &other.values) * self.grid.cell_volume()
    }
}

/// Σ|u_i|^p without the cell volume.
pub fn power_sum(values: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        par::sum_slice(values, |v| v * v)
    } else {
        par::sum_slice(values, |v| v.abs().powf(p))
    }
}

pub fn mass_sq(u: &Field) -> f64 {
    u.power_integral(2.0)
}

pub fn lp_norm(u: &Field, p: f64) -> f64 {
    u.power_integral(p).powf(1.0 / p)
}

pub fn project_mass(u: &Field, a: f64) -> Result<Field, SpectralError> {
    let m = mass_sq(u);
    if !(m > 0.0) {
        return Err(SpectralError::Degenerate("zero field"));
    }
    Ok(u.scaled(a / m.sqrt()))
}

/// Treatment of the k = 0 symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ZeroMode {
    /// |ξ|^{2s} = 0 at k = 0: the exact multiplier on the torus.
    Periodic,
    /// k = 0 carries −Z_N(−2s)(π/L)^{2s}, the leading lattice-sum correction that makes
    /// the discrete seminorm of a compactly supported field approximate its value on ℝ^N.
    #[default]
    FreeSpace,
}

/// N-dimensional complex FFT over a row-major cube of side M.
#[derive(Clone)]
pub struct FftNd {
    m: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m: grid.m(),
            dim: grid.dim,
            forward: planner.plan_fft_forward(grid.m()),
            inverse: planner.plan_fft_inverse(grid.m()),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Unnormalized inverse; divide by M^N to invert `forward`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        if self.dim == 1 {
            fft.process(data);
            return;
        }
        let total = data.len();
        for axis in 0..self.dim {
            let stride = m.pow((self.dim - 1 - axis) as u32);
            let outer = total / (m * stride);
            let lines = outer * stride;
            let line_start = |l: usize| (l / stride) * m * stride + l % stride;
            if stride == 1 {
                for chunk in data.chunks_mut(m) {
                    fft.process(chunk);
                }
                continue;
            }
            let src: &[Complex64] = data;
            let done: Vec<Vec<Complex64>> = par::map_range(lines, |l| {
                let start = line_start(l);
                let mut buf: Vec<Complex64> = (0..m).map(|j| src[start + j * stride]).collect();
                fft.process(&mut buf);
                buf
            });
            for (l, buf) in done.into_iter().enumerate() {
                let start = line_start(l);
                for (j, v) in buf.into_iter().enumerate() {
                    data[start + j * stride] = v;
                }
            }
        }
    }
}

/// Fourier multiplier (−Δ)^s on a fixed grid, with cached plans and symbol.
#[derive(Clone)]
pub struct SpectralOp {
    pub grid: Grid,
    pub s: f64,
    pub zero_mode: ZeroMode,
    fft: FftNd,
    symbol: Vec<f64>,
}

/// |ξ|² for every FFT slot of the grid.
pub fn wavenumber_sq(grid: &Grid) -> Vec<f64> {
    let m = grid.m();
    let k2: Vec<f64> = (0..m).map(|k| grid.wavenumber(k).powi(2)).collect();
    par::map_range(grid.len(), |idx| {
        let ix = grid.unravel(idx);
        (0..grid.dim).map(|a| k2[ix[a]]).sum()
    })
}

pub fn zero_mode_symbol(grid: &Grid, s: f64) -> f64 {
    let z = epstein::epstein_zeta_neg(grid.dim, s);
    -z * (std::f64::consts::PI / grid.half_length).powf(2.0 * s)
}

impl SpectralOp {
    pub fn new(grid: Grid, s: f64, zero_mode: ZeroMode) -> Self {
        let mut symbol = par::map_slice(&wavenumber_sq(&grid), |k2| k2.powf(s));
        symbol[0] = match zero_mode {
            ZeroMode::Periodic => 0.0,
            ZeroMode::FreeSpace => zero_mode_symbol(&grid, s),
        };
        Self { grid, s, zero_mode, fft: FftNd::new(&grid), symbol }
    }

    /// The same operator on a box of half length `half_length`; every symbol entry,
    /// including the zero mode, scales by (L/L′)^{2s}.
    pub fn rescaled(&self, half_length: f64) -> Self {
        let factor = (self.grid.half_length / half_length).powf(2.0 * self.s);
        Self {
            grid: self.grid.with_half_length(half_length),
            s: self.s,
            zero_mode: self.zero_mode,
            fft: self.fft.clone(),
            symbol: par::map_slice(&self.symbol, |w| w * factor),
        }
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn spectrum(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        buf
    }

    /// Applies an arbitrary real symbol to real data; the real part is returned.
    pub fn apply_symbol(&self, values: &[f64], symbol: &[f64]) -> Vec<f64> {
        let mut buf = self.spectrum(values);
        for (b, &w) in buf.iter_mut().zip(symbol) {
            *b *= w;
        }
        self.fft.inverse(&mut buf);
        let norm = 1.0 / self.grid.len() as f64;
        buf.iter().map(|c| c.re * norm).collect()
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.apply_symbol(values, &self.symbol)
    }

    pub fn apply_field(&self, u: &Field) -> Field {
        Field { grid: u.grid, values: self.apply(&u.values) }
    }

    /// (h/M)^N Σ σ_k |U_k|².
    pub fn seminorm_sq(&self, values: &[f64]) -> f64 {
        let spec = self.spectrum(values);
        let scale = (self.grid.spacing() / self.grid.m() as f64).powi(self.grid.dim as i32);
        scale * par::sum_range(spec.len(), |k| self.symbol[k] * spec[k].norm_sqr())
    }

    /// x·∇u via spectral differentiation; the Nyquist slot of the odd symbol is zeroed.
    pub fn radial_derivative(&self, values: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let m = g.m();
        let spec = self.spectrum(values);
        let mut out = vec![0.0; g.len()];
        for axis in 0..g.dim {
            let mut buf = spec.clone();
            for (idx, b) in buf.iter_mut().enumerate() {
                let k = g.unravel(idx)[axis];
                let xi = if k == m / 2 { 0.0 } else { g.wavenumber(k) };
                *b *= Complex64::new(0.0, xi);
            }
            self.fft.inverse(&mut buf);
            let norm = 1.0 / g.len() as f64;
            for (idx, o) in out.iter_mut().enumerate() {
                *o += g.point(idx)[axis] * buf[idx].re * norm;
            }
        }
        out
    }
}

/// (−Δ)^s u as the exact torus multiplier (k = 0 maps to zero).
pub fn frac_laplacian(u: &Field, s: f64) -> Field {
    SpectralOp::new(u.grid, s, ZeroMode::Periodic).apply_field(u)
}

pub fn frac_laplacian_with(u: &Field, s: f64, zero_mode: ZeroMode) -> Field {
    SpectralOp::new(u.grid, s, zero_mode).apply_field(u)
}

/// ‖u‖²_{D_s} with the free-space zero mode.
pub fn seminorm_sq(u: &Field, s: f64) -> f64 {
    SpectralOp::new(u.grid, s, ZeroMode::FreeSpace).seminorm_sq(&u.values)
}

pub fn seminorm_sq_with(u: &Field, s: f64, zero_mode: ZeroMode) -> f64 {
    SpectralOp::new(u.grid, s, zero_mode).seminorm_sq(&u.values)
}

pub const ALIAS_REL_TOL: f64 = 1e-10;

/// True if |u| < tol·max|u| at every grid point with radius ≥ r.
pub fn negligible_outside(u: &Field, radius: f64, tol: f64) -> bool {
    let cap = tol * u.max_abs();
    let r2 = radius * radius;
    (0..u.grid.len()).all(|i| u.grid.radius_sq(i) < r2 || u.values[i].abs() < cap)
}

/// Trigonometric interpolant of one periodic line at the given coordinates.
fn interpolate_line(line: &[f64], grid: &Grid, fft: &Arc<dyn Fft<f64>>, targets: &[f64]) -> Vec<f64> {
    let m = line.len();
    let mut c: Vec<Complex64> = line.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut c);
    let inv_m = 1.0 / m as f64;
    let pi_over_l = std::f64::consts::PI / grid.half_length;
    targets
        .iter()
        .map(|&y| {
            let theta = pi_over_l * (y + grid.half_length);
            let step = Complex64::from_polar(1.0, theta);
            let mut z = step;
            let mut acc = c[0].re;
            for ck in c.iter().take(m / 2).skip(1) {
                acc += 2.0 * (ck * z).re;
                z *= step;
            }
            // Nyquist term, symmetrized so the interpolant is real.
            acc += c[m / 2].re * (theta * (m / 2) as f64).cos();
            acc * inv_m
        })
        .collect()
}

/// (t⋆u)(x) = e^{Nt/2} u(e^t x) by band-limited interpolation.
pub fn dilate(u: &Field, t: f64) -> Result<Field, SpectralError> {
    if t == 0.0 {
        return Ok(u.clone());
    }
    let g = u.grid;
    let radius = g.half_length * (-t.abs()).exp();
    if !negligible_outside(u, radius, ALIAS_REL_TOL) {
        return Err(SpectralError::AliasingRisk { radius, t });
    }
    let m = g.m();
    let fft = FftPlanner::new().plan_fft_forward(m);
    let targets: Vec<f64> = g.axis_coords().iter().map(|x| x * t.exp()).collect();
    let mut data = u.values.clone();
    for axis in 0..g.dim {
        let stride = m.pow((g.dim - 1 - axis) as u32);
        let lines = g.len() / m;
        let line_start = |l: usize| (l / stride) * m * stride + l % stride;
        let src: &[f64] = &data;
        let done: Vec<Vec<f64>> = par::map_tasks(lines, |l| {
            let start = line_start(l);
            let line: Vec<f64> = (0..m).map(|j| src[start + j * stride]).collect();
            interpolate_line(&line, &g, &fft, &targets)
        });
        for (l, buf) in done.into_iter().enumerate() {
            let start = line_start(l);
            for (j, v) in buf.into_iter().enumerate() {
                data[start + j * stride] = v;
            }
        }
    }
    let amp = (0.5 * g.dim as f64 * t).exp();
    for v in data.iter_mut() {
        *v *= amp;
    }
    Ok(Field { grid: g, values: data })
}

/// Symmetric decreasing rearrangement of |u| about the box center.
pub fn rearrange_decreasing(u: &Field) -> Field {
    let g = u.grid;
    let mut order: Vec<usize> = (0..g.len()).collect();
    let r2: Vec<f64> = (0..g.len()).map(|i| g.radius_sq(i)).collect();
    order.sort_by(|&i, &j| r2[i].total_cmp(&r2[j]).then(i.cmp(&j)));
    let mut vals: Vec<f64> = u.values.iter().map(|v| v.abs()).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let mut out = vec![0.0; g.len()];
    for (slot, v) in order.into_iter().zip(vals) {
        out[slot] = v;
    }
    Field { grid: g, values: out }
}

const FIELD_MAGIC: &[u8; 8] = b"FNLSFLD1";

/// Header: magic, dim (u64), M (u64), L (f64); payload: M^N f64, all little-endian.
pub fn write_field(u: &Field, mut w: impl Write) -> Result<(), SpectralError> {
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&(u.grid.dim as u64).to_le_bytes())?;
    w.write_all(&(u.grid.m() as u64).to_le_bytes())?;
    w.write_all(&u.grid.half_length.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * u.values.len());
    for v in &u.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field(mut r: impl Read) -> Result<Field, SpectralError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(SpectralError::Format("bad magic".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let dim = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let m = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let l = f64::from_le_bytes(word);
    let grid = Grid::new(dim, m, l)?;
    let mut payload = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut payload)?;
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Field::new(grid, values)
}

/// Two-column CSV (x, value) for 1D fields.
pub fn write_field_csv(u: &Field, mut w: impl Write) -> Result<(), SpectralError> {
    if u.grid.dim != 1 {
        return Err(SpectralError::InvalidGrid("CSV export is 1D only".into()));
    }
    writeln!(w, "x,value")?;
    for (j, v) in u.values.iter().enumerate() {
        writeln!(w, "{:.17e},{:.17e}", u.grid.coord(j), v)?;
    }
    Ok(())
}
