//! Periodic sampled fields on the 2-D torus and their spectral twins.
//!
//! Samples are stored row-major: the value at `(x1, x2) = (i h, j h)` lives at
//! index `i * N + j`. Spectral coefficients are Fourier-series coefficients
//! `c_k` with `f(x) = sum_k c_k exp(i k.x)`, i.e. the unnormalised DFT divided
//! by `N^2`, stored in FFT order.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("grid resolution {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("grid resolution {0} is below the minimum of 16")]
    TooCoarse(usize),
    #[error("grid period must be finite and positive, got {0}")]
    BadPeriod(f64),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Uniform periodic grid with `N x N` points on `[0, L)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    period: f64,
}

impl Grid {
    pub const N_DIM: usize = 2;

    pub fn new(n: usize, period: f64) -> Result<Self, FieldError> {
        if !n.is_power_of_two() {
            return Err(FieldError::NotPowerOfTwo(n));
        }
        if n < 16 {
            return Err(FieldError::TooCoarse(n));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(FieldError::BadPeriod(period));
        }
        Ok(Grid { n, period })
    }

    /// `N x N` grid on the standard `2 pi` torus.
    pub fn standard(n: usize) -> Result<Self, FieldError> {
        Grid::new(n, 2.0 * PI)
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn area(&self) -> f64 {
        self.period * self.period
    }

    /// Quadrature weight of one cell.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Signed mode number of FFT index `i` (Nyquist maps to `-N/2`).
    pub fn signed_mode(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn kappa(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        self.kappa() * self.signed_mode(i) as f64
    }

    /// Largest mode kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        self.n as i64 / 3
    }

    /// Whether spectral index `(i, j)` survives 2/3-rule truncation.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        let c = self.dealias_cutoff();
        self.signed_mode(i).abs() <= c && self.signed_mode(j).abs() <= c
    }

    /// Wave vector of spectral index `(i, j)`.
    pub fn wavevector(&self, i: usize, j: usize) -> [f64; 2] {
        [self.wavenumber(i), self.wavenumber(j)]
    }

    /// Minimal-image separation of two points on the torus.
    pub fn torus_delta(&self, a: f64, b: f64) -> f64 {
        let l = self.period;
        let mut d = (a - b) % l;
        if d > l / 2.0 {
            d -= l;
        } else if d < -l / 2.0 {
            d += l;
        }
        d
    }

    pub fn torus_distance(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.torus_delta(x[0], y[0]).hypot(self.torus_delta(x[1], y[1]))
    }

    pub fn check_same(&self, other: &Grid) -> Result<(), FieldError> {
        if self == other {
            Ok(())
        } else {
            Err(FieldError::GridMismatch)
        }
    }
}

/// Cached 1-D plans for a 2-D complex transform of side `n`.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

const ROW_BLOCK: usize = 8;

impl Fft2 {
    /// Shared plan for side length `n`.
    pub fn get(n: usize) -> Arc<Fft2> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("fft cache poisoned");
        map.entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Fft2 { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) })
            })
            .clone()
    }

    fn rows(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        data.par_chunks_mut(n * ROW_BLOCK).for_each(|chunk| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(chunk, &mut scratch);
        });
    }

    fn transpose(&self, data: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = data[i * n + j];
            }
        });
    }

    fn transform(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let mut tmp = vec![Complex64::new(0.0, 0.0); data.len()];
        self.rows(plan, data);
        self.transpose(data, &mut tmp);
        self.rows(plan, &mut tmp);
        self.transpose(&tmp, data);
    }

    /// Fourier-series coefficients of real samples.
    pub fn forward_real(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_complex(&mut data);
        data
    }

    /// In-place forward transform, normalised to series coefficients.
    pub fn forward_complex(&self, data: &mut Vec<Complex64>) {
        self.transform(&self.fwd, data);
        let s = 1.0 / (self.n * self.n) as f64;
        data.par_iter_mut().for_each(|c| *c *= s);
    }

    /// In-place inverse of [`Fft2::forward_complex`].
    pub fn inverse_complex(&self, data: &mut Vec<Complex64>) {
        self.transform(&self.inv, data);
    }

    /// Real part of the synthesised field.
    pub fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.inverse_complex(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }
}

/// Real periodic field with a lazily computed spectrum.
#[derive(Debug)]
pub struct ScalarField {
    grid: Grid,
    samples: Vec<f64>,
    spectral: OnceLock<Arc<Vec<Complex64>>>,
}

impl Clone for ScalarField {
    fn clone(&self) -> Self {
        let spectral = OnceLock::new();
        if let Some(s) = self.spectral.get() {
            let _ = spectral.set(s.clone());
        }
        ScalarField { grid: self.grid, samples: self.samples.clone(), spectral }
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.samples == other.samples
    }
}

impl ScalarField {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self, FieldError> {
        if samples.len() != grid.len() {
            return Err(FieldError::LengthMismatch { expected: grid.len(), got: samples.len() });
        }
        Ok(ScalarField { grid, samples, spectral: OnceLock::new() })
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, samples: vec![0.0; grid.len()], spectral: OnceLock::new() }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField { grid, samples: vec![c; grid.len()], spectral: OnceLock::new() }
    }

    /// Samples `f(x1, x2)` at the grid points.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n = grid.resolution();
        let samples = (0..grid.len())
            .into_par_iter()
            .map(|k| f(grid.coord(k / n), grid.coord(k % n)))
            .collect();
        ScalarField { grid, samples, spectral: OnceLock::new() }
    }

    /// Synthesises a field from series coefficients; the imaginary part of the
    /// synthesis is discarded.
    pub fn from_spectral(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self, FieldError> {
        if coeffs.len() != grid.len() {
            return Err(FieldError::LengthMismatch { expected: grid.len(), got: coeffs.len() });
        }
        let samples = Fft2::get(grid.resolution()).inverse_real(&coeffs);
        Ok(ScalarField { grid, samples, spectral: OnceLock::new() })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Mutable access; invalidates the spectral cache.
    pub fn samples_mut(&mut self) -> &mut [f64] {
        self.spectral = OnceLock::new();
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.samples[i * self.grid.resolution() + j]
    }

    /// Fourier-series coefficients in FFT order.
    pub fn spectral(&self) -> &[Complex64] {
        self.spectral
            .get_or_init(|| Arc::new(Fft2::get(self.grid.resolution()).forward_real(&self.samples)))
            .as_slice()
    }

    pub fn mean(&self) -> f64 {
        ordered_sum(&self.samples, self.grid.resolution()) / self.grid.len() as f64
    }

    /// Grid quadrature of the field.
    pub fn integral(&self) -> f64 {
        ordered_sum(&self.samples, self.grid.resolution()) * self.grid.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        ScalarField::new(self.grid, self.samples.par_iter().map(|&v| f(v)).collect()).expect("same length")
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self, FieldError> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self, FieldError> {
        self.zip(other, |a, b| a - b)
    }

    pub fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self, FieldError> {
        self.grid.check_same(&other.grid)?;
        let samples = self.samples.par_iter().zip(other.samples.par_iter()).map(|(&a, &b)| f(a, b)).collect();
        ScalarField::new(self.grid, samples)
    }

    /// Applies a spectral multiplier `m(i, j)` indexed by FFT position.
    pub fn apply_multiplier(&self, m: impl Fn(usize, usize) -> Complex64 + Sync) -> Self {
        let n = self.grid.resolution();
        let coeffs: Vec<Complex64> =
            self.spectral().par_iter().enumerate().map(|(k, c)| c * m(k / n, k % n)).collect();
        ScalarField::from_spectral(self.grid, coeffs).expect("same grid")
    }

    /// Shift by a lattice vector: `g(x) = f(x + (di h, dj h))`.
    pub fn shifted(&self, di: usize, dj: usize) -> Self {
        let n = self.grid.resolution();
        let samples = (0..self.grid.len())
            .map(|k| {
                let (i, j) = (k / n, k % n);
                self.samples[((i + di) % n) * n + (j + dj) % n]
            })
            .collect();
        ScalarField::new(self.grid, samples).expect("same length")
    }

    /// 2/3-rule projection.
    pub fn dealiased(&self) -> Self {
        let grid = self.grid;
        self.apply_multiplier(|i, j| if grid.in_band(i, j) { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    /// Trigonometric interpolant evaluated at an arbitrary point.
    pub fn eval_at(&self, x: [f64; 2]) -> f64 {
        interpolate(&self.grid, self.spectral(), x)
    }
}

/// Evaluates `sum_k c_k exp(i k.x)` (real part) at an off-grid point.
pub fn interpolate(grid: &Grid, coeffs: &[Complex64], x: [f64; 2]) -> f64 {
    let n = grid.resolution();
    let e1: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, grid.wavenumber(i) * x[0])).collect();
    let e2: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, grid.wavenumber(j) * x[1])).collect();
    let mut total = 0.0;
    for i in 0..n {
        let row = &coeffs[i * n..(i + 1) * n];
        let inner: Complex64 = row.iter().zip(&e2).map(|(c, e)| c * e).sum();
        total += (e1[i] * inner).re;
    }
    total
}

/// Sum of `values` accumulated in fixed row blocks; independent of thread count.
pub fn ordered_sum(values: &[f64], row: usize) -> f64 {
    let partial: Vec<f64> = values.par_chunks(row.max(1)).map(|c| c.iter().sum::<f64>()).collect();
    partial.iter().sum()
}

/// Vector field with one scalar component per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 2],
}

impl VectorField {
    pub fn new(c1: ScalarField, c2: ScalarField) -> Result<Self, FieldError> {
        c1.grid().check_same(c2.grid())?;
        Ok(VectorField { components: [c1, c2] })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField { components: [ScalarField::zeros(grid), ScalarField::zeros(grid)] }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn component(&self, j: usize) -> &ScalarField {
        &self.components[j]
    }

    pub fn components(&self) -> &[ScalarField; 2] {
        &self.components
    }

    /// Spectral divergence.
    pub fn divergence(&self) -> ScalarField {
        let grid = *self.grid();
        let n = grid.resolution();
        let (s1, s2) = (self.components[0].spectral(), self.components[1].spectral());
        let coeffs = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let [k1, k2] = odd_wavevector(&grid, i, j);
                Complex64::new(0.0, k1) * s1[k] + Complex64::new(0.0, k2) * s2[k]
            })
            .collect();
        ScalarField::from_spectral(grid, coeffs).expect("same grid")
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        self.components[0].zip(&self.components[1], |a, b| a.hypot(b)).expect("same grid")
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().max_abs()
    }

    pub fn scaled(&self, s: f64) -> Self {
        VectorField { components: [self.components[0].scaled(s), self.components[1].scaled(s)] }
    }

    /// Linear combination `(1 - w) self + w other`.
    pub fn lerp(&self, other: &VectorField, w: f64) -> Result<Self, FieldError> {
        let f = |a: f64, b: f64| (1.0 - w) * a + w * b;
        Ok(VectorField {
            components: [
                self.components[0].zip(&other.components[0], f)?,
                self.components[1].zip(&other.components[1], f)?,
            ],
        })
    }

    pub fn eval_at(&self, x: [f64; 2]) -> [f64; 2] {
        [self.components[0].eval_at(x), self.components[1].eval_at(x)]
    }
}

/// Wave vector for odd-order derivatives: the Nyquist line is zeroed so that
/// derivatives of real fields stay real.
pub fn odd_wavevector(grid: &Grid, i: usize, j: usize) -> [f64; 2] {
    let half = grid.resolution() as i64 / 2;
    let k = |idx: usize| if grid.signed_mode(idx) == -half { 0.0 } else { grid.wavenumber(idx) };
    [k(i), k(j)]
}

/// Forward then inverse transform.
pub fn transform_roundtrip(field: &ScalarField) -> ScalarField {
    ScalarField::from_spectral(*field.grid(), field.spectral().to_vec()).expect("same grid")
}

/// Spectral gradient `i k f_hat`.
pub fn gradient(field: &ScalarField) -> VectorField {
    let grid = *field.grid();
    let d = |axis: usize| field.apply_multiplier(|i, j| Complex64::new(0.0, odd_wavevector(&grid, i, j)[axis]));
    VectorField::new(d(0), d(1)).expect("same grid")
}

/// Pointwise product followed by 2/3-rule truncation.
pub fn product_dealiased(f: &ScalarField, g: &ScalarField) -> Result<ScalarField, FieldError> {
    Ok(f.zip(g, |a, b| a * b)?.dealiased())
}

const FDF_MAGIC: &[u8; 4] = b"FDF1";

/// Serialises a field in the FDF1 format.
pub fn write_fdf<W: Write>(field: &ScalarField, mut w: W) -> Result<(), FieldError> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(20 + 8 * grid.len());
    buf.extend_from_slice(FDF_MAGIC);
    buf.extend_from_slice(&(Grid::N_DIM as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.resolution() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.period().to_le_bytes());
    for v in field.samples() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Parses an FDF1 stream.
pub fn read_fdf<R: Read>(mut r: R) -> Result<ScalarField, FieldError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 20 || &bytes[..4] != FDF_MAGIC {
        return Err(FieldError::Format("missing FDF1 header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let n_dim = u32_at(4) as usize;
    if n_dim != Grid::N_DIM {
        return Err(FieldError::Format(format!("unsupported dimension {n_dim}")));
    }
    let n = u32_at(8) as usize;
    let period = f64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let grid = Grid::new(n, period)?;
    let body = &bytes[20..];
    if body.len() != 8 * grid.len() {
        return Err(FieldError::Format(format!("expected {} sample bytes, found {}", 8 * grid.len(), body.len())));
    }
    let samples = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    ScalarField::new(grid, samples)
}

pub fn save_fdf(field: &ScalarField, path: &Path) -> Result<(), FieldError> {
    write_fdf(field, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_fdf(path: &Path) -> Result<ScalarField, FieldError> {
    read_fdf(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::standard(n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(Grid::standard(48), Err(FieldError::NotPowerOfTwo(48))));
        assert!(matches!(Grid::standard(8), Err(FieldError::TooCoarse(8))));
        assert!(matches!(Grid::new(16, -1.0), Err(FieldError::BadPeriod(_))));
        let g = grid(16);
        assert_eq!(g.signed_mode(7), 7);
        assert_eq!(g.signed_mode(8), -8);
        assert_eq!(g.signed_mode(15), -1);
        assert_eq!(g.dealias_cutoff(), 5);
    }

    #[test]
    fn cosine_spectrum_and_roundtrip() {
        let g = grid(32);
        let f = ScalarField::from_fn(g, |x, _| x.cos());
        let s = f.spectral();
        assert!((s[32].re - 0.5).abs() < 1e-14);
        assert!((s[31 * 32].re - 0.5).abs() < 1e-14);
        let back = transform_roundtrip(&f);
        let err = f.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let g = grid(32);
        let f = ScalarField::from_fn(g, |x, _| x.cos());
        let d = gradient(&f);
        let expect = ScalarField::from_fn(g, |x, _| -x.sin());
        assert!(d.component(0).sub(&expect).unwrap().max_abs() < 1e-12);
        assert!(d.component(1).max_abs() < 1e-12);
        let f = ScalarField::from_fn(g, |_, y| (3.0 * y).sin());
        let d = gradient(&f);
        let expect = ScalarField::from_fn(g, |_, y| 3.0 * (3.0 * y).cos());
        assert!(d.component(1).sub(&expect).unwrap().max_abs() < 1e-12);
        assert!(gradient(&ScalarField::constant(g, 2.5)).max_abs() < 1e-14);
    }

    #[test]
    fn dealiased_square_of_cosine() {
        let g = grid(16);
        let f = ScalarField::from_fn(g, |x, _| x.cos());
        let p = product_dealiased(&f, &f).unwrap();
        let expect = ScalarField::from_fn(g, |x, _| 0.5 * (1.0 + (2.0 * x).cos()));
        assert!(p.sub(&expect).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn truncation_removes_modes_above_cutoff() {
        let g = grid(32);
        // modes 4 and 9: product has modes 5 and 13; 13 > 10 is cut
        let f = ScalarField::from_fn(g, |x, _| (4.0 * x).cos());
        let h = ScalarField::from_fn(g, |x, _| (9.0 * x).cos());
        let p = product_dealiased(&f, &h).unwrap();
        let s = p.spectral();
        for (k, c) in s.iter().enumerate() {
            if !g.in_band(k / 32, k % 32) {
                assert!(c.norm() < 1e-15);
            }
        }
        let expect = ScalarField::from_fn(g, |x, _| 0.5 * (5.0 * x).cos());
        assert!(p.sub(&expect).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn fdf_roundtrip_is_bit_exact() {
        let g = Grid::new(16, 3.5).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (x * 1.7).sin() * y.exp() + 1e-300);
        let mut buf = Vec::new();
        write_fdf(&f, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"FDF1");
        assert_eq!(buf.len(), 20 + 8 * 256);
        let back = read_fdf(buf.as_slice()).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert!(back.samples().iter().zip(f.samples()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(read_fdf(&buf[..30]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_fdf(bad.as_slice()).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_band_limited() {
        let g = grid(32);
        let f = ScalarField::from_fn(g, |x, y| (2.0 * x - y).sin() + 0.3 * (3.0 * y).cos());
        for p in [[0.123f64, 4.56], [6.0, 0.01], [3.3, 3.3]] {
            let exact = (2.0 * p[0] - p[1]).sin() + 0.3 * (3.0 * p[1]).cos();
            assert!((f.eval_at(p) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_metric() {
        let g = grid(16);
        let l = g.period();
        assert!((g.torus_distance([0.1, 0.0], [l - 0.1, 0.0]) - 0.2).abs() < 1e-12);
        assert!((g.torus_delta(0.0, 0.75 * l) - 0.25 * l).abs() < 1e-12);
    }
}
