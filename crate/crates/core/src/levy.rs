//! Lévy-type operators `L^alpha` given by their Fourier symbol `a(xi)`.
//!
//! The truncated-stable kernel is radial, so its Lévy-Khinchin symbol reduces
//! to a one-dimensional Hankel-type integral
//! `a(k) = 2 pi int_0^inf pi(rho) rho (1 - J0(k rho)) d rho`,
//! evaluated per distinct lattice radius and cached per (spec, grid).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::j0;
use crate::field::{ordered_sum, FieldError, Grid, ScalarField};
use crate::quadrature;

#[derive(Debug, thiserror::Error)]
pub enum LevyError {
    #[error("alpha must lie in (0, 2), got {0}")]
    AlphaOutOfRange(f64),
    #[error("invalid Lévy spec: {0}")]
    InvalidSpec(&'static str),
    #[error("Lévy-Khinchin quadrature did not converge at lattice point ({m1}, {m2}): error {error:e} > tol {tol:e}")]
    NonConvergence { m1: i64, m2: i64, error: f64, tol: f64 },
    #[error("dissipation functional requires p >= 2, got {0}")]
    BadExponent(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevyKind {
    PureFractional,
    TruncatedStable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevySpec {
    pub alpha: f64,
    pub delta: f64,
    pub cbar1: f64,
    pub cbar2: f64,
    pub kind: LevyKind,
}

impl LevySpec {
    /// Fractional Laplacian `|xi|^alpha`.
    pub fn fractional(alpha: f64) -> Self {
        LevySpec { alpha, delta: 0.5 * alpha, cbar1: 1.0, cbar2: 1.0, kind: LevyKind::PureFractional }
    }

    pub fn truncated_stable(alpha: f64, delta: f64, cbar1: f64, cbar2: f64) -> Self {
        LevySpec { alpha, delta, cbar1, cbar2, kind: LevyKind::TruncatedStable }
    }

    pub fn validate(&self) -> Result<(), LevyError> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(LevyError::AlphaOutOfRange(self.alpha));
        }
        if !(self.delta > 0.0 && self.delta < self.alpha) {
            return Err(LevyError::InvalidSpec("0 < delta < alpha"));
        }
        if !(self.cbar1 > 0.0 && self.cbar1 <= self.cbar2) {
            return Err(LevyError::InvalidSpec("0 < cbar1 <= cbar2"));
        }
        Ok(())
    }

    /// Radial kernel `pi(|y|)` of the truncated-stable family.
    pub fn kernel(&self, rho: f64) -> f64 {
        let n = 2.0;
        if rho <= 1.0 {
            self.cbar1 * rho.powf(-n - self.alpha)
        } else {
            self.cbar1 * (-(rho - 1.0)).exp() * rho.powf(-n - self.delta)
        }
    }

    fn cache_key(&self) -> [u64; 5] {
        [
            self.alpha.to_bits(),
            self.delta.to_bits(),
            self.cbar1.to_bits(),
            self.cbar2.to_bits(),
            matches!(self.kind, LevyKind::TruncatedStable) as u64,
        ]
    }
}

/// Symbol values on the spectral lattice, in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    grid: Grid,
    values: Arc<Vec<f64>>,
}

impl SymbolTable {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.resolution() + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// The table as a real field over the lattice (FFT order), for export.
    pub fn to_field(&self) -> ScalarField {
        ScalarField::new(self.grid, self.values.to_vec()).expect("grid-sized table")
    }
}

fn tabulate(grid: Grid, radial: impl Fn(i64, f64) -> Result<f64, LevyError> + Sync) -> Result<SymbolTable, LevyError> {
    let n = grid.resolution();
    let mut keys: Vec<i64> = (0..grid.len())
        .map(|k| {
            let (m1, m2) = (grid.signed_mode(k / n), grid.signed_mode(k % n));
            m1 * m1 + m2 * m2
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let kappa = grid.kappa();
    let computed: Vec<(i64, f64)> = keys
        .par_iter()
        .map(|&key| radial(key, kappa * (key as f64).sqrt()).map(|v| (key, v)))
        .collect::<Result<_, _>>()?;
    let map: HashMap<i64, f64> = computed.into_iter().collect();
    let values = (0..grid.len())
        .map(|k| {
            let (m1, m2) = (grid.signed_mode(k / n), grid.signed_mode(k % n));
            map[&(m1 * m1 + m2 * m2)]
        })
        .collect();
    Ok(SymbolTable { grid, values: Arc::new(values) })
}

/// `a(xi) = |xi|^alpha` on the lattice.
pub fn symbol_fractional(alpha: f64, grid: &Grid) -> Result<SymbolTable, LevyError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(LevyError::AlphaOutOfRange(alpha));
    }
    tabulate(*grid, |_, k| Ok(if k == 0.0 { 0.0 } else { k.powf(alpha) }))
}

const TAIL_CUTOFF: f64 = 45.0;
const TAYLOR_SCALE: f64 = 0.01;

/// Radial Lévy-Khinchin symbol of the truncated-stable kernel at `|xi| = k`,
/// with its absolute error estimate.
pub fn truncated_stable_symbol(spec: &LevySpec, k: f64, tol: f64) -> (f64, f64) {
    if k == 0.0 {
        return (0.0, 0.0);
    }
    let (a, d, c) = (spec.alpha, spec.delta, spec.cbar1);
    let budget = tol / (3.0 * 2.0 * PI);
    let rt = (TAYLOR_SCALE / k).min(1.0);
    // 1 - J0(u) = u^2/4 - u^4/64 + u^6/2304 - ...
    let taylor = c
        * (k.powi(2) / 4.0 * rt.powf(2.0 - a) / (2.0 - a) - k.powi(4) / 64.0 * rt.powf(4.0 - a) / (4.0 - a)
            + k.powi(6) / 2304.0 * rt.powf(6.0 - a) / (6.0 - a));
    let one_minus_j0 = |u: f64| if u < 1e-3 { u * u / 4.0 - u.powi(4) / 64.0 } else { 1.0 - j0(u) };
    let mut value = taylor;
    let mut error = 0.0;
    if rt < 1.0 {
        // log substitution rho = e^t tames the power law
        let core = quadrature::integrate(
            |t: f64| {
                let rho = t.exp();
                c * rho.powf(-a) * one_minus_j0(k * rho)
            },
            rt.ln(),
            0.0,
            budget,
            16 + (k / 2.0) as usize,
            20_000,
        );
        value += core.value;
        error += core.error;
    }
    let tail = quadrature::integrate(
        |rho: f64| c * (-(rho - 1.0)).exp() * rho.powf(-1.0 - d) * one_minus_j0(k * rho),
        1.0,
        1.0 + TAIL_CUTOFF,
        budget,
        16 + (k * TAIL_CUTOFF / PI) as usize,
        40_000,
    );
    value += tail.value;
    error += tail.error;
    (2.0 * PI * value, 2.0 * PI * (error + budget * 1e-3))
}

/// Lévy-Khinchin symbol `a(xi) = int (1 - cos(xi.y)) pi(y) dy` tabulated by
/// adaptive polar quadrature with absolute error `tol` per lattice point.
pub fn symbol_levy_khinchin(spec: &LevySpec, grid: &Grid, tol: f64) -> Result<SymbolTable, LevyError> {
    spec.validate()?;
    if spec.kind == LevyKind::PureFractional {
        return symbol_fractional(spec.alpha, grid);
    }
    let n = grid.resolution();
    tabulate(*grid, |key, k| {
        let (v, err) = truncated_stable_symbol(spec, k, tol);
        if err > tol || !v.is_finite() {
            let m1 = (0..n as i64).find(|m| m * m <= key && is_square(key - m * m)).unwrap_or(0);
            let m2 = ((key - m1 * m1) as f64).sqrt().round() as i64;
            return Err(LevyError::NonConvergence { m1, m2, error: err, tol });
        }
        Ok(v)
    })
}

fn is_square(v: i64) -> bool {
    let r = (v as f64).sqrt().round() as i64;
    r * r == v
}

pub const DEFAULT_SYMBOL_TOL: f64 = 1e-9;

/// Cached symbol for `spec` on `grid`.
pub fn symbol_for(spec: &LevySpec, grid: &Grid) -> Result<SymbolTable, LevyError> {
    type Key = ([u64; 5], usize, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, SymbolTable>>> = OnceLock::new();
    spec.validate()?;
    let key = (spec.cache_key(), grid.resolution(), grid.period().to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("symbol cache poisoned").get(&key) {
        return Ok(t.clone());
    }
    let table = symbol_levy_khinchin(spec, grid, DEFAULT_SYMBOL_TOL)?;
    cache.lock().expect("symbol cache poisoned").insert(key, table.clone());
    Ok(table)
}

/// `L^alpha f` by spectral multiplication.
pub fn apply_operator(symbol: &SymbolTable, field: &ScalarField) -> Result<ScalarField, LevyError> {
    symbol.grid.check_same(field.grid())?;
    Ok(field.apply_multiplier(|i, j| Complex64::new(symbol.at(i, j), 0.0)))
}

/// `D_p(f) = int |f|^(p-2) f L^alpha f dx` by grid quadrature.
pub fn dissipation_functional(field: &ScalarField, symbol: &SymbolTable, p: f64) -> Result<f64, LevyError> {
    if p.is_nan() || p < 2.0 {
        return Err(LevyError::BadExponent(p));
    }
    let lf = apply_operator(symbol, field)?;
    Ok(dissipation_with(field, &lf, p))
}

/// `D_p` given a precomputed `L^alpha f`.
pub fn dissipation_with(field: &ScalarField, lf: &ScalarField, p: f64) -> f64 {
    let vals: Vec<f64> = field
        .samples()
        .par_iter()
        .zip(lf.samples().par_iter())
        .map(|(&f, &l)| signed_pow(f, p - 1.0) * l)
        .collect();
    ordered_sum(&vals, field.grid().resolution()) * field.grid().cell_area()
}

/// `|f|^(e-1) f`, with integer powers taken exactly.
pub fn signed_pow(f: f64, e: f64) -> f64 {
    if e == 1.0 {
        f
    } else if e.fract() == 0.0 && e < 64.0 {
        let m = f.abs().powi(e as i32 - 1);
        m * f
    } else {
        f.abs().powf(e - 1.0) * f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_examples() {
        let g = Grid::standard(16).unwrap();
        let s = symbol_fractional(1.0, &g).unwrap();
        assert_eq!(s.at(2, 0), 2.0);
        let s = symbol_fractional(1.5, &g).unwrap();
        assert!((s.at(0, 2) - 2f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(s.at(0, 0), 0.0);
        assert!(matches!(symbol_fractional(2.0, &g), Err(LevyError::AlphaOutOfRange(_))));
    }

    #[test]
    fn eigenfunction_decay() {
        let g = Grid::standard(32).unwrap();
        let s = symbol_fractional(0.7, &g).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (3.0 * x + 4.0 * y).cos());
        let lf = apply_operator(&s, &f).unwrap();
        let expect = f.scaled(5f64.powf(0.7));
        assert!(lf.sub(&expect).unwrap().max_abs() < 1e-12);
        assert!(apply_operator(&s, &ScalarField::constant(g, 3.0)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn dissipation_p2_matches_parseval() {
        let g = Grid::standard(32).unwrap();
        let s = symbol_fractional(1.2, &g).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (x).sin() + 0.5 * (2.0 * y - x).cos() + 0.1);
        let d = dissipation_functional(&f, &s, 2.0).unwrap();
        let spectral: f64 = f.spectral().iter().zip(s.values()).map(|(c, a)| a * c.norm_sqr()).sum::<f64>() * g.area();
        assert!((d - spectral).abs() < 1e-12 * spectral);
        assert!(matches!(dissipation_functional(&f, &s, 1.5), Err(LevyError::BadExponent(_))));
    }

    #[test]
    fn truncated_stable_symbol_is_symmetric_and_positive() {
        let g = Grid::standard(16).unwrap();
        let spec = LevySpec::truncated_stable(1.0, 0.6, 1.0, 1.0);
        let s = symbol_levy_khinchin(&spec, &g, 1e-9).unwrap();
        assert_eq!(s.at(0, 0), 0.0);
        let n = 16;
        for i in 0..n {
            for j in 0..n {
                assert!(s.at(i, j) > 0.0 || (i, j) == (0, 0));
                assert_eq!(s.at(i, j), s.at((n - i) % n, (n - j) % n));
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(LevySpec::truncated_stable(1.0, 1.2, 1.0, 1.0).validate().is_err());
        assert!(LevySpec::truncated_stable(1.0, 0.5, 2.0, 1.0).validate().is_err());
        assert!(LevySpec::fractional(2.5).validate().is_err());
    }
}
