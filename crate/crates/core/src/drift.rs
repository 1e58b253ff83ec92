//! Divergence-free drifts `A[theta]` realised as zero-homogeneous Fourier
//! multipliers, with optional `|xi|^(-/+ eta)` pre-composition and the
//! space-time mollification `A^eps`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{FieldError, Grid, ScalarField, VectorField};

#[derive(Debug, thiserror::Error)]
pub enum DriftError {
    #[error("eta_smooth and eta_rough are mutually exclusive")]
    BothEtas,
    #[error("eta exponents must be finite and non-negative")]
    NegativeEta,
    #[error("mollification parameter must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("multiplier preset {preset:?} is not valid for drift kind {kind:?}")]
    PresetMismatch { kind: DriftKind, preset: MultiplierPreset },
    #[error("snapshot series must have strictly increasing times")]
    BadSeries,
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    /// No transport; the equation reduces to Lévy diffusion.
    None,
    SqgRiesz,
    MultiplierMatrix,
    FvMhd,
}

/// Named multiplier data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierPreset {
    /// `i (xi2, -xi1)/|xi|`, the perpendicular Riesz pair.
    RieszPerp,
    /// Perpendicular Riesz pair weighted by `1 + cos(2 phi)/2`.
    Anisotropic,
    /// `T12 = -T21 = xi1 xi2 / |xi|^3`, `T11 = T22 = 0`, through `A_j = sum_i i xi_i T_ij`.
    FvDefault,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub kind: DriftKind,
    #[serde(default)]
    pub eta_smooth: f64,
    #[serde(default)]
    pub eta_rough: f64,
    #[serde(default)]
    pub multiplier: Option<MultiplierPreset>,
    #[serde(default)]
    pub mollify_eps: f64,
}

impl DriftSpec {
    pub fn sqg() -> Self {
        DriftSpec { kind: DriftKind::SqgRiesz, eta_smooth: 0.0, eta_rough: 0.0, multiplier: None, mollify_eps: 0.0 }
    }

    pub fn none() -> Self {
        DriftSpec { kind: DriftKind::None, ..DriftSpec::sqg() }
    }

    pub fn validate(&self) -> Result<(), DriftError> {
        if self.eta_smooth > 0.0 && self.eta_rough > 0.0 {
            return Err(DriftError::BothEtas);
        }
        if !(self.eta_smooth >= 0.0 && self.eta_rough >= 0.0 && self.eta_smooth.is_finite() && self.eta_rough.is_finite()) {
            return Err(DriftError::NegativeEta);
        }
        if !(self.mollify_eps >= 0.0) {
            return Err(DriftError::BadEpsilon(self.mollify_eps));
        }
        if let Some(p) = self.multiplier {
            let ok = match self.kind {
                DriftKind::MultiplierMatrix => matches!(p, MultiplierPreset::RieszPerp | MultiplierPreset::Anisotropic),
                DriftKind::FvMhd => p == MultiplierPreset::FvDefault,
                _ => false,
            };
            if !ok {
                return Err(DriftError::PresetMismatch { kind: self.kind, preset: p });
            }
        }
        Ok(())
    }

    /// Vector multiplier `M(xi)` (without mollification) at a nonzero wave vector.
    pub fn multiplier_at(&self, xi: [f64; 2]) -> [Complex64; 2] {
        let k = xi[0].hypot(xi[1]);
        let zero = [Complex64::new(0.0, 0.0); 2];
        if k == 0.0 {
            return zero;
        }
        let (u1, u2) = (xi[0] / k, xi[1] / k);
        let i = Complex64::new(0.0, 1.0);
        let base = match self.kind {
            DriftKind::None => return zero,
            DriftKind::SqgRiesz => [i * u2, -i * u1],
            DriftKind::MultiplierMatrix => {
                let m = match self.multiplier.unwrap_or(MultiplierPreset::RieszPerp) {
                    MultiplierPreset::Anisotropic => {
                        let w = 1.0 + 0.5 * (u1 * u1 - u2 * u2);
                        [i * u2 * w, -i * u1 * w]
                    }
                    _ => [i * u2, -i * u1],
                };
                // Leray projection keeps the data divergence-free
                let dot = m[0] * u1 + m[1] * u2;
                [m[0] - dot * u1, m[1] - dot * u2]
            }
            DriftKind::FvMhd => {
                // zero-homogeneous T scaled by 1/|xi|
                let t12 = u1 * u2 / k;
                let t = [[0.0, t12], [-t12, 0.0]];
                let mut a = [Complex64::new(0.0, 0.0); 2];
                for (j, aj) in a.iter_mut().enumerate() {
                    for (ii, x) in xi.iter().enumerate() {
                        *aj += i * x * t[ii][j];
                    }
                }
                a
            }
        };
        let scale = if self.eta_smooth > 0.0 {
            k.powf(-self.eta_smooth)
        } else if self.eta_rough > 0.0 {
            k.powf(self.eta_rough)
        } else {
            1.0
        };
        [base[0] * scale, base[1] * scale]
    }
}

/// Flat-top `C^inf` taper: 1 on `|z| <= 1`, 0 on `|z| >= 2`.
pub fn omega_hat(z: f64) -> f64 {
    let t = z.abs() - 1.0;
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        1.0 - smooth_step(t)
    }
}

/// `C^inf` step from 0 at 0 to 1 at 1.
pub fn smooth_step(t: f64) -> f64 {
    let f = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let a = f(t);
    a / (a + f(1.0 - t))
}

/// Tabulated multipliers of one drift spec on one grid.
#[derive(Debug, Clone)]
pub struct DriftOperator {
    grid: Grid,
    m: [Vec<Complex64>; 2],
    active: bool,
}

impl DriftOperator {
    pub fn new(spec: &DriftSpec, grid: &Grid) -> Result<Self, DriftError> {
        spec.validate()?;
        let n = grid.resolution();
        let half = n as i64 / 2;
        let eps = spec.mollify_eps;
        let table: Vec<[Complex64; 2]> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n, k % n);
                if grid.signed_mode(i) == -half || grid.signed_mode(j) == -half {
                    return [Complex64::new(0.0, 0.0); 2];
                }
                let xi = grid.wavevector(i, j);
                let mut m = spec.multiplier_at(xi);
                if eps > 0.0 {
                    let w = omega_hat(eps * xi[0].hypot(xi[1]));
                    m = [m[0] * w, m[1] * w];
                }
                m
            })
            .collect();
        let m = [table.iter().map(|v| v[0]).collect(), table.iter().map(|v| v[1]).collect()];
        Ok(DriftOperator { grid: *grid, m, active: spec.kind != DriftKind::None })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Whether the drift is identically zero.
    pub fn is_active(&self) -> bool {
        self.active
    }

    /// Spectral drift components of spectral `theta_hat`.
    pub fn apply_spectral(&self, theta_hat: &[Complex64]) -> [Vec<Complex64>; 2] {
        let f = |c: usize| theta_hat.par_iter().zip(self.m[c].par_iter()).map(|(t, m)| t * m).collect();
        [f(0), f(1)]
    }

    pub fn apply(&self, theta: &ScalarField) -> Result<VectorField, DriftError> {
        self.grid.check_same(theta.grid())?;
        let [a1, a2] = self.apply_spectral(theta.spectral());
        Ok(VectorField::new(ScalarField::from_spectral(self.grid, a1)?, ScalarField::from_spectral(self.grid, a2)?)?)
    }

    /// Sup over the lattice of `|M(xi)|`.
    pub fn multiplier_bound(&self) -> f64 {
        self.m[0].iter().zip(&self.m[1]).map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt()).fold(0.0, f64::max)
    }
}

/// `A[theta]` for a drift spec.
pub fn evaluate_drift(spec: &DriftSpec, theta: &ScalarField) -> Result<VectorField, DriftError> {
    DriftOperator::new(spec, theta.grid())?.apply(theta)
}

/// Spatial mollification `A * omega_eps`, i.e. multiplication by `omega_hat(eps xi)`.
pub fn mollify_drift(a: &VectorField, eps: f64) -> Result<VectorField, DriftError> {
    if !(eps > 0.0) {
        return Err(DriftError::BadEpsilon(eps));
    }
    let grid = *a.grid();
    let w = |i: usize, j: usize| {
        let xi = grid.wavevector(i, j);
        Complex64::new(omega_hat(eps * xi[0].hypot(xi[1])), 0.0)
    };
    Ok(VectorField::new(a.component(0).apply_multiplier(w), a.component(1).apply_multiplier(w))?)
}

/// Normalised time bump `psi(t) = c exp(-1/(1-t^2))` on `(-1, 1)`.
pub fn time_bump(t: f64) -> f64 {
    const NORM: f64 = 0.443_993_816_168_079_4;
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp() / NORM
    }
}

/// Space-time mollification of a snapshot series: spatial `omega_eps` followed
/// by trapezoid-rule convolution in time with `psi_eps`, zero-extended outside
/// the series' time span.
pub fn mollify_series(times: &[f64], series: &[VectorField], eps: f64) -> Result<Vec<VectorField>, DriftError> {
    if !(eps > 0.0) {
        return Err(DriftError::BadEpsilon(eps));
    }
    if times.len() != series.len() || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DriftError::BadSeries);
    }
    let spatial: Vec<VectorField> = series.iter().map(|a| mollify_drift(a, eps)).collect::<Result<_, _>>()?;
    let m = times.len();
    if m == 1 {
        return Ok(spatial);
    }
    let weights: Vec<f64> = (0..m)
        .map(|k| {
            let left = if k > 0 { times[k] - times[k - 1] } else { 0.0 };
            let right = if k + 1 < m { times[k + 1] - times[k] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    let grid = *spatial[0].grid();
    let mut out = Vec::with_capacity(m);
    for &tj in times {
        let mut acc = [vec![0.0; grid.len()], vec![0.0; grid.len()]];
        for (k, a) in spatial.iter().enumerate() {
            let w = weights[k] * time_bump((tj - times[k]) / eps) / eps;
            if w == 0.0 {
                continue;
            }
            for (c, acc_c) in acc.iter_mut().enumerate() {
                for (x, v) in acc_c.iter_mut().zip(a.component(c).samples()) {
                    *x += w * v;
                }
            }
        }
        let [a1, a2] = acc;
        out.push(VectorField::new(ScalarField::new(grid, a1)?, ScalarField::new(grid, a2)?)?);
    }
    Ok(out)
}

/// `||div A||_inf`, computed spectrally.
pub fn check_divergence_free(a: &VectorField) -> f64 {
    a.divergence().max_abs()
}

/// Normalisation of [`time_bump`] (`int_{-1}^{1} exp(-1/(1-t^2)) dt`).
pub fn time_bump_mass() -> f64 {
    let m = 20_000;
    (0..m)
        .map(|k| {
            let t = -1.0 + 2.0 * (k as f64 + 0.5) / m as f64;
            (-1.0 / (1.0 - t * t)).exp()
        })
        .sum::<f64>()
        * 2.0
        / m as f64
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::random::{band_limited, SpectrumSpec};

    fn grid() -> Grid {
        Grid::standard(32).unwrap()
    }

    #[test]
    fn sqg_of_cosine() {
        let g = grid();
        let theta = ScalarField::from_fn(g, |x, _| x.cos());
        let a = evaluate_drift(&DriftSpec::sqg(), &theta).unwrap();
        assert!(a.component(0).max_abs() < 1e-14);
        let expect = ScalarField::from_fn(g, |x, _| x.sin());
        assert!(a.component(1).sub(&expect).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn constant_has_zero_drift() {
        let g = grid();
        for kind in [DriftKind::SqgRiesz, DriftKind::MultiplierMatrix, DriftKind::FvMhd] {
            let spec = DriftSpec { kind, ..DriftSpec::sqg() };
            let a = evaluate_drift(&spec, &ScalarField::constant(g, 4.0)).unwrap();
            assert!(a.max_abs() < 1e-14);
        }
    }

    #[test]
    fn presets_are_divergence_free_and_bounded() {
        let g = grid();
        let specs = [
            DriftSpec::sqg(),
            DriftSpec { kind: DriftKind::MultiplierMatrix, multiplier: Some(MultiplierPreset::Anisotropic), ..DriftSpec::sqg() },
            DriftSpec { kind: DriftKind::FvMhd, multiplier: Some(MultiplierPreset::FvDefault), ..DriftSpec::sqg() },
            DriftSpec { eta_smooth: 0.3, ..DriftSpec::sqg() },
        ];
        for (s, spec) in specs.iter().enumerate() {
            let op = DriftOperator::new(spec, &g).unwrap();
            assert!(op.multiplier_bound() <= 1.5 + 1e-12);
            for seed in 0..20 {
                let theta = band_limited(g, seed + 100 * s as u64, &SpectrumSpec::smooth(10.0, 1.0));
                let a = op.apply(&theta).unwrap();
                assert!(check_divergence_free(&a) < 1e-10);
                assert!(a.component(0).mean().abs() < 1e-14 && a.component(1).mean().abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fv_default_is_nontrivial() {
        let g = grid();
        let spec = DriftSpec { kind: DriftKind::FvMhd, multiplier: Some(MultiplierPreset::FvDefault), ..DriftSpec::sqg() };
        let theta = ScalarField::from_fn(g, |x, y| (x + y).cos());
        assert!(evaluate_drift(&spec, &theta).unwrap().max_abs() > 0.1);
    }

    #[test]
    fn validation() {
        let both = DriftSpec { eta_smooth: 0.1, eta_rough: 0.1, ..DriftSpec::sqg() };
        assert!(matches!(both.validate(), Err(DriftError::BothEtas)));
        let wrong = DriftSpec { multiplier: Some(MultiplierPreset::FvDefault), ..DriftSpec::sqg() };
        assert!(matches!(wrong.validate(), Err(DriftError::PresetMismatch { .. })));
        assert!(mollify_drift(&VectorField::zeros(grid()), 0.0).is_err());
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        let g = grid();
        let phi = ScalarField::from_fn(g, |x, y| (2.0 * x).sin() * (3.0 * y).cos());
        let a = crate::field::gradient(&phi);
        // Laplacian = -13 phi
        assert!((check_divergence_free(&a) - 13.0 * phi.max_abs()).abs() < 1e-10);
        assert_eq!(check_divergence_free(&VectorField::zeros(g)), 0.0);
    }

    #[test]
    fn mollifier_is_identity_on_low_band() {
        let g = grid();
        let theta = band_limited(g, 5, &SpectrumSpec::smooth(6.0, 1.0));
        let a = evaluate_drift(&DriftSpec::sqg(), &theta).unwrap();
        let eps = 2.0 * PI / (10.0 * 6.0 * 2f64.sqrt());
        let m = mollify_drift(&a, eps).unwrap();
        assert!(m.component(0).sub(a.component(0)).unwrap().max_abs() < 1e-6);
        assert!(m.component(1).sub(a.component(1)).unwrap().max_abs() < 1e-6);
        let z = mollify_drift(&VectorField::zeros(g), 0.1).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn time_bump_is_normalised() {
        assert!((time_bump_mass() - 0.443_993_816_168_079_4).abs() < 1e-9);
        let m = 4000;
        let s: f64 = (0..m).map(|k| time_bump(-1.0 + 2.0 * (k as f64 + 0.5) / m as f64)).sum::<f64>() * 2.0 / m as f64;
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn omega_hat_profile() {
        assert_eq!(omega_hat(0.0), 1.0);
        assert_eq!(omega_hat(1.0), 1.0);
        assert_eq!(omega_hat(2.0), 0.0);
        assert!((omega_hat(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..100 {
            let v = omega_hat(1.0 + k as f64 / 100.0);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn linearity() {
        let g = grid();
        let f1 = band_limited(g, 1, &SpectrumSpec::smooth(8.0, 1.0));
        let f2 = band_limited(g, 2, &SpectrumSpec::smooth(8.0, 1.0));
        let spec = DriftSpec { eta_rough: 0.2, ..DriftSpec::sqg() };
        let sum = evaluate_drift(&spec, &f1.scaled(2.0).add(&f2).unwrap()).unwrap();
        let a1 = evaluate_drift(&spec, &f1).unwrap();
        let a2 = evaluate_drift(&spec, &f2).unwrap();
        for c in 0..2 {
            let expect = a1.component(c).scaled(2.0).add(a2.component(c)).unwrap();
            assert!(sum.component(c).sub(&expect).unwrap().max_abs() < 1e-12);
        }
    }
}
