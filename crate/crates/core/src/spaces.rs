//! Norm estimators on the periodic grid: Lebesgue, two Besov characterizations,
//! local Morrey-Campanato, Hölder seminorm, and the mean-oscillation ratio
//! checks that compare a ball oscillation against a Besov norm.
//!
//! All reductions are either maxima or fixed-order sums, so every estimator is
//! bit-reproducible independently of the rayon thread count.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::j0;
use crate::drift::omega_hat;
use crate::field::{gradient, interpolate, ordered_sum, FieldError, Fft2, Grid, ScalarField, VectorField};
use crate::levy::{dissipation_functional, LevyError, SymbolTable};
use crate::quadrature::integrate;

#[derive(Debug, thiserror::Error)]
pub enum SpacesError {
    #[error("exponent {name} = {value} outside its admissible range")]
    BadExponent { name: &'static str, value: f64 },
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Levy(#[from] LevyError),
}

fn bad(name: &'static str, value: f64) -> SpacesError {
    SpacesError::BadExponent { name, value }
}

/// `|v|^p` with exact integer powers.
pub(crate) fn abs_pow(v: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p <= 64.0 {
        v.abs().powi(p as i32)
    } else {
        v.abs().powf(p)
    }
}

/// Radius within which displacements are summed directly in the double integrals.
pub const BESOV_NEAR_RADIUS: f64 = 1.0;

/// `||f||_{L^p}` by grid quadrature, `p = inf` as the maximum.
pub fn lp_norm(field: &ScalarField, p: f64) -> Result<f64, SpacesError> {
    if p.is_nan() || p < 1.0 {
        return Err(bad("p", p));
    }
    if p.is_infinite() {
        return Ok(field.max_abs());
    }
    let vals: Vec<f64> = field.samples().par_iter().map(|&v| abs_pow(v, p)).collect();
    Ok((ordered_sum(&vals, field.grid().resolution()) * field.grid().cell_area()).powf(1.0 / p))
}

/// `||A||_{L^p}` of the Euclidean magnitude.
pub fn lp_norm_vector(a: &VectorField, p: f64) -> Result<f64, SpacesError> {
    lp_norm(&a.magnitude(), p)
}

/// Lattice displacements `(di, dj)` with `0 < |(di, dj) h| <= radius`.
fn displacements(grid: &Grid, radius: f64) -> Vec<(i64, i64, f64)> {
    let h = grid.spacing();
    let m = (radius / h).floor() as i64;
    let mut out = Vec::new();
    for di in -m..=m {
        for dj in -m..=m {
            let d = h * ((di * di + dj * dj) as f64).sqrt();
            if d > 0.0 && d <= radius * (1.0 + 1e-12) {
                out.push((di, dj, d));
            }
        }
    }
    out
}

fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// `sum_x |F(x + z) - F(x)|^p h^2` for a displacement `z`, with `F` given by components.
fn difference_sum(comps: &[&[f64]], n: usize, di: i64, dj: i64, p: f64, h2: f64) -> f64 {
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let ii = wrap(i as i64 + di, n);
        let mut acc = 0.0;
        for j in 0..n {
            let jj = wrap(j as i64 + dj, n);
            let d = if comps.len() == 1 {
                comps[0][ii * n + jj] - comps[0][i * n + j]
            } else {
                comps.iter().map(|c| (c[ii * n + jj] - c[i * n + j]).powi(2)).sum::<f64>().sqrt()
            };
            acc += abs_pow(d, p);
        }
        rows.push(acc);
    }
    rows.iter().sum::<f64>() * h2
}

/// Pieces of the double-integral Besov estimator before the `1/p` power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParts {
    /// Lattice sum over displacements `0 < |z| <= 1`.
    pub near: f64,
    /// First-order correction for the excluded cell around `z = 0`.
    pub diagonal: f64,
    /// Analytic bound for `|z| > 1` on the mean-removed field.
    pub tail: f64,
}

impl BesovParts {
    pub fn total(&self) -> f64 {
        self.near + self.diagonal + self.tail
    }
}

fn check_besov_exponents(s: f64, p: f64) -> Result<(), SpacesError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(bad("s", s));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(bad("p", p));
    }
    Ok(())
}

fn besov_parts_components(comps: &[&ScalarField], s: f64, p: f64) -> Result<BesovParts, SpacesError> {
    check_besov_exponents(s, p)?;
    let grid = *comps[0].grid();
    for c in comps {
        grid.check_same(c.grid())?;
    }
    let n = grid.resolution();
    let h = grid.spacing();
    let h2 = grid.cell_area();
    let samples: Vec<&[f64]> = comps.iter().map(|c| c.samples()).collect();
    let disp = displacements(&grid, BESOV_NEAR_RADIUS);
    let terms: Vec<f64> = disp
        .par_iter()
        .map(|&(di, dj, d)| difference_sum(&samples, n, di, dj, p, h2) * h2 / d.powf(2.0 + s * p))
        .collect();
    let near: f64 = terms.iter().sum();

    // |F(x+z)-F(x)|^p ~ |DF(x) z|^p on the cell of area h^2 around z = 0,
    // integrated over the equal-area disc of radius h / sqrt(pi).
    let grads: Vec<VectorField> = comps.iter().map(|c| gradient(c)).collect();
    let r0 = h / PI.sqrt();
    let radial = r0.powf(p * (1.0 - s)) / (p * (1.0 - s));
    let m = 256;
    let angles: Vec<[f64; 2]> = (0..m)
        .map(|k| {
            let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let point_vals: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let ang: f64 = angles
                .iter()
                .map(|e| {
                    let sq: f64 = grads
                        .iter()
                        .map(|g| {
                            let d = g.component(0).samples()[idx] * e[0] + g.component(1).samples()[idx] * e[1];
                            d * d
                        })
                        .sum();
                    abs_pow(sq.sqrt(), p)
                })
                .sum();
            ang * 2.0 * PI / m as f64
        })
        .collect();
    let diagonal = ordered_sum(&point_vals, n) * h2 * radial;

    // |F(x)-F(y)| <= |F(x)-Fbar| + |F(y)-Fbar|, so the far part is at most
    // 2^p ||F - Fbar||_p^p int_{|z|>1} |z|^(-2-sp) dz.
    let means: Vec<f64> = comps.iter().map(|c| c.mean()).collect();
    let centred: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let sq: f64 = comps
                .iter()
                .zip(&means)
                .map(|(c, m)| {
                    let v = c.samples()[idx] - m;
                    v * v
                })
                .sum();
            abs_pow(sq.sqrt(), p)
        })
        .collect();
    let far_mass = 2.0 * PI / (s * p) * BESOV_NEAR_RADIUS.powf(-s * p);
    let tail = 2f64.powf(p) * ordered_sum(&centred, n) * h2 * far_mass;
    Ok(BesovParts { near, diagonal, tail })
}

/// Components of [`besov_double_integral`] before the `1/p` power.
pub fn besov_double_integral_parts(field: &ScalarField, s: f64, p: f64) -> Result<BesovParts, SpacesError> {
    besov_parts_components(&[field], s, p)
}

/// `||f||_{B^{s,p}_p}` from the double integral of `|f(x)-f(y)|^p / |x-y|^(2+sp)`.
pub fn besov_double_integral(field: &ScalarField, s: f64, p: f64) -> Result<f64, SpacesError> {
    Ok(besov_double_integral_parts(field, s, p)?.total().powf(1.0 / p))
}

/// Double-integral Besov norm of a vector field, with Euclidean differences.
pub fn besov_double_integral_vector(a: &VectorField, s: f64, p: f64) -> Result<f64, SpacesError> {
    let [c1, c2] = a.components();
    Ok(besov_parts_components(&[c1, c2], s, p)?.total().powf(1.0 / p))
}

/// Smooth dyadic window `phi_j(|xi|)`.
pub fn dyadic_window(j: u32, k: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let scale = 2f64.powi(j as i32);
    if j == 0 {
        omega_hat(k)
    } else {
        omega_hat(k / scale) - omega_hat(2.0 * k / scale)
    }
}

/// Littlewood-Paley estimate `(sum_j 2^(jsp) ||Delta_j f||_p^p)^(1/p)`.
pub fn besov_dyadic_blocks(field: &ScalarField, s: f64, p: f64) -> Result<f64, SpacesError> {
    if !(s > 0.0 && s < 2.0) {
        return Err(bad("s", s));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(bad("p", p));
    }
    let grid = *field.grid();
    let kmax = grid.kappa() * (grid.resolution() as f64) / 2.0 * 2f64.sqrt();
    let mut total = 0.0;
    let mut j = 0u32;
    while 2f64.powi(j as i32 - 1) <= kmax {
        let block = field.apply_multiplier(|a, b| {
            let xi = grid.wavevector(a, b);
            Complex64::new(dyadic_window(j, xi[0].hypot(xi[1])), 0.0)
        });
        let norm = lp_norm(&block, p)?;
        total += 2f64.powf(j as f64 * s * p) * abs_pow(norm, p);
        j += 1;
    }
    Ok(total.powf(1.0 / p))
}

/// Cell-centre offsets of a grid ball of radius `r`.
fn ball_offsets(grid: &Grid, r: f64) -> Vec<(i64, i64)> {
    let h = grid.spacing();
    let m = (r / h).floor() as i64;
    let mut out = Vec::new();
    for di in -m..=m {
        for dj in -m..=m {
            if h * h * (di * di + dj * dj) as f64 <= r * r * (1.0 + 1e-12) {
                out.push((di, dj));
            }
        }
    }
    out
}

/// Small-radius and large-radius parts of the Morrey-Campanato estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorreyParts {
    /// Max over `r < 1` of `r^(-a/q) ||f - fbar_B||_{L^q(B)}`.
    pub small: f64,
    /// Max over `r >= 1` of `r^(-a/q) ||f||_{L^q(B)}`.
    pub large: f64,
    pub small_radii: Vec<f64>,
    pub large_radii: Vec<f64>,
}

impl MorreyParts {
    pub fn norm(&self) -> f64 {
        self.small.max(self.large)
    }
}

/// Centres sampled at every second grid point.
pub const MORREY_CENTER_STRIDE: usize = 2;

pub fn morrey_campanato_parts(field: &ScalarField, q: f64, a: f64) -> Result<MorreyParts, SpacesError> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(bad("q", q));
    }
    if !(a >= 0.0 && a < 2.0 + q) {
        return Err(bad("a", a));
    }
    let grid = *field.grid();
    let n = grid.resolution();
    let f = field.samples();
    let levels = n.trailing_zeros() as i32;
    let small_radii: Vec<f64> = (1..=levels).map(|k| 2f64.powi(-k)).collect();
    let centres: Vec<(usize, usize)> = (0..n)
        .step_by(MORREY_CENTER_STRIDE)
        .flat_map(|i| (0..n).step_by(MORREY_CENTER_STRIDE).map(move |j| (i, j)))
        .collect();
    let h2 = grid.cell_area();

    let mut small = 0.0f64;
    for &r in &small_radii {
        let offs = ball_offsets(&grid, r);
        let best = centres
            .par_iter()
            .map(|&(i, j)| {
                let vals: Vec<f64> = offs
                    .iter()
                    .map(|&(di, dj)| f[wrap(i as i64 + di, n) * n + wrap(j as i64 + dj, n)])
                    .collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let osc: f64 = vals.iter().map(|v| abs_pow(v - mean, q)).sum::<f64>() * h2;
                osc.powf(1.0 / q)
            })
            .reduce(|| 0.0, f64::max);
        small = small.max(r.powf(-a / q) * best);
    }

    let half = grid.period() / 2.0;
    let mut large_radii: Vec<f64> = [1.0, 2.0, half].into_iter().filter(|&r| r <= half).collect();
    large_radii.dedup();
    let fft = Fft2::get(n);
    let powered: Vec<f64> = f.par_iter().map(|&v| abs_pow(v, q)).collect();
    let pw_hat = fft.forward_real(&powered);
    let mut large = 0.0f64;
    for &r in &large_radii {
        let mut indicator = vec![0.0; grid.len()];
        for (di, dj) in ball_offsets(&grid, r) {
            indicator[wrap(di, n) * n + wrap(dj, n)] = 1.0;
        }
        let ind_hat = fft.forward_real(&indicator);
        let scale = (grid.len() as f64) * h2;
        let conv_hat: Vec<Complex64> = pw_hat.iter().zip(&ind_hat).map(|(x, y)| x * y * scale).collect();
        let conv = fft.inverse_real(&conv_hat);
        let best = centres.iter().map(|&(i, j)| conv[i * n + j].max(0.0)).fold(0.0, f64::max);
        large = large.max(r.powf(-a / q) * best.powf(1.0 / q));
    }
    Ok(MorreyParts { small, large, small_radii, large_radii })
}

/// Local Morrey-Campanato norm `||f||_{M^{q,a}}` on sampled centres and dyadic radii.
pub fn morrey_campanato_norm(field: &ScalarField, q: f64, a: f64) -> Result<f64, SpacesError> {
    Ok(morrey_campanato_parts(field, q, a)?.norm())
}

/// `max |f(x)-f(y)| / |x-y|^gamma` over grid pairs with torus distance in `(0, 1]`.
pub fn holder_seminorm(field: &ScalarField, gamma: f64) -> Result<f64, SpacesError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(bad("gamma", gamma));
    }
    let grid = *field.grid();
    let n = grid.resolution();
    let f = field.samples();
    // z and -z give the same pairs
    let disp: Vec<(i64, i64, f64)> =
        displacements(&grid, 1.0).into_iter().filter(|&(di, dj, _)| di > 0 || (di == 0 && dj > 0)).collect();
    Ok(disp
        .par_iter()
        .map(|&(di, dj, d)| {
            let mut m = 0.0f64;
            for i in 0..n {
                let ii = wrap(i as i64 + di, n);
                for j in 0..n {
                    let jj = wrap(j as i64 + dj, n);
                    m = m.max((f[ii * n + jj] - f[i * n + j]).abs());
                }
            }
            m / d.powf(gamma)
        })
        .reduce(|| 0.0, f64::max))
}

/// Normalised bump `phi(x) = c exp(-1/(1-|x|^2))` on the unit disc and its
/// radial Fourier transform.
pub struct BumpMollifier;

impl BumpMollifier {
    fn profile(r: f64) -> f64 {
        if r >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - r * r)).exp()
        }
    }

    /// `int_{R^2} exp(-1/(1-|x|^2)) dx`.
    pub fn mass() -> f64 {
        static MASS: OnceLock<f64> = OnceLock::new();
        *MASS.get_or_init(|| 2.0 * PI * integrate(|r| r * Self::profile(r), 0.0, 1.0, 1e-15, 8, 400).value)
    }

    /// `phi(x)` for the unit-radius normalised bump.
    pub fn value(r: f64) -> f64 {
        Self::profile(r) / Self::mass()
    }

    /// `phi-hat(t) = 2 pi int_0^1 phi(r) J0(t r) r dr`.
    pub fn hat(t: f64) -> f64 {
        if t == 0.0 {
            return 1.0;
        }
        let panels = 8 + (t / 4.0) as usize;
        2.0 * PI * integrate(|r| Self::value(r) * j0(t * r) * r, 0.0, 1.0, 1e-15, panels, 4000).value
    }

    /// `phi-hat(rho |xi|)` over the spectral lattice, cached per `(grid, rho)`.
    pub fn lattice_hat(grid: &Grid, rho: f64) -> Arc<Vec<f64>> {
        type Key = (usize, u64, u64);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Vec<f64>>>>> = OnceLock::new();
        let key = (grid.resolution(), grid.period().to_bits(), rho.to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = cache.lock().expect("mollifier cache poisoned").get(&key) {
            return v.clone();
        }
        let n = grid.resolution();
        let sq = |k: usize| {
            let (m1, m2) = (grid.signed_mode(k / n), grid.signed_mode(k % n));
            m1 * m1 + m2 * m2
        };
        let mut keys: Vec<i64> = (0..grid.len()).map(sq).collect();
        keys.sort_unstable();
        keys.dedup();
        let kappa = grid.kappa();
        let vals: HashMap<i64, f64> =
            keys.par_iter().map(|&m| (m, Self::hat(rho * kappa * (m as f64).sqrt()))).collect::<Vec<_>>().into_iter().collect();
        let table = Arc::new((0..grid.len()).map(|k| vals[&sq(k)]).collect::<Vec<_>>());
        cache.lock().expect("mollifier cache poisoned").insert(key, table.clone());
        table
    }

    /// `(f * phi_rho)(x)` for `phi_rho = rho^-2 phi(./rho)`.
    pub fn mollified_at(field: &ScalarField, rho: f64, x: [f64; 2]) -> f64 {
        let grid = *field.grid();
        let hat = Self::lattice_hat(&grid, rho);
        let coeffs: Vec<Complex64> = field.spectral().iter().zip(hat.iter()).map(|(c, w)| c * w).collect();
        interpolate(&grid, &coeffs, x)
    }

    /// Spectral coefficients of `f * phi_rho`.
    pub fn mollified_spectral(field: &ScalarField, rho: f64) -> Vec<Complex64> {
        let hat = Self::lattice_hat(field.grid(), rho);
        field.spectral().iter().zip(hat.iter()).map(|(c, w)| c * w).collect()
    }
}

/// Values of the trigonometric interpolant on a `q x q` tensor grid of cell
/// centres covering `[c - R, c + R]^2`; returns points and values for cells
/// whose centre lies in the disc `B(c, R)`, and the sub-cell area.
pub fn ball_samples(field: &ScalarField, center: [f64; 2], radius: f64, q: usize) -> (Vec<[f64; 2]>, Vec<f64>, f64) {
    let grid = *field.grid();
    let n = grid.resolution();
    let step = 2.0 * radius / q as f64;
    let coords: Vec<[f64; 2]> = (0..q)
        .map(|a| {
            let o = -radius + step * (a as f64 + 0.5);
            [center[0] + o, center[1] + o]
        })
        .collect();
    let c = field.spectral();
    // G[a][j] = sum_i e^{i xi_i x_a} C[i][j]
    let g: Vec<Vec<Complex64>> = coords
        .par_iter()
        .map(|x| {
            let mut row = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                let e = Complex64::from_polar(1.0, grid.wavenumber(i) * x[0]);
                for (r, v) in row.iter_mut().zip(&c[i * n..(i + 1) * n]) {
                    *r += e * v;
                }
            }
            row
        })
        .collect();
    let e2: Vec<Vec<Complex64>> = coords
        .iter()
        .map(|x| (0..n).map(|j| Complex64::from_polar(1.0, grid.wavenumber(j) * x[1])).collect())
        .collect();
    let mut pts = Vec::new();
    let mut vals = Vec::new();
    for a in 0..q {
        for b in 0..q {
            let (oa, ob) = (coords[a][0] - center[0], coords[b][1] - center[1]);
            if oa * oa + ob * ob > radius * radius {
                continue;
            }
            let v: f64 = g[a].iter().zip(&e2[b]).map(|(x, y)| (x * y).re).sum();
            pts.push([coords[a][0], coords[b][1]]);
            vals.push(v);
        }
    }
    (pts, vals, step * step)
}

/// Tensor resolution used for ball quadrature: at least 32 across and twice the grid density.
pub fn ball_resolution(grid: &Grid, radius: f64) -> usize {
    (32usize).max((4.0 * radius / grid.spacing()).ceil() as usize)
}

/// Outcome of one ratio check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl RatioCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs == 0.0 { 0.0 } else { f64::INFINITY };
        RatioCheck { lhs, rhs, ratio }
    }
}

/// `||A - Abar_rho(center)||_{L^p(B(center, R))}`, `Abar_rho` the bump-mollified value.
pub fn ball_oscillation(a: &VectorField, rho: f64, center: [f64; 2], radius: f64, p: f64) -> Result<f64, SpacesError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(SpacesError::BadRadius(rho));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(SpacesError::BadRadius(radius));
    }
    let q = ball_resolution(a.grid(), radius);
    let mut sq: Option<Vec<f64>> = None;
    let mut w = 0.0;
    for c in a.components() {
        let bar = BumpMollifier::mollified_at(c, rho, center);
        let (_, vals, cell) = ball_samples(c, center, radius, q);
        w = cell;
        let acc = sq.get_or_insert_with(|| vec![0.0; vals.len()]);
        for (s, v) in acc.iter_mut().zip(vals) {
            *s += (v - bar) * (v - bar);
        }
    }
    let total: f64 = sq.unwrap_or_default().iter().map(|&s| abs_pow(s.sqrt(), p)).sum();
    Ok((total * w).powf(1.0 / p))
}

/// Ball oscillation on `B(center, 2^k rho)` against
/// `(2^k rho)^s 2^(kn/p) ||A||_{B^{s,p}_p}`, with the Besov norm supplied.
pub fn oscillation_check_with_norm(
    a: &VectorField,
    besov: f64,
    rho: f64,
    center: [f64; 2],
    s: f64,
    p: f64,
    k: u32,
) -> Result<RatioCheck, SpacesError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(bad("s", s));
    }
    let scale = 2f64.powi(k as i32);
    let big = scale * rho;
    let lhs = ball_oscillation(a, rho, center, big, p)?;
    let rhs = big.powf(s) * scale.powf(2.0 / p) * besov;
    Ok(RatioCheck::new(lhs, rhs))
}

/// Mean-oscillation check on `B(center, rho)` with Besov exponent `alpha / p`.
pub fn mean_oscillation_lemma_check(
    a: &VectorField,
    rho: f64,
    center: [f64; 2],
    alpha: f64,
    p: f64,
) -> Result<RatioCheck, SpacesError> {
    mean_oscillation_shifted_check(a, rho, center, alpha / p, p)
}

/// As [`mean_oscillation_lemma_check`] with an explicit (possibly eta-shifted) exponent `s`.
pub fn mean_oscillation_shifted_check(
    a: &VectorField,
    rho: f64,
    center: [f64; 2],
    s: f64,
    p: f64,
) -> Result<RatioCheck, SpacesError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(bad("s", s));
    }
    let besov = besov_double_integral_vector(a, s, p)?;
    oscillation_check_with_norm(a, besov, rho, center, s, p, 0)
}

/// Dyadic-annulus variant on `B(center, 2^k rho)`.
pub fn mean_oscillation_annulus_check(
    a: &VectorField,
    rho: f64,
    center: [f64; 2],
    s: f64,
    p: f64,
    k: u32,
) -> Result<RatioCheck, SpacesError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(bad("s", s));
    }
    let besov = besov_double_integral_vector(a, s, p)?;
    oscillation_check_with_norm(a, besov, rho, center, s, p, k)
}

/// `||f||^p_{B^{alpha/p,p}_p}` against `|| |f|^(p/2) ||_2^2 + D_p(f)`.
pub fn besov_vs_dissipation(field: &ScalarField, symbol: &SymbolTable, alpha: f64, p: f64) -> Result<RatioCheck, SpacesError> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(bad("p", p));
    }
    let lhs = besov_double_integral_parts(field, alpha / p, p)?.total();
    let lp = abs_pow(lp_norm(field, p)?, p);
    let rhs = lp + dissipation_functional(field, symbol, p)?;
    Ok(RatioCheck::new(lhs, rhs))
}

/// Which estimator produced a Besov value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesovMethod {
    DoubleIntegral,
    DyadicBlocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovEntry {
    pub s: f64,
    pub p: f64,
    pub method: BesovMethod,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorreyEntry {
    pub q: f64,
    pub a: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderEntry {
    pub gamma: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormMeta {
    pub n: usize,
    pub period: f64,
    pub besov_near_radius: f64,
    pub morrey_small_radii: Vec<f64>,
    pub morrey_large_radii: Vec<f64>,
    pub morrey_center_stride: usize,
}

/// Which norms to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRequest {
    pub lp: Vec<f64>,
    pub besov: Vec<(f64, f64)>,
    pub morrey: Vec<(f64, f64)>,
    pub holder: Vec<f64>,
    /// Also evaluate the dyadic-block estimator for each Besov pair.
    pub dyadic: bool,
}

impl Default for NormRequest {
    fn default() -> Self {
        NormRequest {
            lp: vec![2.0, 4.0, 8.0, f64::INFINITY],
            besov: vec![(0.5, 2.0)],
            morrey: vec![(2.0, 1.0)],
            holder: vec![0.1],
            dyadic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `(p, value)`; `p = inf` is stored as `f64::INFINITY` and serialised as `"inf"`.
    pub lp: Vec<(String, f64)>,
    pub besov: Vec<BesovEntry>,
    pub morrey: Vec<MorreyEntry>,
    pub holder: Vec<HolderEntry>,
    pub meta: NormMeta,
}

/// Label for an exponent, `inf` for infinity.
pub fn exponent_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        format!("{p}")
    }
}

pub fn norm_report(field: &ScalarField, req: &NormRequest) -> Result<NormReport, SpacesError> {
    let grid = *field.grid();
    let lp = req.lp.iter().map(|&p| Ok((exponent_label(p), lp_norm(field, p)?))).collect::<Result<_, SpacesError>>()?;
    let mut besov = Vec::new();
    for &(s, p) in &req.besov {
        besov.push(BesovEntry { s, p, method: BesovMethod::DoubleIntegral, value: besov_double_integral(field, s, p)? });
        if req.dyadic {
            besov.push(BesovEntry { s, p, method: BesovMethod::DyadicBlocks, value: besov_dyadic_blocks(field, s, p)? });
        }
    }
    let mut morrey = Vec::new();
    let mut small_radii = Vec::new();
    let mut large_radii = Vec::new();
    for &(q, a) in &req.morrey {
        let parts = morrey_campanato_parts(field, q, a)?;
        morrey.push(MorreyEntry { q, a, value: parts.norm() });
        small_radii = parts.small_radii;
        large_radii = parts.large_radii;
    }
    let holder =
        req.holder.iter().map(|&g| Ok(HolderEntry { gamma: g, value: holder_seminorm(field, g)? })).collect::<Result<_, SpacesError>>()?;
    Ok(NormReport {
        lp,
        besov,
        morrey,
        holder,
        meta: NormMeta {
            n: grid.resolution(),
            period: grid.period(),
            besov_near_radius: BESOV_NEAR_RADIUS,
            morrey_small_radii: small_radii,
            morrey_large_radii: large_radii,
            morrey_center_stride: MORREY_CENTER_STRIDE,
        },
    })
}
