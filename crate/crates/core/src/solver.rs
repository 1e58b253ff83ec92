//! Forward solvers for `d_t theta = div(A[theta] theta) - L^alpha theta (+ eps Lap theta)`.
//!
//! The production scheme is integrating-factor RK4 in spectral space: the
//! linear part `a(xi) + eps |xi|^2` is integrated exactly, the transport term is
//! evaluated on the grid and projected onto the dealiased band. `theta0` is
//! projected onto the band at start, so every state stays in band and the
//! discrete advection is exactly `L^2`-neutral.
//!
//! The Picard mild scheme iterates the Duhamel formula of the regularized
//! problem and exists to observe its contraction, not for production runs.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::{DriftError, DriftKind, DriftOperator, DriftSpec};
use crate::field::{ordered_sum, FieldError, Fft2, Grid, ScalarField, VectorField};
use crate::levy::{signed_pow, symbol_for, LevyError, LevySpec, SymbolTable};
use crate::spaces::{abs_pow, besov_double_integral, SpacesError};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("CFL violation at step {step} (t = {t}): dt = {dt} exceeds limit {limit}")]
    Cfl { step: usize, t: f64, dt: f64, limit: f64 },
    #[error("non-finite state at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("Picard iteration does not contract on a window of length {window}: factor {factor}")]
    NonContraction { window: f64, factor: f64 },
    #[error("exponent p = {0} is not tracked by this trajectory")]
    NotTracked(f64),
    #[error("dissipation balance needs an even integer p >= 2, got {0}")]
    OddExponent(f64),
    #[error("time {0} outside the trajectory span")]
    OutOfSpan(f64),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Drift(#[from] DriftError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Spaces(#[from] SpacesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EtdRk4,
    PicardMild,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub levy: LevySpec,
    pub drift: DriftSpec,
    pub t_final: f64,
    pub dt: f64,
    pub eps_viscosity: f64,
    pub scheme: Scheme,
    pub checkpoint_stride: usize,
    /// Safety factor `c` of the advective bound `dt <= c / (max|k| max|A| + 1)`.
    pub cfl: f64,
    /// `L^p` exponents tracked at every step (`inf` allowed).
    #[serde(with = "exponent_list")]
    pub lp: Vec<f64>,
    /// When set, `||theta||_{B^{alpha/p,p}_p}` is recorded at every checkpoint.
    pub besov_p: Option<f64>,
}

impl SolveConfig {
    pub fn new(levy: LevySpec, drift: DriftSpec, t_final: f64, dt: f64) -> Self {
        SolveConfig {
            levy,
            drift,
            t_final,
            dt,
            eps_viscosity: 0.0,
            scheme: Scheme::EtdRk4,
            checkpoint_stride: 10,
            cfl: 1.0,
            lp: vec![2.0, 4.0, 8.0, f64::INFINITY],
            besov_p: None,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        self.levy.validate()?;
        self.drift.validate()?;
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("t_final must be positive");
        }
        if !(self.dt > 0.0 && self.dt <= self.t_final) {
            return bad("dt must lie in (0, t_final]");
        }
        if !(self.eps_viscosity >= 0.0 && self.eps_viscosity.is_finite()) {
            return bad("eps_viscosity must be non-negative");
        }
        if self.checkpoint_stride == 0 {
            return bad("checkpoint_stride must be at least 1");
        }
        if !(self.cfl > 0.0) {
            return bad("cfl must be positive");
        }
        if self.lp.iter().any(|p| p.is_nan() || *p < 1.0) {
            return bad("tracked L^p exponents must be >= 1");
        }
        if let Some(p) = self.besov_p {
            let s = self.levy.alpha / p;
            if !(p >= 1.0 && s > 0.0 && s < 1.0) {
                return bad("besov_p must give alpha/p in (0, 1)");
            }
        }
        if self.scheme == Scheme::PicardMild && self.eps_viscosity <= 0.0 {
            return bad("picard_mild requires eps_viscosity > 0");
        }
        Ok(())
    }

    /// Number of steps and the step actually used (`t_final / steps`).
    pub fn steps(&self) -> (usize, f64) {
        let m = (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize;
        (m, self.t_final / m as f64)
    }
}

/// Diagnostics recorded after every step (and at `t = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    /// `||theta||_{L^p}` for each tracked `p`.
    pub lp: Vec<f64>,
    /// `D_p(theta) = int |theta|^(p-2) theta L^alpha theta` for each tracked finite `p >= 2`, else 0.
    pub dissipation: Vec<f64>,
    /// `||grad theta||_2^2`.
    pub grad_sq: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub config: SolveConfig,
    pub times: Vec<f64>,
    pub theta: Vec<ScalarField>,
    pub drift: Vec<VectorField>,
    pub steps: Vec<StepRecord>,
    /// `||theta(t_k)||_{B^{alpha/p,p}_p}` at each checkpoint when requested.
    pub besov: Vec<f64>,
    /// Step actually used.
    pub dt: f64,
}

fn locate(times: &[f64], t: f64) -> Result<(usize, f64), SolverError> {
    let last = *times.last().expect("nonempty trajectory");
    if !(t >= -1e-12 && t <= last * (1.0 + 1e-12) + 1e-12) {
        return Err(SolverError::OutOfSpan(t));
    }
    let t = t.clamp(0.0, last);
    let k = times.partition_point(|&x| x <= t).saturating_sub(1).min(times.len().saturating_sub(2));
    if times.len() == 1 {
        return Ok((0, 0.0));
    }
    let w = (t - times[k]) / (times[k + 1] - times[k]);
    Ok((k, w.clamp(0.0, 1.0)))
}

impl Trajectory {
    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("nonempty trajectory")
    }

    pub fn final_theta(&self) -> &ScalarField {
        self.theta.last().expect("nonempty trajectory")
    }

    /// Linear interpolation of `theta` between checkpoints.
    pub fn theta_at(&self, t: f64) -> Result<ScalarField, SolverError> {
        let (k, w) = locate(&self.times, t)?;
        if w == 0.0 || self.times.len() == 1 {
            return Ok(self.theta[k].clone());
        }
        Ok(self.theta[k].zip(&self.theta[k + 1], |a, b| a + w * (b - a))?)
    }

    /// Linear interpolation of the stored drift between checkpoints.
    pub fn drift_at(&self, t: f64) -> Result<VectorField, SolverError> {
        let (k, w) = locate(&self.times, t)?;
        if w == 0.0 || self.times.len() == 1 {
            return Ok(self.drift[k].clone());
        }
        Ok(self.drift[k].lerp(&self.drift[k + 1], w)?)
    }

    fn lp_index(&self, p: f64) -> Result<usize, SolverError> {
        self.config.lp.iter().position(|&q| q == p).ok_or(SolverError::NotTracked(p))
    }

    /// `||theta(t)||_{L^p}` at every recorded step.
    pub fn lp_series(&self, p: f64) -> Result<Vec<(f64, f64)>, SolverError> {
        let i = self.lp_index(p)?;
        Ok(self.steps.iter().map(|s| (s.t, s.lp[i])).collect())
    }

    /// Records at checkpoint times.
    pub fn checkpoint_records(&self) -> Vec<&StepRecord> {
        let stride = self.config.checkpoint_stride;
        let last = self.steps.len() - 1;
        self.steps.iter().enumerate().filter(|(k, _)| k % stride == 0 || *k == last).map(|(_, s)| s).collect()
    }

    /// Trapezoid-in-time integral of `||theta||^p_{B^{alpha/p,p}_p}` over checkpoints.
    pub fn besov_energy(&self) -> Option<f64> {
        let p = self.config.besov_p?;
        if self.besov.len() != self.times.len() {
            return None;
        }
        let vals: Vec<f64> = self.besov.iter().map(|b| abs_pow(*b, p)).collect();
        Some(trapezoid(&self.times, &vals))
    }
}

fn trapezoid(t: &[f64], v: &[f64]) -> f64 {
    t.windows(2).zip(v.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Composite Simpson on uniform samples with step `h`; an odd interval count
/// closes with the 3/8 rule.
fn simpson_uniform(h: f64, v: &[f64]) -> f64 {
    let m = v.len().saturating_sub(1);
    match m {
        0 => 0.0,
        1 => 0.5 * h * (v[0] + v[1]),
        2 => h / 3.0 * (v[0] + 4.0 * v[1] + v[2]),
        _ => {
            let even = if m % 2 == 0 { m } else { m - 3 };
            let mut s = 0.0;
            for k in (0..even).step_by(2) {
                s += h / 3.0 * (v[k] + 4.0 * v[k + 1] + v[k + 2]);
            }
            if even < m {
                let k = even;
                s += 3.0 * h / 8.0 * (v[k] + 3.0 * v[k + 1] + 3.0 * v[k + 2] + v[k + 3]);
            }
            s
        }
    }
}

/// Spectral right-hand side of the transport term and the linear factors.
struct Dynamics {
    grid: Grid,
    drift: DriftOperator,
    /// `i xi` with the Nyquist line zeroed.
    ik: [Vec<Complex64>; 2],
    band: Vec<bool>,
    /// `a(xi) + eps |xi|^2`.
    lambda: Vec<f64>,
    symbol: SymbolTable,
    kmax: f64,
}

impl Dynamics {
    fn new(grid: Grid, cfg: &SolveConfig, drift: &DriftSpec) -> Result<Self, SolverError> {
        let n = grid.resolution();
        let symbol = symbol_for(&cfg.levy, &grid)?;
        let op = DriftOperator::new(drift, &grid)?;
        let mut ik = [Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())];
        let mut band = Vec::with_capacity(grid.len());
        let mut lambda = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let (i, j) = (k / n, k % n);
            let w = crate::field::odd_wavevector(&grid, i, j);
            ik[0].push(Complex64::new(0.0, w[0]));
            ik[1].push(Complex64::new(0.0, w[1]));
            band.push(grid.in_band(i, j));
            let xi = grid.wavevector(i, j);
            lambda.push(symbol.at(i, j) + cfg.eps_viscosity * (xi[0] * xi[0] + xi[1] * xi[1]));
        }
        let kmax = grid.kappa() * grid.dealias_cutoff() as f64 * 2f64.sqrt();
        Ok(Dynamics { grid, drift: op, ik, band, lambda, symbol, kmax })
    }

    fn project(&self, v: &mut [Complex64]) {
        v.par_iter_mut().zip(self.band.par_iter()).for_each(|(c, &b)| {
            if !b {
                *c = Complex64::new(0.0, 0.0);
            }
        });
    }

    /// `P div(A[theta] theta)` in spectral form, and `max |A|` on the grid.
    fn transport(&self, theta_hat: &[Complex64]) -> (Vec<Complex64>, f64) {
        if !self.drift.is_active() {
            return (vec![Complex64::new(0.0, 0.0); theta_hat.len()], 0.0);
        }
        let fft = Fft2::get(self.grid.resolution());
        let theta = fft.inverse_real(theta_hat);
        let [a1h, a2h] = self.drift.apply_spectral(theta_hat);
        let a1 = fft.inverse_real(&a1h);
        let a2 = fft.inverse_real(&a2h);
        let amax = a1.par_iter().zip(a2.par_iter()).map(|(x, y)| x.hypot(*y)).reduce(|| 0.0, f64::max);
        let f1: Vec<f64> = a1.par_iter().zip(theta.par_iter()).map(|(a, t)| a * t).collect();
        let f2: Vec<f64> = a2.par_iter().zip(theta.par_iter()).map(|(a, t)| a * t).collect();
        let f1h = fft.forward_real(&f1);
        let f2h = fft.forward_real(&f2);
        let mut out: Vec<Complex64> = (0..theta_hat.len())
            .into_par_iter()
            .map(|k| self.ik[0][k] * f1h[k] + self.ik[1][k] * f2h[k])
            .collect();
        self.project(&mut out);
        (out, amax)
    }

    fn cfl_limit(&self, amax: f64, c: f64) -> f64 {
        c / (self.kmax * amax + 1.0)
    }
}

fn record(dynamics: &Dynamics, cfg: &SolveConfig, theta_hat: &[Complex64], t: f64) -> Result<StepRecord, SolverError> {
    let grid = dynamics.grid;
    let n = grid.resolution();
    let fft = Fft2::get(n);
    let theta = fft.inverse_real(theta_hat);
    let needs_l = cfg.lp.iter().any(|p| p.is_finite() && *p >= 2.0);
    let ltheta = if needs_l {
        let lh: Vec<Complex64> = theta_hat.par_iter().zip(dynamics.symbol.values().par_iter()).map(|(c, a)| c * a).collect();
        Some(fft.inverse_real(&lh))
    } else {
        None
    };
    let area = grid.cell_area();
    let mut lp = Vec::with_capacity(cfg.lp.len());
    let mut dissipation = Vec::with_capacity(cfg.lp.len());
    for &p in &cfg.lp {
        if p.is_infinite() {
            lp.push(theta.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            dissipation.push(0.0);
            continue;
        }
        let pw: Vec<f64> = theta.par_iter().map(|&v| abs_pow(v, p)).collect();
        lp.push((ordered_sum(&pw, n) * area).powf(1.0 / p));
        match (&ltheta, p >= 2.0) {
            (Some(l), true) => {
                let d: Vec<f64> = theta.par_iter().zip(l.par_iter()).map(|(&f, &g)| signed_pow(f, p - 1.0) * g).collect();
                dissipation.push(ordered_sum(&d, n) * area);
            }
            _ => dissipation.push(0.0),
        }
    }
    let grad_sq = (0..grid.len())
        .map(|k| {
            let xi = grid.wavevector(k / n, k % n);
            (xi[0] * xi[0] + xi[1] * xi[1]) * theta_hat[k].norm_sqr()
        })
        .sum::<f64>()
        * grid.area();
    if lp.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite { step: 0, t });
    }
    Ok(StepRecord { t, lp, dissipation, grad_sq, mean: theta_hat[0].re })
}

struct Recorder<'a> {
    dynamics: &'a Dynamics,
    cfg: &'a SolveConfig,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    fn step(&mut self, theta_hat: &[Complex64], t: f64, checkpoint: bool, step: usize) -> Result<(), SolverError> {
        let rec = record(self.dynamics, self.cfg, theta_hat, t).map_err(|e| match e {
            SolverError::NonFinite { t, .. } => SolverError::NonFinite { step, t },
            e => e,
        })?;
        self.traj.steps.push(rec);
        if checkpoint {
            let grid = self.dynamics.grid;
            let theta = ScalarField::from_spectral(grid, theta_hat.to_vec())?;
            let [a1, a2] = self.dynamics.drift.apply_spectral(theta_hat);
            let drift = VectorField::new(ScalarField::from_spectral(grid, a1)?, ScalarField::from_spectral(grid, a2)?)?;
            if let Some(p) = self.cfg.besov_p {
                self.traj.besov.push(besov_double_integral(&theta, self.cfg.levy.alpha / p, p)?);
            }
            self.traj.times.push(t);
            self.traj.theta.push(theta);
            self.traj.drift.push(drift);
        }
        Ok(())
    }
}

fn project_initial(dynamics: &Dynamics, theta0: &ScalarField) -> Vec<Complex64> {
    let mut hat = theta0.spectral().to_vec();
    dynamics.project(&mut hat);
    hat
}

/// Runs the configured scheme from `theta0` to `t_final`.
pub fn solve(theta0: &ScalarField, cfg: &SolveConfig) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    match cfg.scheme {
        Scheme::EtdRk4 => solve_if_rk4(theta0, cfg),
        Scheme::PicardMild => solve_picard(theta0, cfg),
    }
}

fn empty_trajectory(grid: Grid, cfg: &SolveConfig, dt: f64) -> Trajectory {
    Trajectory {
        grid,
        config: cfg.clone(),
        times: Vec::new(),
        theta: Vec::new(),
        drift: Vec::new(),
        steps: Vec::new(),
        besov: Vec::new(),
        dt,
    }
}

fn combine(len: usize, f: impl Fn(usize) -> Complex64 + Sync + Send) -> Vec<Complex64> {
    (0..len).into_par_iter().map(f).collect()
}

fn solve_if_rk4(theta0: &ScalarField, cfg: &SolveConfig) -> Result<Trajectory, SolverError> {
    let grid = *theta0.grid();
    let dynamics = Dynamics::new(grid, cfg, &cfg.drift)?;
    let (nsteps, dt) = cfg.steps();
    let e_half: Vec<f64> = dynamics.lambda.iter().map(|l| (-0.5 * l * dt).exp()).collect();
    let e_full: Vec<f64> = e_half.iter().map(|e| e * e).collect();
    let mut u = project_initial(&dynamics, theta0);
    let mut rec = Recorder { dynamics: &dynamics, cfg, traj: empty_trajectory(grid, cfg, dt) };
    rec.step(&u, 0.0, true, 0)?;
    for step in 1..=nsteps {
        let t_prev = (step - 1) as f64 * dt;
        let (k1, amax) = dynamics.transport(&u);
        let limit = dynamics.cfl_limit(amax, cfg.cfl);
        if dt > limit {
            return Err(SolverError::Cfl { step, t: t_prev, dt, limit });
        }
        let s2 = combine(u.len(), |k| e_half[k] * (u[k] + 0.5 * dt * k1[k]));
        let (k2, _) = dynamics.transport(&s2);
        let s3 = combine(u.len(), |k| e_half[k] * u[k] + 0.5 * dt * k2[k]);
        let (k3, _) = dynamics.transport(&s3);
        let s4 = combine(u.len(), |k| e_full[k] * u[k] + dt * e_half[k] * k3[k]);
        let (k4, _) = dynamics.transport(&s4);
        u = combine(u.len(), |k| {
            e_full[k] * u[k] + dt / 6.0 * (e_full[k] * k1[k] + 2.0 * e_half[k] * (k2[k] + k3[k]) + k4[k])
        });
        let t = step as f64 * dt;
        if u.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SolverError::NonFinite { step, t });
        }
        let checkpoint = step % cfg.checkpoint_stride == 0 || step == nsteps;
        rec.step(&u, t, checkpoint, step)?;
    }
    Ok(rec.traj)
}

/// Result of one Picard solve on a window.
#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub field: ScalarField,
    pub iterations: usize,
    /// Ratio of the last two successive-iterate differences.
    pub contraction_factor: f64,
    /// Final successive difference, `sup_t ||theta^(k+1)(t) - theta^k(t)||_{L^2}`.
    pub residual: f64,
}

pub const PICARD_TOL: f64 = 1e-9;
pub const PICARD_MAX_ITERS: usize = 50;

/// Picard iteration on the node values of `[0, window]`; returns all nodes.
fn picard_nodes(
    guess: &[Complex64],
    theta0: &[Complex64],
    dynamics: &Dynamics,
    eps: f64,
    window: f64,
    dt: f64,
) -> Result<(Vec<Vec<Complex64>>, usize, f64, f64), SolverError> {
    let grid = dynamics.grid;
    let n = grid.resolution();
    let m = (window / dt - 1e-9).ceil().max(1.0) as usize;
    let ds = window / m as f64;
    let k2: Vec<f64> = (0..grid.len())
        .map(|k| {
            let xi = grid.wavevector(k / n, k % n);
            xi[0] * xi[0] + xi[1] * xi[1]
        })
        .collect();
    let heat = |k: usize, t: f64| (-eps * k2[k] * t).exp();
    let mut iterate: Vec<Vec<Complex64>> = vec![guess.to_vec(); m + 1];
    let mut prev_diff = f64::NAN;
    let mut factor = 0.0;
    for it in 1..=PICARD_MAX_ITERS {
        // F(s_l) = P div(A^eps theta) - a theta at each node
        let forcing: Vec<Vec<Complex64>> = iterate
            .iter()
            .map(|u| {
                let (mut f, _) = dynamics.transport(u);
                f.par_iter_mut().enumerate().for_each(|(k, c)| *c -= dynamics.symbol.values()[k] * u[k]);
                f
            })
            .collect();
        let next: Vec<Vec<Complex64>> = (0..=m)
            .map(|j| {
                let tj = j as f64 * ds;
                (0..grid.len())
                    .into_par_iter()
                    .map(|k| {
                        let mut acc = heat(k, tj) * theta0[k];
                        for (l, f) in forcing.iter().enumerate().take(j + 1) {
                            let w = if j == 0 { 0.0 } else if l == 0 || l == j { 0.5 * ds } else { ds };
                            if w != 0.0 {
                                acc += w * heat(k, tj - l as f64 * ds) * f[k];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let diff = next
            .iter()
            .zip(&iterate)
            .map(|(a, b)| (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * grid.area()).sqrt())
            .fold(0.0, f64::max);
        iterate = next;
        if !diff.is_finite() {
            return Err(SolverError::NonContraction { window, factor: f64::INFINITY });
        }
        if prev_diff.is_finite() && prev_diff > 0.0 {
            factor = diff / prev_diff;
        }
        if diff < PICARD_TOL {
            return Ok((iterate, it, factor, diff));
        }
        // two consecutive growing differences: the map does not contract
        if it >= 3 && factor >= 1.0 && diff > prev_diff {
            return Err(SolverError::NonContraction { window, factor });
        }
        prev_diff = diff;
        if it == PICARD_MAX_ITERS {
            return Ok((iterate, it, factor, diff));
        }
    }
    unreachable!("loop returns on the last iteration")
}

fn mollified_drift(cfg: &SolveConfig) -> DriftSpec {
    let mut d = cfg.drift;
    if d.mollify_eps <= 0.0 && d.kind != DriftKind::None {
        d.mollify_eps = cfg.eps_viscosity;
    }
    d
}

/// Picard iteration of the regularized Duhamel formula on `[0, t_window]`,
/// started from `theta_guess` (constant in time), with node spacing `config.dt`.
pub fn picard_mild_step(
    theta_guess: &ScalarField,
    theta0: &ScalarField,
    config: &SolveConfig,
    t_window: f64,
) -> Result<PicardOutcome, SolverError> {
    if config.eps_viscosity <= 0.0 {
        return Err(SolverError::InvalidConfig("picard_mild requires eps_viscosity > 0".into()));
    }
    if !(t_window > 0.0 && t_window.is_finite()) {
        return Err(SolverError::InvalidConfig("t_window must be positive".into()));
    }
    config.levy.validate()?;
    let grid = *theta0.grid();
    grid.check_same(theta_guess.grid())?;
    let drift = mollified_drift(config);
    let dynamics = Dynamics::new(grid, config, &drift)?;
    let g = project_initial(&dynamics, theta_guess);
    let u0 = project_initial(&dynamics, theta0);
    let (nodes, iterations, contraction_factor, residual) =
        picard_nodes(&g, &u0, &dynamics, config.eps_viscosity, t_window, config.dt.min(t_window))?;
    let last = nodes.last().expect("at least one node").clone();
    Ok(PicardOutcome { field: ScalarField::from_spectral(grid, last)?, iterations, contraction_factor, residual })
}

fn solve_picard(theta0: &ScalarField, cfg: &SolveConfig) -> Result<Trajectory, SolverError> {
    let grid = *theta0.grid();
    let drift = mollified_drift(cfg);
    let dynamics = Dynamics::new(grid, cfg, &drift)?;
    let (nsteps, dt) = cfg.steps();
    let mut u = project_initial(&dynamics, theta0);
    let mut rec = Recorder { dynamics: &dynamics, cfg, traj: empty_trajectory(grid, cfg, dt) };
    rec.step(&u, 0.0, true, 0)?;
    let mut step = 0;
    while step < nsteps {
        let len = cfg.checkpoint_stride.min(nsteps - step);
        let window = len as f64 * dt;
        // the linear part has no drift-dependent limit; the window itself is the restriction
        let (nodes, _, _, _) = picard_nodes(&u, &u, &dynamics, cfg.eps_viscosity, window, dt)?;
        for (j, node) in nodes.iter().enumerate().skip(1) {
            let s = step + j;
            rec.step(node, s as f64 * dt, j == len, s)?;
        }
        u = nodes[len].clone();
        step += len;
    }
    Ok(rec.traj)
}

/// Balance `||theta(T)||_p^p + p int_0^T D_p ds (+ viscous term) = ||theta0||_p^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_error: f64,
}

/// Energy balance from the per-step records, integrated in time by Simpson's rule. The viscous contribution is
/// included exactly for `p = 2` and omitted for `p > 2`.
pub fn dissipation_balance(traj: &Trajectory, p: f64) -> Result<Balance, SolverError> {
    if !(p >= 2.0 && p.fract() == 0.0 && (p as i64) % 2 == 0) {
        return Err(SolverError::OddExponent(p));
    }
    let i = traj.lp_index(p)?;
    let d: Vec<f64> = traj.steps.iter().map(|s| s.dissipation[i]).collect();
    let first = traj.steps.first().expect("nonempty trajectory");
    let last = traj.steps.last().expect("nonempty trajectory");
    let mut lhs = abs_pow(last.lp[i], p) + p * simpson_uniform(traj.dt, &d);
    if p == 2.0 && traj.config.eps_viscosity > 0.0 {
        let g: Vec<f64> = traj.steps.iter().map(|s| s.grad_sq).collect();
        lhs += 2.0 * traj.config.eps_viscosity * simpson_uniform(traj.dt, &g);
    }
    let rhs = abs_pow(first.lp[i], p);
    let relative_error = if rhs > 0.0 { (lhs - rhs).abs() / rhs } else { (lhs - rhs).abs() };
    Ok(Balance { lhs, rhs, relative_error })
}

/// JSON has no infinity, so `inf` exponents travel as the string `"inf"`.
mod exponent_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Exponent {
        Finite(f64),
        Named(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|p| if p.is_finite() { Exponent::Finite(*p) } else { Exponent::Named("inf".into()) })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Exponent>::deserialize(d)?
            .into_iter()
            .map(|e| match e {
                Exponent::Finite(p) => Ok(p),
                Exponent::Named(n) if n == "inf" => Ok(f64::INFINITY),
                Exponent::Named(n) => Err(serde::de::Error::custom(format!("unknown exponent {n:?}"))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{band_limited, SpectrumSpec};

    fn grid(n: usize) -> Grid {
        Grid::standard(n).unwrap()
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        for m in [2usize, 3, 4, 5, 7] {
            let h = 1.0 / m as f64;
            let v: Vec<f64> = (0..=m).map(|k| (k as f64 * h).powi(3)).collect();
            assert!((simpson_uniform(h, &v) - 0.25).abs() < 1e-14, "m = {m}");
        }
    }

    #[test]
    fn infinite_exponents_survive_json() {
        let cfg = SolveConfig::new(LevySpec::fractional(1.0), DriftSpec::none(), 1.0, 0.1);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"inf\""));
        let back: SolveConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.lp, cfg.lp);
    }

    #[test]
    fn constant_stays_constant() {
        let g = grid(32);
        let cfg = SolveConfig::new(LevySpec::fractional(1.0), DriftSpec::sqg(), 0.1, 1e-2);
        let traj = solve(&ScalarField::constant(g, 0.7), &cfg).unwrap();
        for th in &traj.theta {
            assert!(th.map(|v| v - 0.7).max_abs() < 1e-14);
        }
        let b = dissipation_balance(&traj, 2.0).unwrap();
        assert!(b.relative_error < 1e-14);
    }

    #[test]
    fn single_mode_decays_exactly() {
        let g = grid(32);
        let alpha = 1.3;
        let mut cfg = SolveConfig::new(LevySpec::fractional(alpha), DriftSpec::none(), 1.0, 1e-3);
        cfg.checkpoint_stride = 100;
        let theta0 = ScalarField::from_fn(g, |x, y| (2.0 * x + y).cos());
        let traj = solve(&theta0, &cfg).unwrap();
        let decay = (-(5f64).sqrt().powf(alpha)).exp();
        let expect = theta0.scaled(decay);
        assert!(traj.final_theta().sub(&expect).unwrap().max_abs() < 1e-8);
        assert!(dissipation_balance(&traj, 2.0).unwrap().relative_error < 1e-6);
    }

    #[test]
    fn sqg_conserves_mean_and_decreases_l2() {
        let g = grid(32);
        let mut cfg = SolveConfig::new(LevySpec::fractional(1.0), DriftSpec::sqg(), 0.2, 2e-3);
        cfg.lp = vec![2.0];
        let theta0 = band_limited(g, 4, &SpectrumSpec::smooth(6.0, 2.0)).map(|v| v + 0.3);
        let traj = solve(&theta0, &cfg).unwrap();
        for w in traj.steps.windows(2) {
            assert!(w[1].lp[0] <= w[0].lp[0] * (1.0 + 1e-12));
            assert!((w[1].mean - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn cfl_violation_aborts() {
        let g = grid(32);
        let cfg = SolveConfig::new(LevySpec::fractional(1.0), DriftSpec::sqg(), 1.0, 0.5);
        let theta0 = ScalarField::from_fn(g, |x, _| 5.0 * x.cos());
        assert!(matches!(solve(&theta0, &cfg), Err(SolverError::Cfl { step: 1, .. })));
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolveConfig::new(LevySpec::fractional(1.0), DriftSpec::sqg(), 1.0, 0.1);
        cfg.scheme = Scheme::PicardMild;
        assert!(cfg.validate().is_err());
        cfg.eps_viscosity = 0.01;
        assert!(cfg.validate().is_ok());
        cfg.checkpoint_stride = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn picard_zero_data() {
        let g = grid(16);
        let mut cfg = SolveConfig::new(LevySpec::fractional(1.0), DriftSpec::sqg(), 1.0, 0.01);
        cfg.eps_viscosity = 0.05;
        let z = ScalarField::zeros(g);
        let out = picard_mild_step(&z, &z, &cfg, 0.05).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.field.max_abs(), 0.0);
    }

    #[test]
    fn picard_contracts_on_short_windows_and_fails_on_long_ones() {
        let g = grid(16);
        let mut cfg = SolveConfig::new(LevySpec::fractional(1.0), DriftSpec::sqg(), 1.0, 0.01);
        cfg.eps_viscosity = 0.05;
        let theta0 = band_limited(g, 9, &SpectrumSpec::smooth(4.0, 1.0));
        let short = picard_mild_step(&theta0, &theta0, &cfg, 0.04).unwrap();
        assert!(short.contraction_factor < 1.0);
        assert!(short.residual < PICARD_TOL);
        let mut window = 0.04;
        let mut failed = None;
        for _ in 0..8 {
            window *= 2.0;
            if let Err(SolverError::NonContraction { window, factor }) = picard_mild_step(&theta0, &theta0, &cfg, window) {
                assert!(factor >= 1.0);
                failed = Some(window);
                break;
            }
        }
        assert!(failed.is_some());
    }

    #[test]
    fn picard_agrees_with_rk4_for_the_regularized_problem() {
        let g = grid(16);
        let mut cfg = SolveConfig::new(LevySpec::fractional(1.0), DriftSpec::sqg(), 0.05, 1e-3);
        cfg.eps_viscosity = 0.05;
        cfg.drift.mollify_eps = 0.05;
        let theta0 = band_limited(g, 9, &SpectrumSpec::smooth(4.0, 1.0));
        let rk = solve(&theta0, &cfg).unwrap();
        let out = picard_mild_step(&theta0, &theta0, &cfg, 0.05).unwrap();
        let err = out.field.sub(rk.final_theta()).unwrap().max_abs();
        assert!(err < 1e-4 * theta0.max_abs(), "err {err}");
    }

    #[test]
    fn interpolation_between_checkpoints() {
        let g = grid(16);
        let mut cfg = SolveConfig::new(LevySpec::fractional(1.0), DriftSpec::sqg(), 0.1, 0.01);
        cfg.checkpoint_stride = 5;
        let theta0 = band_limited(g, 3, &SpectrumSpec::smooth(4.0, 1.0));
        let traj = solve(&theta0, &cfg).unwrap();
        assert_eq!(traj.times.len(), 3);
        let mid = traj.theta_at(0.025).unwrap();
        let avg = traj.theta[0].zip(&traj.theta[1], |a, b| 0.5 * (a + b)).unwrap();
        assert!(mid.sub(&avg).unwrap().max_abs() < 1e-14);
        assert!(traj.drift_at(0.1).is_ok());
        assert!(traj.theta_at(0.2).is_err());
    }
}
