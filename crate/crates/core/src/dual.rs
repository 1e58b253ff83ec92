//! Backward dual equation `d_s psi = -div(A(t-s) psi) - L^alpha psi` against a
//! stored forward trajectory, molecule construction and validation, center
//! transport, the evolution envelopes and the transfer bracket
//! `B(s) = int theta(t-s) psi(s)`.
//!
//! The dual uses the same band projection and integrating-factor RK4 as the
//! forward solver, so for in-band data the bracket is conserved up to the
//! time-stepping and drift-interpolation errors.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exponents::{unit_ball_volume, MoleculeParams};
use crate::field::{interpolate, odd_wavevector, ordered_sum, FieldError, Fft2, Grid, ScalarField, VectorField};
use crate::levy::{symbol_for, LevyError};
use crate::solver::{SolverError, Trajectory};
use crate::spaces::{lp_norm, BumpMollifier, SpacesError};

#[derive(Debug, thiserror::Error)]
pub enum DualError {
    #[error("molecule infeasible: {0}")]
    Infeasible(&'static str),
    #[error("invalid molecule parameters: {0}")]
    InvalidMolecule(&'static str),
    #[error("trajectory carries no drift snapshots")]
    MissingDrift,
    #[error("t_pivot = {t_pivot} outside (0, {t_final}]")]
    BadPivot { t_pivot: f64, t_final: f64 },
    #[error("invalid dual configuration: {0}")]
    InvalidConfig(String),
    #[error("CFL violation in the dual at step {step} (s = {s}): ds = {ds} exceeds limit {limit}")]
    Cfl { step: usize, s: f64, ds: f64, limit: f64 },
    #[error("non-finite dual state at step {step} (s = {s})")]
    NonFinite { step: usize, s: f64 },
    #[error("dual checkpoint s = {0} has no matching forward checkpoint")]
    Misaligned(f64),
    #[error("dual horizon {s_final} exceeds eps r^alpha = {limit}")]
    HorizonTooLong { s_final: f64, limit: f64 },
    #[error("dual run has no molecule attached")]
    NoMolecule,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Spaces(#[from] SpacesError),
}

/// A molecule realization on the grid.
#[derive(Debug, Clone)]
pub struct Molecule {
    pub r: f64,
    pub x0: [f64; 2],
    pub zeta: f64,
    pub omega: f64,
    pub gamma: f64,
    pub field: ScalarField,
}

/// Fraction of each bound used by [`make_molecule`].
pub const MOLECULE_SLACK: f64 = 0.95;

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// Bump core on `[0, r/2)` minus a ring on `(r/2, r)`, balanced to zero mass
/// in the continuum (the band projection then removes the residual mean exactly).
fn molecule_profile(r: f64) -> impl Fn(f64) -> f64 {
    let core = move |d: f64| bump(d / (0.5 * r));
    let ring = move |d: f64| bump((d - 0.75 * r) / (0.25 * r));
    let m = 4000;
    let mass = |f: &dyn Fn(f64) -> f64| -> f64 {
        (0..m).map(|k| {
            let d = r * (k as f64 + 0.5) / m as f64;
            d * f(d)
        }).sum::<f64>() * r / m as f64
    };
    let c = mass(&core) / mass(&ring);
    move |d: f64| core(d) - c * ring(d)
}

/// Concentration, height, `L^1` norm and mean of a field around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoleculeMeasures {
    /// `int |psi| |x - center|^omega dx`.
    pub concentration: f64,
    /// `||psi||_inf` on the grid.
    pub height: f64,
    pub l1: f64,
    /// `int psi dx`.
    pub integral: f64,
}

pub fn molecule_measures(psi: &ScalarField, center: [f64; 2], omega: f64) -> MoleculeMeasures {
    let grid = *psi.grid();
    let n = grid.resolution();
    let conc: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let x = [grid.coord(k / n), grid.coord(k % n)];
            psi.samples()[k].abs() * grid.torus_distance(x, center).powf(omega)
        })
        .collect();
    let abs: Vec<f64> = psi.samples().iter().map(|v| v.abs()).collect();
    MoleculeMeasures {
        concentration: ordered_sum(&conc, n) * grid.cell_area(),
        height: psi.max_abs(),
        l1: ordered_sum(&abs, n) * grid.cell_area(),
        integral: psi.integral(),
    }
}

/// Builds a mean-zero, radially symmetric molecule of size `r` at `x0`,
/// projected onto the dealiased band, with amplitude at [`MOLECULE_SLACK`]
/// of the tighter of the concentration and height bounds.
pub fn make_molecule(r: f64, x0: [f64; 2], zeta: f64, omega: f64, gamma: f64, grid: &Grid) -> Result<Molecule, DualError> {
    if !(zeta > 1.0 && zeta.is_finite()) {
        return Err(DualError::InvalidMolecule("zeta > 1"));
    }
    if !(gamma > 0.0 && gamma < omega && omega < 0.25) {
        return Err(DualError::InvalidMolecule("0 < gamma < omega < 1/4"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(DualError::InvalidMolecule("r > 0"));
    }
    if r < 2.0 * grid.spacing() {
        return Err(DualError::Infeasible("resolution: r >= 2h needed to resolve the core and ring"));
    }
    if 2.0 * r > grid.period() {
        return Err(DualError::Infeasible("support: 2r must fit in the period"));
    }
    let profile = molecule_profile(r);
    let raw = ScalarField::from_fn(*grid, |x, y| profile(grid.torus_distance([x, y], x0)));
    let shaped = raw.apply_multiplier(|i, j| {
        if (i, j) != (0, 0) && grid.in_band(i, j) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let m = molecule_measures(&shaped, x0, omega);
    let zr = zeta * r;
    let amp = MOLECULE_SLACK * (zr.powf(omega - gamma) / m.concentration).min(zr.powf(-(2.0 + gamma)) / m.height);
    Ok(Molecule { r, x0, zeta, omega, gamma, field: shaped.scaled(amp) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub value: f64,
    pub limit: f64,
    pub ok: bool,
}

impl BoundCheck {
    fn le(value: f64, limit: f64) -> Self {
        BoundCheck { value, limit, ok: value <= limit }
    }
}

/// Tolerance for the vanishing moment of small molecules.
pub const MOMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeCheck {
    pub concentration: BoundCheck,
    pub height: BoundCheck,
    /// Present only for `r < 1`.
    pub moment: Option<BoundCheck>,
    /// Consequence `||psi||_1 <= 2 v_n^(omega/(n+omega)) (zeta r)^(-gamma)`.
    pub l1: BoundCheck,
    pub violated: Vec<String>,
}

impl MoleculeCheck {
    pub fn ok(&self) -> bool {
        self.violated.is_empty()
    }
}

/// `2 v_n^(omega/(n+omega))`, the `L^1` constant implied by the two molecule bounds.
pub fn l1_constant(n: u32, omega: f64) -> f64 {
    2.0 * unit_ball_volume(n).powf(omega / (n as f64 + omega))
}

/// Re-checks every molecule condition on a field by grid quadrature.
pub fn check_molecule_field(psi: &ScalarField, r: f64, x0: [f64; 2], zeta: f64, omega: f64, gamma: f64) -> MoleculeCheck {
    let m = molecule_measures(psi, x0, omega);
    let zr = zeta * r;
    let concentration = BoundCheck::le(m.concentration, zr.powf(omega - gamma));
    let height = BoundCheck::le(m.height, zr.powf(-(2.0 + gamma)));
    let moment = (r < 1.0).then(|| BoundCheck::le(m.integral.abs(), MOMENT_TOL));
    let l1 = BoundCheck::le(m.l1, l1_constant(2, omega) * zr.powf(-gamma));
    let mut violated = Vec::new();
    if !concentration.ok {
        violated.push("concentration".to_string());
    }
    if !height.ok {
        violated.push("height".to_string());
    }
    if moment.is_some_and(|b| !b.ok) {
        violated.push("moment".to_string());
    }
    if !l1.ok {
        violated.push("l1".to_string());
    }
    MoleculeCheck { concentration, height, moment, l1, violated }
}

pub fn validate_molecule(m: &Molecule) -> MoleculeCheck {
    check_molecule_field(&m.field, m.r, m.x0, m.zeta, m.omega, m.gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualConfig {
    /// Step; defaults to the trajectory step.
    pub ds: Option<f64>,
    /// Horizon; defaults to `t_pivot`.
    pub s_final: Option<f64>,
    /// Defaults to the trajectory stride.
    pub checkpoint_stride: Option<usize>,
    /// Mollification radius for the center ODE; no center transport when unset.
    pub rho: Option<f64>,
    /// `L^{p'}` exponents recorded at checkpoints.
    pub lp: Vec<f64>,
    pub cfl: f64,
}

impl Default for DualConfig {
    fn default() -> Self {
        DualConfig { ds: None, s_final: None, checkpoint_stride: None, rho: None, lp: vec![1.0, 4.0 / 3.0, 2.0], cfl: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct DualRun {
    pub t_pivot: f64,
    pub ds: f64,
    /// Dual times `s` of the checkpoints.
    pub times: Vec<f64>,
    pub psi: Vec<ScalarField>,
    /// `x(s)` at each checkpoint; empty without center transport.
    pub center_path: Vec<[f64; 2]>,
    /// `||psi(s)||_{L^{p'}}` per checkpoint, one entry per configured exponent.
    pub lp: Vec<Vec<f64>>,
    pub lp_exponents: Vec<f64>,
    pub molecule: Option<Molecule>,
}

struct Plan {
    steps: usize,
    ds: f64,
    stride: usize,
    s_final: f64,
}

fn plan(traj: &Trajectory, t_pivot: f64, cfg: &DualConfig) -> Result<Plan, DualError> {
    let t_final = traj.t_final();
    if !(t_pivot > 0.0 && t_pivot <= t_final * (1.0 + 1e-12)) {
        return Err(DualError::BadPivot { t_pivot, t_final });
    }
    if traj.drift.len() != traj.times.len() || traj.drift.is_empty() {
        return Err(DualError::MissingDrift);
    }
    let s_final = cfg.s_final.unwrap_or(t_pivot);
    if !(s_final > 0.0 && s_final <= t_pivot * (1.0 + 1e-12)) {
        return Err(DualError::InvalidConfig(format!("s_final = {s_final} must lie in (0, t_pivot]")));
    }
    let ds = cfg.ds.unwrap_or(traj.dt);
    if !(ds > 0.0) {
        return Err(DualError::InvalidConfig("ds must be positive".into()));
    }
    let steps = (s_final / ds - 1e-9).ceil().max(1.0) as usize;
    let stride = cfg.checkpoint_stride.unwrap_or(traj.config.checkpoint_stride).max(1);
    if cfg.lp.iter().any(|p| p.is_nan() || *p < 1.0) {
        return Err(DualError::InvalidConfig("L^p' exponents must be >= 1".into()));
    }
    Ok(Plan { steps, ds: s_final / steps as f64, stride, s_final })
}

/// Physical drift `A(t_pivot - s)` from the stored snapshots.
fn drift_at(traj: &Trajectory, t_pivot: f64, s: f64) -> Result<VectorField, DualError> {
    Ok(traj.drift_at((t_pivot - s).max(0.0))?)
}

/// `-P div(A psi)` in spectral form, and `max |A|`.
fn dual_transport(a: &VectorField, psi_hat: &[Complex64], ik: &[Vec<Complex64>; 2], band: &[bool]) -> (Vec<Complex64>, f64) {
    let grid = *a.grid();
    let fft = Fft2::get(grid.resolution());
    let psi = fft.inverse_real(psi_hat);
    let a1 = a.component(0).samples();
    let a2 = a.component(1).samples();
    let amax = a1.par_iter().zip(a2.par_iter()).map(|(x, y)| x.hypot(*y)).reduce(|| 0.0, f64::max);
    if amax == 0.0 {
        return (vec![Complex64::new(0.0, 0.0); psi_hat.len()], 0.0);
    }
    let f1: Vec<f64> = a1.par_iter().zip(psi.par_iter()).map(|(a, p)| a * p).collect();
    let f2: Vec<f64> = a2.par_iter().zip(psi.par_iter()).map(|(a, p)| a * p).collect();
    let f1h = fft.forward_real(&f1);
    let f2h = fft.forward_real(&f2);
    let out = (0..psi_hat.len())
        .into_par_iter()
        .map(|k| if band[k] { -(ik[0][k] * f1h[k] + ik[1][k] * f2h[k]) } else { Complex64::new(0.0, 0.0) })
        .collect();
    (out, amax)
}

/// Integrates the dual equation from `psi0` (projected onto the band).
pub fn evolve_dual_field(psi0: &ScalarField, traj: &Trajectory, t_pivot: f64, cfg: &DualConfig) -> Result<DualRun, DualError> {
    let pl = plan(traj, t_pivot, cfg)?;
    let grid = traj.grid;
    grid.check_same(psi0.grid())?;
    let n = grid.resolution();
    let symbol = symbol_for(&traj.config.levy, &grid)?;
    let eps = traj.config.eps_viscosity;
    let mut ik = [Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())];
    let mut band = Vec::with_capacity(grid.len());
    let mut e_half = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (i, j) = (k / n, k % n);
        let w = odd_wavevector(&grid, i, j);
        ik[0].push(Complex64::new(0.0, w[0]));
        ik[1].push(Complex64::new(0.0, w[1]));
        band.push(grid.in_band(i, j));
        let xi = grid.wavevector(i, j);
        let lambda = symbol.at(i, j) + eps * (xi[0] * xi[0] + xi[1] * xi[1]);
        e_half.push((-0.5 * lambda * pl.ds).exp());
    }
    let e_full: Vec<f64> = e_half.iter().map(|e| e * e).collect();
    let mut u: Vec<Complex64> = psi0.spectral().iter().zip(&band).map(|(c, &b)| if b { *c } else { Complex64::new(0.0, 0.0) }).collect();

    let mut run = DualRun {
        t_pivot,
        ds: pl.ds,
        times: Vec::new(),
        psi: Vec::new(),
        center_path: Vec::new(),
        lp: Vec::new(),
        lp_exponents: cfg.lp.clone(),
        molecule: None,
    };
    let push = |run: &mut DualRun, u: &[Complex64], s: f64| -> Result<(), DualError> {
        let f = ScalarField::from_spectral(grid, u.to_vec())?;
        run.lp.push(cfg.lp.iter().map(|&p| lp_norm(&f, p)).collect::<Result<_, _>>()?);
        run.times.push(s);
        run.psi.push(f);
        Ok(())
    };
    push(&mut run, &u, 0.0)?;
    let combine = |f: &(dyn Fn(usize) -> Complex64 + Sync)| -> Vec<Complex64> { (0..grid.len()).into_par_iter().map(f).collect() };
    let mut a_start = drift_at(traj, t_pivot, 0.0)?;
    for step in 1..=pl.steps {
        let s = (step - 1) as f64 * pl.ds;
        let a_mid = drift_at(traj, t_pivot, s + 0.5 * pl.ds)?;
        let a_end = drift_at(traj, t_pivot, s + pl.ds)?;
        let (k1, amax) = dual_transport(&a_start, &u, &ik, &band);
        let kmax = grid.kappa() * grid.dealias_cutoff() as f64 * 2f64.sqrt();
        let limit = cfg.cfl / (kmax * amax + 1.0);
        if pl.ds > limit {
            return Err(DualError::Cfl { step, s, ds: pl.ds, limit });
        }
        let s2 = combine(&|k| e_half[k] * (u[k] + 0.5 * pl.ds * k1[k]));
        let (k2, _) = dual_transport(&a_mid, &s2, &ik, &band);
        let s3 = combine(&|k| e_half[k] * u[k] + 0.5 * pl.ds * k2[k]);
        let (k3, _) = dual_transport(&a_mid, &s3, &ik, &band);
        let s4 = combine(&|k| e_full[k] * u[k] + pl.ds * e_half[k] * k3[k]);
        let (k4, _) = dual_transport(&a_end, &s4, &ik, &band);
        u = combine(&|k| e_full[k] * u[k] + pl.ds / 6.0 * (e_full[k] * k1[k] + 2.0 * e_half[k] * (k2[k] + k3[k]) + k4[k]));
        let s_new = step as f64 * pl.ds;
        if u.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(DualError::NonFinite { step, s: s_new });
        }
        if step % pl.stride == 0 || step == pl.steps {
            push(&mut run, &u, if step == pl.steps { pl.s_final } else { s_new })?;
        }
        a_start = a_end;
    }
    Ok(run)
}

/// Integrates `x'(s) = (A(t_pivot - s) * phi_rho)(x(s))` by RK4 with step `ds`
/// up to `s_final`; returns `(s, x(s))` at every step.
pub fn transport_center(
    x0: [f64; 2],
    traj: &Trajectory,
    t_pivot: f64,
    rho: f64,
    ds: f64,
    s_final: f64,
) -> Result<Vec<(f64, [f64; 2])>, DualError> {
    if !(rho > 0.0 && ds > 0.0 && s_final >= 0.0) {
        return Err(DualError::InvalidConfig("rho, ds must be positive and s_final non-negative".into()));
    }
    if traj.drift.is_empty() {
        return Err(DualError::MissingDrift);
    }
    let grid = traj.grid;
    let mollified: Vec<[Vec<Complex64>; 2]> = traj
        .drift
        .iter()
        .map(|a| [BumpMollifier::mollified_spectral(a.component(0), rho), BumpMollifier::mollified_spectral(a.component(1), rho)])
        .collect();
    let times = &traj.times;
    let velocity = |s: f64, x: [f64; 2]| -> [f64; 2] {
        let t = (t_pivot - s).clamp(0.0, *times.last().expect("nonempty"));
        let k = times.partition_point(|&v| v <= t).saturating_sub(1).min(times.len().saturating_sub(2));
        let eval = |idx: usize| [interpolate(&grid, &mollified[idx][0], x), interpolate(&grid, &mollified[idx][1], x)];
        if times.len() == 1 {
            return eval(0);
        }
        let w = ((t - times[k]) / (times[k + 1] - times[k])).clamp(0.0, 1.0);
        let a = eval(k);
        if w == 0.0 {
            return a;
        }
        let b = eval(k + 1);
        [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
    };
    let steps = if s_final == 0.0 { 0 } else { (s_final / ds - 1e-9).ceil().max(1.0) as usize };
    let h = if steps == 0 { 0.0 } else { s_final / steps as f64 };
    // coordinates stay unwrapped so displacements are measurable; evaluation is periodic
    let mut x = x0;
    let mut path = vec![(0.0, x)];
    let add = |x: [f64; 2], v: [f64; 2], c: f64| [x[0] + c * v[0], x[1] + c * v[1]];
    for step in 1..=steps {
        let s = (step - 1) as f64 * h;
        let v1 = velocity(s, x);
        let v2 = velocity(s + 0.5 * h, add(x, v1, 0.5 * h));
        let v3 = velocity(s + 0.5 * h, add(x, v2, 0.5 * h));
        let v4 = velocity(s + h, add(x, v3, h));
        x = [
            x[0] + h / 6.0 * (v1[0] + 2.0 * v2[0] + 2.0 * v3[0] + v4[0]),
            x[1] + h / 6.0 * (v1[1] + 2.0 * v2[1] + 2.0 * v3[1] + v4[1]),
        ];
        path.push((step as f64 * h, x));
    }
    Ok(path)
}

/// Dual run for a molecule; with `cfg.rho` set the center is transported
/// alongside and sampled at the checkpoints.
pub fn evolve_dual(molecule: &Molecule, traj: &Trajectory, t_pivot: f64, cfg: &DualConfig) -> Result<DualRun, DualError> {
    let mut run = evolve_dual_field(&molecule.field, traj, t_pivot, cfg)?;
    if let Some(rho) = cfg.rho {
        let s_final = *run.times.last().expect("nonempty run");
        let path = transport_center(molecule.x0, traj, t_pivot, rho, run.ds, s_final)?;
        run.center_path = run
            .times
            .iter()
            .map(|&s| {
                let idx = ((s / run.ds).round() as usize).min(path.len() - 1);
                path[idx].1
            })
            .collect();
    }
    run.molecule = Some(molecule.clone());
    Ok(run)
}

/// One row of the envelope comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub s: f64,
    pub conc_lhs: f64,
    pub conc_env: f64,
    pub height_lhs: f64,
    pub height_env: f64,
    pub l1_lhs: f64,
    pub l1_env: f64,
    /// `||psi||_{p'} <= ||psi||_1^(1/p') ||psi||_inf^(1-1/p')`.
    pub interpolation_ok: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub k_used: f64,
    /// Smallest `K` compatible with the concentration envelope.
    pub k_empirical_min: f64,
    /// Largest `K` compatible with the height and `L^1` envelopes.
    pub k_empirical_max: f64,
    pub all_ok: bool,
}

/// Compares the three molecule quantities with their time envelopes at every
/// checkpoint. Requires `s_final <= eps r^alpha`.
pub fn molecule_bound_report(run: &DualRun, params: &MoleculeParams, eps: f64) -> Result<BoundReport, DualError> {
    let mol = run.molecule.as_ref().ok_or(DualError::NoMolecule)?;
    let alpha = params.alpha;
    let (omega, gamma) = (params.omega, params.gamma);
    let n = params.n as f64;
    let s_final = *run.times.last().expect("nonempty run");
    let limit = eps * mol.r.powf(alpha);
    if s_final > limit * (1.0 + 1e-12) {
        return Err(DualError::HorizonTooLong { s_final, limit });
    }
    let zr_a = (mol.zeta * mol.r).powf(alpha);
    let k = params.k;
    let pprime = params.pprime;
    let c1 = l1_constant(params.n, omega);
    let mut rows = Vec::with_capacity(run.times.len());
    let mut kmin = 0.0f64;
    let mut kmax = f64::INFINITY;
    for (idx, (&s, psi)) in run.times.iter().zip(&run.psi).enumerate() {
        let center = run.center_path.get(idx).copied().unwrap_or(mol.x0);
        let m = molecule_measures(psi, center, omega);
        let base = zr_a + k * s;
        let conc_env = base.powf((omega - gamma) / alpha);
        let height_env = base.powf(-(n + gamma) / alpha);
        let l1_env = c1 * base.powf(-gamma / alpha);
        let lpp = lp_norm(psi, pprime)?;
        let interp = m.l1.powf(1.0 / pprime) * m.height.powf(1.0 - 1.0 / pprime);
        let interpolation_ok = lpp <= interp * (1.0 + 1e-12);
        let ok = m.concentration <= conc_env && m.height <= height_env && m.l1 <= l1_env;
        if s > 0.0 {
            kmin = kmin.max((m.concentration.powf(alpha / (omega - gamma)) - zr_a) / s);
            if m.height > 0.0 {
                kmax = kmax.min((m.height.powf(-alpha / (n + gamma)) - zr_a) / s);
            }
            if m.l1 > 0.0 {
                kmax = kmax.min(((m.l1 / c1).powf(-alpha / gamma) - zr_a) / s);
            }
        }
        rows.push(BoundRow {
            s,
            conc_lhs: m.concentration,
            conc_env,
            height_lhs: m.height,
            height_env,
            l1_lhs: m.l1,
            l1_env,
            interpolation_ok,
            ok,
        });
    }
    let all_ok = rows.iter().all(|r| r.ok && r.interpolation_ok);
    Ok(BoundReport { rows, k_used: k, k_empirical_min: kmin, k_empirical_max: kmax, all_ok })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
    /// `max_s |B(s) - B(0)| / |B(0)|`.
    pub max_relative_drift: f64,
}

/// `B(s) = int theta(t_pivot - s) psi(s) dx` at the dual checkpoints, which
/// must coincide with forward checkpoints.
pub fn transfer_bracket(traj: &Trajectory, run: &DualRun) -> Result<Bracket, DualError> {
    let tol = 1e-9 * traj.t_final().max(1.0);
    let mut values = Vec::with_capacity(run.times.len());
    for (&s, psi) in run.times.iter().zip(&run.psi) {
        let t = run.t_pivot - s;
        let idx = traj.times.iter().position(|&x| (x - t).abs() <= tol).ok_or(DualError::Misaligned(s))?;
        let theta = &traj.theta[idx];
        let prod: Vec<f64> = theta.samples().iter().zip(psi.samples()).map(|(a, b)| a * b).collect();
        values.push(ordered_sum(&prod, traj.grid.resolution()) * traj.grid.cell_area());
    }
    let b0 = values[0];
    let max_relative_drift = values.iter().map(|b| (b - b0).abs()).fold(0.0, f64::max) / b0.abs();
    Ok(Bracket { s: run.times.clone(), values, max_relative_drift })
}

/// Number of dual windows `ceil(T0 / (eps r^alpha))` and the predicted
/// `L^{p'}` bound `T0^(-n + n/p' - gamma)` (constant 1).
pub fn iterate_lp_control(params: &MoleculeParams, r: f64, t0: f64, eps: f64) -> Result<(u64, f64), DualError> {
    if !(r > 0.0 && t0 > 0.0 && eps > 0.0) {
        return Err(DualError::InvalidConfig("r, T0 and eps must be positive".into()));
    }
    let window = eps * r.powf(params.alpha);
    let count = (t0 / window - 1e-12).ceil().max(1.0) as u64;
    let n = params.n as f64;
    let bound = t0.powf(-n + n / params.pprime - params.gamma);
    Ok((count, bound))
}

/// `|x(s) - x0|` along a center path.
pub fn center_displacement(path: &[(f64, [f64; 2])]) -> Vec<(f64, f64)> {
    let x0 = path.first().map(|p| p.1).unwrap_or([0.0, 0.0]);
    path.iter().map(|&(s, x)| (s, (x[0] - x0[0]).hypot(x[1] - x0[1]))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::DriftSpec;
    use crate::exponents::{default_molecule_knobs, molecule_params, q, qi, theorem1_plan};
    use crate::levy::LevySpec;
    use crate::random::{band_limited, SpectrumSpec};
    use crate::solver::{solve, SolveConfig};

    fn traj(n: usize, drift: DriftSpec, t: f64, dt: f64, seed: u64) -> Trajectory {
        let g = Grid::standard(n).unwrap();
        let mut cfg = SolveConfig::new(LevySpec::fractional(1.0), drift, t, dt);
        cfg.lp = vec![2.0];
        let th = band_limited(g, seed, &SpectrumSpec::smooth(6.0, 2.0));
        solve(&th.scaled(1.0 / th.max_abs()), &cfg).unwrap()
    }

    #[test]
    fn molecule_example_passes_validation() {
        let g = Grid::standard(128).unwrap();
        let m = make_molecule(0.125, [1.0, 2.0], 4.0, 0.2, 0.1, &g).unwrap();
        let c = validate_molecule(&m);
        assert!(c.ok(), "{:?}", c.violated);
        assert!(c.concentration.value <= 0.95 * c.concentration.limit * (1.0 + 1e-12));
        assert!(c.height.value <= 0.95 * c.height.limit * (1.0 + 1e-12));
        let mut doubled = m.clone();
        doubled.field = m.field.scaled(2.0);
        assert!(validate_molecule(&doubled).violated.contains(&"height".to_string()));
    }

    #[test]
    fn large_molecules_drop_the_moment() {
        let g = Grid::standard(32).unwrap();
        let m = make_molecule(1.5, [3.0, 3.0], 2.0, 0.2, 0.1, &g).unwrap();
        assert!(validate_molecule(&m).moment.is_none());
    }

    #[test]
    fn unresolved_molecule_is_rejected() {
        let g = Grid::standard(32).unwrap();
        let err = make_molecule(0.1, [1.0, 1.0], 10.0, 0.2, 0.1, &g).unwrap_err();
        assert!(matches!(err, DualError::Infeasible(msg) if msg.starts_with("resolution")));
        assert!(make_molecule(0.5, [1.0, 1.0], 1.0, 0.2, 0.1, &g).is_err());
        assert!(make_molecule(0.5, [1.0, 1.0], 2.0, 0.3, 0.1, &g).is_err());
    }

    #[test]
    fn drift_free_dual_is_exact_decay() {
        let tr = traj(32, DriftSpec::none(), 0.5, 1e-3, 1);
        let g = tr.grid;
        let psi0 = ScalarField::from_fn(g, |x, y| (x - 2.0 * y).sin());
        let run = evolve_dual_field(&psi0, &tr, 0.5, &DualConfig::default()).unwrap();
        let expect = psi0.scaled((-(0.5 * 5f64.sqrt())).exp());
        assert!(run.psi.last().unwrap().sub(&expect).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn diffusion_bracket_is_constant() {
        let tr = traj(32, DriftSpec::none(), 0.4, 1e-3, 2);
        let psi0 = band_limited(tr.grid, 77, &SpectrumSpec::smooth(6.0, 1.0));
        let run = evolve_dual_field(&psi0, &tr, 0.4, &DualConfig::default()).unwrap();
        assert!(transfer_bracket(&tr, &run).unwrap().max_relative_drift < 1e-6);
    }

    #[test]
    fn sqg_bracket_and_dual_maximum_principle() {
        let tr = traj(32, DriftSpec::sqg(), 0.3, 1e-3, 3);
        let g = tr.grid;
        let m = make_molecule(0.5, [2.0, 4.0], 2.0, 0.2, 0.1, &g).unwrap();
        let run = evolve_dual(&m, &tr, 0.3, &DualConfig::default()).unwrap();
        assert!(transfer_bracket(&tr, &run).unwrap().max_relative_drift < 1e-3);
        for pi in 0..run.lp_exponents.len() {
            for row in &run.lp {
                assert!(row[pi] <= run.lp[0][pi] * (1.0 + 1e-6), "p' = {}", run.lp_exponents[pi]);
            }
        }
    }

    #[test]
    fn dual_flow_is_linear_and_positive() {
        let tr = traj(32, DriftSpec::sqg(), 0.2, 1e-3, 4);
        let g = tr.grid;
        let pos = ScalarField::from_fn(g, |x, y| (x.cos() + y.cos()).exp());
        let neg = ScalarField::from_fn(g, |x, y| (0.5 * (x + y).sin()).exp());
        let cfg = DualConfig::default();
        let rp = evolve_dual_field(&pos, &tr, 0.2, &cfg).unwrap();
        let rn = evolve_dual_field(&neg, &tr, 0.2, &cfg).unwrap();
        let rd = evolve_dual_field(&pos.sub(&neg).unwrap(), &tr, 0.2, &cfg).unwrap();
        let split = rp.psi.last().unwrap().sub(rn.psi.last().unwrap()).unwrap();
        assert!(split.sub(rd.psi.last().unwrap()).unwrap().max_abs() < 1e-8);
        for psi in &rp.psi {
            assert!(psi.samples().iter().cloned().fold(f64::INFINITY, f64::min) >= -1e-8);
        }
    }

    #[test]
    fn center_transport_examples() {
        let tr = traj(32, DriftSpec::none(), 0.1, 1e-2, 5);
        let path = transport_center([1.0, 2.0], &tr, 0.1, 0.3, 1e-2, 0.1).unwrap();
        assert!(path.iter().all(|(_, x)| *x == [1.0, 2.0]));

        let mut uniform = tr.clone();
        let g = tr.grid;
        for a in uniform.drift.iter_mut() {
            *a = VectorField::new(ScalarField::constant(g, 0.7), ScalarField::zeros(g)).unwrap();
        }
        let path = transport_center([1.0, 2.0], &uniform, 0.1, 0.3, 1e-2, 0.1).unwrap();
        for (s, x) in path {
            assert!((x[0] - (1.0 + 0.7 * s)).abs() < 1e-8 && (x[1] - 2.0).abs() < 1e-12);
        }

        let sqg = traj(32, DriftSpec::sqg(), 0.2, 1e-3, 6);
        let path = transport_center([1.0, 2.0], &sqg, 0.2, 0.3, 1e-3, 0.2).unwrap();
        let amax = sqg.drift.iter().map(|a| a.max_abs()).fold(0.0, f64::max);
        for (s, d) in center_displacement(&path) {
            assert!(d <= s * amax * (1.0 + 1e-9));
        }
    }

    fn thm1_params() -> MoleculeParams {
        let set = theorem1_plan(2, &qi(6), &qi(0)).unwrap();
        let (nu0, nu1, m) = default_molecule_knobs(&set);
        molecule_params(&set, &qi(10), &nu0, &nu1, &m, 1.0).unwrap()
    }

    #[test]
    fn bound_report_matches_validator_at_zero() {
        let params = thm1_params();
        let tr = traj(128, DriftSpec::none(), 0.1, 1e-3, 7);
        let r = 0.125;
        let m = make_molecule(r, [3.0, 3.0], params.zeta, params.omega, params.gamma, &tr.grid).unwrap();
        let s0 = 0.1 * r.powf(params.alpha);
        let cfg = DualConfig { s_final: Some(s0), ds: Some(s0 / 10.0), checkpoint_stride: Some(1), ..DualConfig::default() };
        let run = evolve_dual(&m, &tr, 0.1, &cfg).unwrap();
        let rep = molecule_bound_report(&run, &params, 0.1).unwrap();
        let v = validate_molecule(&m);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        assert!(close(rep.rows[0].conc_lhs, v.concentration.value));
        assert!(close(rep.rows[0].conc_env, v.concentration.limit));
        assert!(close(rep.rows[0].height_lhs, v.height.value));
        assert!(close(rep.rows[0].height_env, v.height.limit));
        assert!(rep.all_ok);
        assert!(rep.k_empirical_min <= rep.k_empirical_max);
        let long = DualConfig { s_final: Some(2.0 * s0), ..cfg };
        let run = evolve_dual(&m, &tr, 0.1, &long).unwrap();
        assert!(matches!(molecule_bound_report(&run, &params, 0.1), Err(DualError::HorizonTooLong { .. })));
    }

    #[test]
    fn iteration_count_examples() {
        let mut params = thm1_params();
        params.alpha = 8.0 / 7.0;
        let (n, _) = iterate_lp_control(&params, 0.125, 0.25, 0.1).unwrap();
        assert_eq!(n, (0.25 / (0.1 * 8f64.powf(-8.0 / 7.0))).ceil() as u64);
        assert_eq!(n, 27);
        let (half, _) = iterate_lp_control(&params, 0.0625, 0.25, 0.1).unwrap();
        let ratio = half as f64 / n as f64;
        assert!((ratio - 2f64.powf(8.0 / 7.0)).abs() < 2.0 / n as f64);
        let big = (0.25f64 / 0.1).powf(7.0 / 8.0);
        assert_eq!(iterate_lp_control(&params, big, 0.25, 0.1).unwrap().0, 1);
        let _ = q(1, 2);
    }
}
