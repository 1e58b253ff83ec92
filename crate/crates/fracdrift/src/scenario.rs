//! Scenario orchestration: initial data, solve, norm tracking, invariant
//! checks, the optional molecule run, and the run-directory layout
//!
//! ```text
//! <out>/manifest.json   config echo, solver config, hashes, checks
//! <out>/norms.csv       t, l2, l4, l8, linf, besov_alpha_over_p_p, mc_q_a, holder_gamma
//! <out>/fields/theta_00000.fdf ...
//! <out>/plots/<column>.svg
//! <out>/bounds.csv, dual.json   (when a [dual] section is present)
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fracdrift_core::drift::DriftOperator;
use fracdrift_core::dual::{
    evolve_dual, make_molecule, molecule_bound_report, validate_molecule, BoundReport, DualConfig, MoleculeCheck,
};
use fracdrift_core::exponents::{
    default_molecule_knobs, default_zeta, fraction_string, molecule_params, to_f64, ExponentSet, MoleculeParams, Q,
};
use fracdrift_core::field::{load_fdf, ordered_sum, save_fdf, Grid, ScalarField};
use fracdrift_core::random::{band_limited, SpectrumSpec};
use fracdrift_core::solver::{dissipation_balance, solve, SolveConfig, Trajectory};
use fracdrift_core::spaces::{besov_double_integral, holder_seminorm, morrey_campanato_norm};

use crate::config::{InitialKind, Num, Resolved, RunConfig};
use crate::error::HarnessError;
use crate::plots::emit_plots;

pub const NORM_COLUMNS: [&str; 8] = ["t", "l2", "l4", "l8", "linf", "besov_alpha_over_p_p", "mc_q_a", "holder_gamma"];
const TRACKED_LP: [f64; 4] = [2.0, 4.0, 8.0, f64::INFINITY];

/// Initial field described by the `[initial]` section.
pub fn initial_field(cfg: &RunConfig, grid: Grid) -> Result<ScalarField, HarnessError> {
    let init = &cfg.initial;
    let theta = match init.kind {
        InitialKind::Zero => ScalarField::zeros(grid),
        InitialKind::Mode => {
            let [m1, m2] = init.mode;
            let kappa = grid.kappa();
            let amp = init.amplitude;
            ScalarField::from_fn(grid, |x, y| amp * (kappa * (m1 as f64 * x + m2 as f64 * y)).cos())
        }
        InitialKind::Random => {
            let kmax = init.kmax.float().map_err(|e| HarnessError::Config(format!("initial.kmax: {e}")))?;
            let spec = SpectrumSpec { kmin: init.kmin, kmax, slope: init.slope, amplitude: init.amplitude };
            band_limited(grid, cfg.seed, &spec)
        }
    };
    Ok(if init.sup > 0.0 && theta.max_abs() > 0.0 { theta.scaled(init.sup / theta.max_abs()) } else { theta })
}

/// One `norms.csv` row per checkpoint.
pub fn norm_rows(traj: &Trajectory, resolved: &Resolved) -> Result<Vec<[f64; 8]>, HarnessError> {
    let idx: Vec<usize> = TRACKED_LP
        .iter()
        .map(|p| traj.config.lp.iter().position(|q| q == p).ok_or_else(|| HarnessError::Input(format!("L^{p} not tracked"))))
        .collect::<Result<_, _>>()?;
    let records = traj.checkpoint_records();
    let mut rows = Vec::with_capacity(traj.times.len());
    for ((&t, theta), rec) in traj.times.iter().zip(&traj.theta).zip(records) {
        let besov = match resolved.besov {
            Some((s, p)) => besov_double_integral(theta, s, p)?,
            None => f64::NAN,
        };
        let mc = match resolved.morrey {
            Some((q, a)) => morrey_campanato_norm(theta, q, a)?,
            None => f64::NAN,
        };
        let holder = match resolved.holder {
            Some(g) => holder_seminorm(theta, g)?,
            None => f64::NAN,
        };
        rows.push([t, rec.lp[idx[0]], rec.lp[idx[1]], rec.lp[idx[2]], rec.lp[idx[3]], besov, mc, holder]);
    }
    Ok(rows)
}

pub fn write_norms_csv(path: &Path, rows: &[[f64; 8]]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Input(e.to_string()))?;
    w.write_record(NORM_COLUMNS).map_err(|e| HarnessError::Input(e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(|e| HarnessError::Input(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_norms_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::Input(e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| HarnessError::Input(e.to_string()))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| HarnessError::Input(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| HarnessError::Input(format!("bad number {s:?} in {}", path.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
}

/// Worst relative increase of `||theta||_p` between consecutive checkpoints, per tracked `p`.
pub fn max_principle_checks(traj: &Trajectory, slack: f64) -> Vec<CheckResult> {
    let records = traj.checkpoint_records();
    traj.config
        .lp
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let worst = records
                .windows(2)
                .map(|w| if w[0].lp[i] > 0.0 { w[1].lp[i] / w[0].lp[i] - 1.0 } else { w[1].lp[i] })
                .fold(0.0, f64::max);
            CheckResult { name: format!("max_principle_l{}", label(p)), passed: worst <= slack, measured: worst, limit: slack }
        })
        .collect()
}

fn label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn sha256_file(path: &Path) -> Result<String, HarnessError> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldEntry {
    pub file: String,
    pub t: f64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_text: String,
    pub config: RunConfig,
    pub solve_config: SolveConfig,
    pub exponents: Option<ExponentRecord>,
    pub seed: u64,
    pub threads: usize,
    pub grid: GridRecord,
    pub dt: f64,
    pub fields: Vec<FieldEntry>,
    pub norms_csv_sha256: String,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRecord {
    pub resolution: usize,
    pub period: f64,
}

/// Exact exponent values as fraction strings, with float twins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentRecord {
    pub regime: String,
    pub exact: Vec<(String, String)>,
    pub float: Vec<(String, f64)>,
}

impl ExponentRecord {
    pub fn from_set(set: &ExponentSet) -> Self {
        let named: Vec<(&str, &Q)> = vec![
            ("p", &set.p),
            ("q", &set.q),
            ("a", &set.a),
            ("eta", &set.eta),
            ("alpha", &set.alpha),
            ("alpha0", &set.alpha0),
            ("gamma", &set.gamma),
            ("omega", &set.omega),
            ("sigma", &set.sigma),
            ("delta", &set.delta),
        ];
        ExponentRecord {
            regime: serde_json::to_value(set.regime).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            exact: named.iter().map(|(k, v)| (k.to_string(), fraction_string(v))).collect(),
            float: named.iter().map(|(k, v)| (k.to_string(), to_f64(v))).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub dual: Option<DualOutcome>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.manifest.passed && self.dual.as_ref().is_none_or(|d| d.report.all_ok)
    }
}

/// Executes a full scenario into `out`.
pub fn run_scenario(cfg: &RunConfig, config_text: &str, out: &Path) -> Result<RunOutcome, HarnessError> {
    let resolved = cfg.resolve()?;
    let theta0 = initial_field(cfg, resolved.grid)?;
    let traj = solve(&theta0, &resolved.solve)?;

    std::fs::create_dir_all(out.join("fields"))?;
    let mut fields = Vec::with_capacity(traj.times.len());
    for (k, (&t, theta)) in traj.times.iter().zip(&traj.theta).enumerate() {
        let file = format!("fields/theta_{k:05}.fdf");
        let path = out.join(&file);
        save_fdf(theta, &path)?;
        fields.push(FieldEntry { file, t, sha256: sha256_file(&path)? });
    }
    let rows = norm_rows(&traj, &resolved)?;
    let csv_path = out.join("norms.csv");
    write_norms_csv(&csv_path, &rows)?;

    let mut checks = Vec::new();
    if cfg.checks.max_principle {
        checks.extend(max_principle_checks(&traj, cfg.checks.slack));
    }
    if let Some(p) = cfg.checks.balance_p {
        let b = dissipation_balance(&traj, p as f64)?;
        checks.push(CheckResult {
            name: format!("balance_p{p}"),
            passed: b.relative_error <= cfg.checks.balance_tol,
            measured: b.relative_error,
            limit: cfg.checks.balance_tol,
        });
    }
    emit_plots(out)?;

    let dual = match &cfg.dual {
        Some(d) => {
            let set = resolved
                .exponents
                .as_ref()
                .ok_or_else(|| HarnessError::Config("[dual] needs an exponent regime".into()))?;
            let zeta = d.zeta.as_ref().map(Num::rational).transpose().map_err(|e| HarnessError::Config(format!("dual.zeta: {e}")))?;
            let opts = DualOptions { t_pivot: d.t_pivot, r: d.r, zeta, s0: d.s0, x0: d.x0, steps: d.steps };
            Some(run_dual(&traj, set, &opts, out)?)
        }
        None => None,
    };

    let passed = checks.iter().all(|c| c.passed);
    let manifest = Manifest {
        tool: "fracdrift".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_text: config_text.to_string(),
        config: cfg.clone(),
        solve_config: resolved.solve.clone(),
        exponents: resolved.exponents.as_ref().map(ExponentRecord::from_set),
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        grid: GridRecord { resolution: resolved.grid.resolution(), period: resolved.grid.period() },
        dt: traj.dt,
        fields,
        norms_csv_sha256: sha256_file(&csv_path)?,
        checks,
        passed,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunOutcome { dir: out.to_path_buf(), manifest, dual })
}

/// Rebuilds a trajectory from a run directory; drift snapshots are recomputed from the stored fields.
pub fn load_trajectory(dir: &Path) -> Result<Trajectory, HarnessError> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| HarnessError::Input(format!("{}: {e}", dir.join("manifest.json").display())))?;
    let m: Manifest = serde_json::from_str(&text)?;
    let grid = Grid::new(m.grid.resolution, m.grid.period)?;
    let op = DriftOperator::new(&m.solve_config.drift, &grid).map_err(|e| HarnessError::Input(e.to_string()))?;
    let mut times = Vec::with_capacity(m.fields.len());
    let mut theta = Vec::with_capacity(m.fields.len());
    let mut drift = Vec::with_capacity(m.fields.len());
    for f in &m.fields {
        let field = load_fdf(&dir.join(&f.file))?;
        grid.check_same(field.grid())?;
        drift.push(op.apply(&field).map_err(|e| HarnessError::Input(e.to_string()))?);
        times.push(f.t);
        theta.push(field);
    }
    if times.is_empty() {
        return Err(HarnessError::Input("manifest lists no fields".into()));
    }
    Ok(Trajectory { grid, config: m.solve_config, times, theta, drift, steps: Vec::new(), besov: Vec::new(), dt: m.dt })
}

#[derive(Debug, Clone)]
pub struct DualOptions {
    pub t_pivot: f64,
    pub r: f64,
    /// `None` picks the smallest admissible power of 10.
    pub zeta: Option<Q>,
    /// `None` means `min(eps r^alpha, t_pivot)`.
    pub s0: Option<f64>,
    pub x0: [f64; 2],
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualVerdict {
    pub passed: bool,
    pub r: f64,
    pub zeta: f64,
    pub epsilon_geom: f64,
    pub s0: f64,
    pub t_pivot: f64,
    pub k_used: f64,
    pub k_empirical_min: f64,
    pub k_empirical_max: f64,
    pub molecule_at_zero: MoleculeCheck,
    pub bracket_max_relative_drift: f64,
}

#[derive(Debug, Clone)]
pub struct DualOutcome {
    pub params: MoleculeParams,
    pub report: BoundReport,
    pub bracket: Vec<f64>,
    pub verdict: DualVerdict,
}

pub fn molecule_params_for(set: &ExponentSet, zeta: Option<&Q>, cbar1: f64) -> Result<MoleculeParams, HarnessError> {
    let (nu0, nu1, m) = default_molecule_knobs(set);
    Ok(match zeta {
        Some(z) => molecule_params(set, z, &nu0, &nu1, &m, cbar1)?,
        None => default_zeta(set, &nu0, &nu1, &m, cbar1)?,
    })
}

/// Evolves a molecule backwards from `t_pivot` and writes `bounds.csv` and `dual.json` into `out`.
pub fn run_dual(traj: &Trajectory, set: &ExponentSet, opts: &DualOptions, out: &Path) -> Result<DualOutcome, HarnessError> {
    let params = molecule_params_for(set, opts.zeta.as_ref(), traj.config.levy.cbar1)?;
    let eps = params.epsilon_geom;
    let s0 = opts.s0.unwrap_or((eps * opts.r.powf(params.alpha)).min(opts.t_pivot));
    let molecule = make_molecule(opts.r, opts.x0, params.zeta, params.omega, params.gamma, &traj.grid)?;
    let at_zero = validate_molecule(&molecule);
    let steps = opts.steps.max(1);
    let cfg = DualConfig {
        ds: Some(s0 / steps as f64),
        s_final: Some(s0),
        checkpoint_stride: Some(1),
        rho: Some(params.rho(opts.r)),
        ..DualConfig::default()
    };
    let run = evolve_dual(&molecule, traj, opts.t_pivot, &cfg)?;
    let report = molecule_bound_report(&run, &params, eps)?;
    let n = traj.grid.resolution();
    let mut bracket = Vec::with_capacity(run.times.len());
    for (&s, psi) in run.times.iter().zip(&run.psi) {
        let theta = traj.theta_at(opts.t_pivot - s)?;
        let prod: Vec<f64> = theta.samples().iter().zip(psi.samples()).map(|(a, b)| a * b).collect();
        bracket.push(ordered_sum(&prod, n) * traj.grid.cell_area());
    }
    let b0 = bracket[0];
    let drift = if b0 != 0.0 { bracket.iter().map(|b| (b - b0).abs()).fold(0.0, f64::max) / b0.abs() } else { 0.0 };

    let mut w = csv::Writer::from_path(out.join("bounds.csv")).map_err(|e| HarnessError::Input(e.to_string()))?;
    w.write_record(["s", "conc_lhs", "conc_env", "height_lhs", "height_env", "l1_lhs", "l1_env", "bracket"])
        .map_err(|e| HarnessError::Input(e.to_string()))?;
    for (row, b) in report.rows.iter().zip(&bracket) {
        let vals = [row.s, row.conc_lhs, row.conc_env, row.height_lhs, row.height_env, row.l1_lhs, row.l1_env, *b];
        w.write_record(vals.iter().map(|v| format!("{v:e}"))).map_err(|e| HarnessError::Input(e.to_string()))?;
    }
    w.flush()?;
    let verdict = DualVerdict {
        passed: report.all_ok && at_zero.ok(),
        r: opts.r,
        zeta: params.zeta,
        epsilon_geom: eps,
        s0,
        t_pivot: opts.t_pivot,
        k_used: report.k_used,
        k_empirical_min: report.k_empirical_min,
        k_empirical_max: report.k_empirical_max,
        molecule_at_zero: at_zero,
        bracket_max_relative_drift: drift,
    };
    std::fs::write(out.join("dual.json"), serde_json::to_string_pretty(&verdict)?)?;
    Ok(DualOutcome { params, report, bracket, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ZERO: &str = r#"
[grid]
resolution = 16
[exponents]
regime = "theorem1"
q = 6
a = 0
[drift]
kind = "sqg_riesz"
[run]
t_final = 0.02
dt = 1e-3
[initial]
kind = "zero"
"#;

    #[test]
    fn zero_field_gives_zero_norms() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::parse(ZERO).unwrap();
        let out = run_scenario(&cfg, ZERO, dir.path()).unwrap();
        assert!(out.passed());
        let (header, rows) = read_norms_csv(&dir.path().join("norms.csv")).unwrap();
        assert_eq!(header, NORM_COLUMNS);
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r[1..].iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn trajectory_round_trips_through_the_run_directory() {
        let dir = tempfile::tempdir().unwrap();
        let text = ZERO.replace("kind = \"zero\"", "kind = \"random\"\nsup = 1.0");
        let cfg = RunConfig::parse(&text).unwrap();
        run_scenario(&cfg, &text, dir.path()).unwrap();
        let traj = load_trajectory(dir.path()).unwrap();
        assert_eq!(traj.times.len(), 3);
        let resolved = cfg.resolve().unwrap();
        let direct = solve(&initial_field(&cfg, resolved.grid).unwrap(), &resolved.solve).unwrap();
        assert_eq!(traj.theta[2].samples(), direct.theta[2].samples());
        let err = traj.drift[2].component(0).sub(direct.drift[2].component(0)).unwrap().max_abs();
        assert!(err < 1e-14);
    }
}
