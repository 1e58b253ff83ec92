//! Run configuration: a flat-sectioned key/value file (the TOML subset
//! documented in `docs/config.md`). Exponents may be written as rational
//! strings such as `"8/7"`; plain numbers are read through their decimal form,
//! so `0.1` means exactly `1/10`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use fracdrift_core::drift::{DriftKind, DriftSpec, MultiplierPreset};
use fracdrift_core::exponents::{
    self, fraction_string, parse_rational, theorem1_plan, theorem2_verdict, theorem3_plan, theorem4_verdict, to_f64,
    ExponentSet, Rejection, Q,
};
use fracdrift_core::field::Grid;
use fracdrift_core::levy::{LevyKind, LevySpec};
use fracdrift_core::solver::{Scheme, SolveConfig};

use crate::error::HarnessError;

/// A number given either as a TOML number or as a string (`"8/7"`, `"2pi"`, `"inf"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    pub fn rational(&self) -> Result<Q, String> {
        match self {
            Num::Int(v) => Ok(exponents::qi(*v)),
            Num::Float(v) => parse_rational(&format!("{v:?}")).map_err(|e| e.to_string()),
            Num::Text(s) => parse_rational(s).map_err(|e| e.to_string()),
        }
    }

    pub fn float(&self) -> Result<f64, String> {
        match self {
            Num::Int(v) => Ok(*v as f64),
            Num::Float(v) => Ok(*v),
            Num::Text(s) => {
                let t = s.trim();
                match t {
                    "inf" | "infinity" => Ok(f64::INFINITY),
                    "2pi" => Ok(2.0 * PI),
                    "pi" => Ok(PI),
                    _ => self.rational().map(|q| to_f64(&q)),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub resolution: usize,
    #[serde(default = "default_period")]
    pub period: Num,
}

fn default_period() -> Num {
    Num::Text("2pi".into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKey {
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem4,
    /// No admissibility gate; `levy.alpha` must be given explicitly.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSection {
    #[serde(default = "default_regime")]
    pub regime: RegimeKey,
    #[serde(default = "default_n")]
    pub n: u32,
    pub p: Option<Num>,
    pub q: Option<Num>,
    pub a: Option<Num>,
    pub eta: Option<Num>,
    pub gamma: Option<Num>,
    pub omega: Option<Num>,
}

fn default_regime() -> RegimeKey {
    RegimeKey::None
}

fn default_n() -> u32 {
    2
}

impl Default for ExponentsSection {
    fn default() -> Self {
        ExponentsSection { regime: RegimeKey::None, n: 2, p: None, q: None, a: None, eta: None, gamma: None, omega: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySection {
    #[serde(default = "default_levy_kind")]
    pub kind: LevyKind,
    /// `"auto"` (or absent) takes alpha from the exponent regime.
    pub alpha: Option<Num>,
    pub delta: Option<Num>,
    pub cbar1: Option<Num>,
    pub cbar2: Option<Num>,
}

fn default_levy_kind() -> LevyKind {
    LevyKind::PureFractional
}

impl Default for LevySection {
    fn default() -> Self {
        LevySection { kind: LevyKind::PureFractional, alpha: None, delta: None, cbar1: None, cbar2: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    pub kind: DriftKind,
    #[serde(default)]
    pub eta_smooth: f64,
    #[serde(default)]
    pub eta_rough: f64,
    pub multiplier: Option<MultiplierPreset>,
    #[serde(default)]
    pub mollify_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub checkpoint_stride: usize,
    #[serde(default)]
    pub eps_viscosity: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
}

fn default_stride() -> usize {
    10
}

fn default_scheme() -> Scheme {
    Scheme::EtdRk4
}

fn default_cfl() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// Band-limited Gaussian field driven by the top-level seed.
    Random,
    Zero,
    /// `amplitude * cos(m1 x + m2 y)`.
    Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default = "default_initial_kind")]
    pub kind: InitialKind,
    #[serde(default = "default_kmin")]
    pub kmin: f64,
    #[serde(default = "default_kmax")]
    pub kmax: Num,
    /// Coefficient modulus scales as `|k|^slope`.
    #[serde(default = "default_slope")]
    pub slope: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Rescale the field so that `max |theta0|` equals this value; `0` keeps the raw field.
    #[serde(default = "default_sup")]
    pub sup: f64,
    #[serde(default = "default_mode")]
    pub mode: [i64; 2],
}

fn default_initial_kind() -> InitialKind {
    InitialKind::Random
}
fn default_kmin() -> f64 {
    1.0
}
fn default_kmax() -> Num {
    Num::Float(8.0)
}
fn default_slope() -> f64 {
    -1.0
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_sup() -> f64 {
    1.0
}
fn default_mode() -> [i64; 2] {
    [1, 0]
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            kind: InitialKind::Random,
            kmin: 1.0,
            kmax: default_kmax(),
            slope: -1.0,
            amplitude: 1.0,
            sup: 1.0,
            mode: [1, 0],
        }
    }
}

/// Which `norms.csv` columns are evaluated; untracked columns hold `nan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsSection {
    #[serde(default = "yes")]
    pub besov: bool,
    #[serde(default = "yes")]
    pub morrey: bool,
    #[serde(default = "yes")]
    pub holder: bool,
    /// Overrides for the parameters otherwise taken from the exponents.
    pub besov_p: Option<Num>,
    pub mc_q: Option<Num>,
    pub mc_a: Option<Num>,
    pub holder_gamma: Option<Num>,
}

fn yes() -> bool {
    true
}

impl Default for NormsSection {
    fn default() -> Self {
        NormsSection { besov: true, morrey: true, holder: true, besov_p: None, mc_q: None, mc_a: None, holder_gamma: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    #[serde(default = "yes")]
    pub max_principle: bool,
    /// Relative slack per checkpoint.
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Even exponent for the dissipation balance; omitted means no balance check.
    pub balance_p: Option<u32>,
    #[serde(default = "default_balance_tol")]
    pub balance_tol: f64,
}

fn default_slack() -> f64 {
    1e-6
}
fn default_balance_tol() -> f64 {
    1e-3
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection { max_principle: true, slack: 1e-6, balance_p: None, balance_tol: 1e-3 }
    }
}

/// Optional molecule run against the stored trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualSection {
    pub t_pivot: f64,
    pub r: f64,
    /// Molecule dilation; absent means the smallest admissible power of 10.
    pub zeta: Option<Num>,
    /// Dual horizon; absent means `min(eps r^alpha, t_pivot)`.
    pub s0: Option<f64>,
    #[serde(default = "default_x0")]
    pub x0: [f64; 2],
    #[serde(default = "default_dual_steps")]
    pub steps: usize,
}

fn default_x0() -> [f64; 2] {
    [PI, PI]
}
fn default_dual_steps() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSection,
    #[serde(default)]
    pub exponents: ExponentsSection,
    #[serde(default)]
    pub levy: LevySection,
    pub drift: DriftSection,
    pub run: RunSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub norms: NormsSection,
    #[serde(default)]
    pub checks: ChecksSection,
    pub dual: Option<DualSection>,
}

/// Everything derived from a config before a solve.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub grid: Grid,
    pub exponents: Option<ExponentSet>,
    pub solve: SolveConfig,
    pub besov: Option<(f64, f64)>,
    pub morrey: Option<(f64, f64)>,
    pub holder: Option<f64>,
}

fn field_err(key: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{key}: {msg}"))
}

fn rational(key: &str, v: &Option<Num>) -> Result<Option<Q>, HarnessError> {
    v.as_ref().map(|n| n.rational().map_err(|e| field_err(key, e))).transpose()
}

fn required(key: &str, v: &Option<Num>) -> Result<Q, HarnessError> {
    rational(key, v)?.ok_or_else(|| field_err(key, "required by the selected regime"))
}

fn float(key: &str, v: &Option<Num>) -> Result<Option<f64>, HarnessError> {
    v.as_ref().map(|n| n.float().map_err(|e| field_err(key, e))).transpose()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a config file, or the config echoed inside a run's `manifest.json`.
    pub fn load(path: &Path) -> Result<(Self, String), HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let text = if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
            v.get("config_text")
                .and_then(|t| t.as_str())
                .ok_or_else(|| HarnessError::Config("manifest has no config_text".into()))?
                .to_string()
        } else {
            text
        };
        Ok((RunConfig::parse(&text)?, text))
    }

    /// Cross-validates the exponents, then assembles the solver configuration.
    /// Inadmissible exponents yield [`HarnessError::Inadmissible`].
    pub fn resolve(&self) -> Result<Resolved, HarnessError> {
        let period = self.grid.period.float().map_err(|e| field_err("grid.period", e))?;
        let grid = Grid::new(self.grid.resolution, period).map_err(|e| field_err("grid", e))?;
        if self.exponents.n != 2 {
            return Err(field_err("exponents.n", "the solver is two-dimensional; only the exponents command accepts n != 2"));
        }
        let set = self.exponent_set()?;
        let levy = self.levy_spec(set.as_ref())?;
        levy.validate().map_err(|e| field_err("levy", e))?;
        let drift = DriftSpec {
            kind: self.drift.kind,
            eta_smooth: self.drift.eta_smooth,
            eta_rough: self.drift.eta_rough,
            multiplier: self.drift.multiplier,
            mollify_eps: self.drift.mollify_eps,
        };
        let mut solve = SolveConfig::new(levy, drift, self.run.t_final, self.run.dt);
        solve.checkpoint_stride = self.run.checkpoint_stride;
        solve.eps_viscosity = self.run.eps_viscosity;
        solve.scheme = self.run.scheme;
        solve.cfl = self.run.cfl;
        solve.validate().map_err(|e| field_err("run", e))?;

        let n = &self.norms;
        let p_default = set.as_ref().map(|s| to_f64(&s.p));
        let besov = if n.besov {
            let p = float("norms.besov_p", &n.besov_p)?.or(p_default).unwrap_or(2.0);
            Some((levy.alpha / p, p))
        } else {
            None
        };
        let morrey = if n.morrey {
            let q = float("norms.mc_q", &n.mc_q)?.or(set.as_ref().map(|s| to_f64(&s.q))).unwrap_or(2.0);
            let a = float("norms.mc_a", &n.mc_a)?.or(set.as_ref().map(|s| to_f64(&s.a))).unwrap_or(1.0);
            Some((q, a))
        } else {
            None
        };
        let holder = if n.holder {
            Some(float("norms.holder_gamma", &n.holder_gamma)?.or(set.as_ref().map(|s| to_f64(&s.gamma))).unwrap_or(0.1))
        } else {
            None
        };
        Ok(Resolved { grid, exponents: set, solve, besov, morrey, holder })
    }

    pub fn exponent_set(&self) -> Result<Option<ExponentSet>, HarnessError> {
        let e = &self.exponents;
        let reject = |r: Rejection| HarnessError::Inadmissible(r);
        let set = match e.regime {
            RegimeKey::None => return Ok(None),
            RegimeKey::Theorem1 => theorem1_plan(e.n, &required("exponents.q", &e.q)?, &required("exponents.a", &e.a)?).map_err(reject)?,
            RegimeKey::Theorem2 => {
                theorem2_verdict(e.n, &required("exponents.p", &e.p)?, &required("exponents.a", &e.a)?).map_err(reject)?.set
            }
            RegimeKey::Theorem3 => theorem3_plan(
                e.n,
                &required("exponents.p", &e.p)?,
                &required("exponents.q", &e.q)?,
                &required("exponents.eta", &e.eta)?,
            )
            .map_err(reject)?,
            RegimeKey::Theorem4 => theorem4_verdict(
                e.n,
                &required("exponents.p", &e.p)?,
                &required("exponents.eta", &e.eta)?,
                &required("exponents.a", &e.a)?,
            )
            .map_err(reject)?
            .set,
        };
        let gamma = rational("exponents.gamma", &e.gamma)?;
        let omega = rational("exponents.omega", &e.omega)?;
        let set = if gamma.is_some() || omega.is_some() {
            let g = gamma.unwrap_or_else(|| set.gamma.clone());
            let o = omega.unwrap_or_else(|| set.omega.clone());
            set.with_molecule_exponents(g, o).map_err(reject)?
        } else {
            set
        };
        Ok(Some(set))
    }

    fn levy_spec(&self, set: Option<&ExponentSet>) -> Result<LevySpec, HarnessError> {
        let l = &self.levy;
        let given = match &l.alpha {
            Some(Num::Text(t)) if t.trim() == "auto" => None,
            other => rational("levy.alpha", other)?,
        };
        let alpha = match (given, set) {
            (Some(a), Some(s)) if a != s.alpha => {
                return Err(HarnessError::AlphaMismatch { given: fraction_string(&a), required: fraction_string(&s.alpha) })
            }
            (Some(a), _) => to_f64(&a),
            (None, Some(s)) => to_f64(&s.alpha),
            (None, None) => return Err(field_err("levy.alpha", "required when exponents.regime = \"none\"")),
        };
        Ok(match l.kind {
            LevyKind::PureFractional => LevySpec::fractional(alpha),
            LevyKind::TruncatedStable => {
                let delta = float("levy.delta", &l.delta)?.or(set.map(|s| to_f64(&s.delta))).unwrap_or(0.5 * alpha);
                let c1 = float("levy.cbar1", &l.cbar1)?.unwrap_or(1.0);
                let c2 = float("levy.cbar2", &l.cbar2)?.unwrap_or(c1);
                LevySpec::truncated_stable(alpha, delta, c1, c2)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THM1: &str = r#"
seed = 7
[grid]
resolution = 32
[exponents]
regime = "theorem1"
q = 6
a = 0
[drift]
kind = "sqg_riesz"
[run]
t_final = 0.1
dt = 1e-3
"#;

    #[test]
    fn theorem1_preset_resolves_alpha() {
        let r = RunConfig::parse(THM1).unwrap().resolve().unwrap();
        assert_eq!(r.solve.levy.alpha, 8.0 / 7.0);
        assert_eq!(r.besov, Some((8.0 / 42.0, 6.0)));
        assert_eq!(r.morrey, Some((6.0, 0.0)));
        assert_eq!(r.holder, Some(0.1));
    }

    #[test]
    fn decimal_floats_are_exact() {
        assert_eq!(Num::Float(0.1).rational().unwrap(), exponents::q(1, 10));
        assert_eq!(Num::Text("8/7".into()).rational().unwrap(), exponents::q(8, 7));
        assert_eq!(Num::Text("inf".into()).float().unwrap(), f64::INFINITY);
    }

    #[test]
    fn a_at_n_is_inadmissible() {
        let text = THM1.replace("a = 0", "a = 2");
        match RunConfig::parse(&text).unwrap().resolve() {
            Err(HarnessError::Inadmissible(r)) => assert!(r.to_string().contains("a < n")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explicit_alpha_must_match_regime() {
        let text = THM1.replace("[drift]", "[levy]\nalpha = \"1.2\"\n[drift]");
        assert!(matches!(RunConfig::parse(&text).unwrap().resolve(), Err(HarnessError::AlphaMismatch { .. })));
        let text = THM1.replace("[drift]", "[levy]\nalpha = \"8/7\"\n[drift]");
        assert!(RunConfig::parse(&text).unwrap().resolve().is_ok());
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let text = THM1.replace("seed = 7", "seed = 7\ncolour = 1");
        assert!(matches!(RunConfig::parse(&text), Err(HarnessError::Config(_))));
    }
}
