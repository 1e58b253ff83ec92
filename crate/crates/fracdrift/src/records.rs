//! JSON verdict record of the `exponents` subcommand.

use serde::Serialize;
use serde_json::{json, Value};

use fracdrift_core::exponents::{fraction_string, theorem2_verdict, theorem4_verdict, Competition, Rejection, Verdict};

use crate::config::{RegimeKey, RunConfig};
use crate::error::HarnessError;
use crate::scenario::{molecule_params_for, ExponentRecord};

#[derive(Debug, Clone, Serialize)]
pub struct ExponentsVerdict {
    pub inputs: Value,
    pub derived: Option<ExponentRecord>,
    /// `admissible`, `besov_wins`, `besov_useless` or `rejected`.
    pub verdict: String,
    /// Only for the competition regimes.
    pub threshold: Option<(String, f64)>,
    pub violated_constraints: Vec<String>,
    pub molecule: Option<Value>,
}

impl ExponentsVerdict {
    pub fn admissible(&self) -> bool {
        self.violated_constraints.is_empty()
    }
}

fn verdict_name(v: Verdict) -> String {
    match v {
        Verdict::BesovWins => "besov_wins".into(),
        Verdict::BesovUseless => "besov_useless".into(),
    }
}

/// Evaluates the `[exponents]` section; rejections become a record rather than an error.
pub fn exponents_verdict(cfg: &RunConfig) -> Result<ExponentsVerdict, HarnessError> {
    let inputs = serde_json::to_value(&cfg.exponents)?;
    if cfg.exponents.regime == RegimeKey::None {
        return Err(HarnessError::Config("exponents.regime must name a theorem".into()));
    }
    let rejected = |r: &Rejection| ExponentsVerdict {
        inputs: inputs.clone(),
        derived: None,
        verdict: "rejected".into(),
        threshold: None,
        violated_constraints: r.violated.iter().map(|c| c.name().to_string()).collect(),
        molecule: None,
    };
    let set = match cfg.exponent_set() {
        Ok(Some(set)) => set,
        Ok(None) => unreachable!("regime checked above"),
        Err(HarnessError::Inadmissible(r)) => return Ok(rejected(&r)),
        Err(e) => return Err(e),
    };
    let competition: Option<Competition> = match cfg.exponents.regime {
        RegimeKey::Theorem2 => Some(theorem2_verdict(set.n, &set.p, &set.a)?),
        RegimeKey::Theorem4 => Some(theorem4_verdict(set.n, &set.p, &set.eta, &set.a)?),
        _ => None,
    };
    let (verdict, threshold) = match &competition {
        Some(c) => (verdict_name(c.verdict), Some((fraction_string(&c.threshold), fracdrift_core::exponents::to_f64(&c.threshold)))),
        None => ("admissible".to_string(), None),
    };
    let molecule = match molecule_params_for(&set, None, 1.0) {
        Ok(m) => Some(serde_json::to_value(m)?),
        Err(HarnessError::Inadmissible(r)) => Some(json!({ "rejected": r.violated.iter().map(|c| c.name()).collect::<Vec<_>>() })),
        Err(e) => return Err(e),
    };
    Ok(ExponentsVerdict {
        inputs,
        derived: Some(ExponentRecord::from_set(&set)),
        verdict,
        threshold,
        violated_constraints: Vec::new(),
        molecule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(exponents: &str) -> RunConfig {
        let text = format!("[grid]\nresolution = 16\n[exponents]\n{exponents}\n[drift]\nkind = \"none\"\n[run]\nt_final = 0.1\ndt = 0.01\n");
        RunConfig::parse(&text).unwrap()
    }

    #[test]
    fn theorem1_record_is_exact() {
        let v = exponents_verdict(&cfg("regime = \"theorem1\"\nq = 6\na = 0")).unwrap();
        assert!(v.admissible());
        let d = v.derived.unwrap();
        assert!(d.exact.contains(&("alpha".to_string(), "8/7".to_string())));
        assert!(d.exact.contains(&("alpha0".to_string(), "4/3".to_string())));
    }

    #[test]
    fn competition_verdicts() {
        let v = exponents_verdict(&cfg("regime = \"theorem2\"\np = 6\na = \"8/7\"")).unwrap();
        assert_eq!(v.verdict, "besov_useless");
        let v = exponents_verdict(&cfg("regime = \"theorem4\"\np = 6\neta = 0.05\na = 0.5")).unwrap();
        assert_eq!(v.verdict, "besov_wins");
        assert_eq!(v.threshold.unwrap().0, "31/35");
    }

    #[test]
    fn rejection_names_constraints() {
        let v = exponents_verdict(&cfg("regime = \"theorem1\"\nq = 4\na = 0")).unwrap();
        assert_eq!(v.verdict, "rejected");
        assert_eq!(v.violated_constraints, vec!["p > max(n(n-1), 2n)".to_string()]);
    }
}
