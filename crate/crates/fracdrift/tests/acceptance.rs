//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use fracdrift::config::RunConfig;
use fracdrift::scenario::run_scenario;
use fracdrift::verify::{self, Check, SuiteReport};
use fracdrift::HarnessError;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_report(rep: Result<SuiteReport, HarnessError>) -> Outcome {
    match rep {
        Ok(rep) => {
            let failed: Vec<String> = rep
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| format!("{} = {:.4e} (limit {:.4e})", c.name, c.value, c.limit))
                .collect();
            let detail = if failed.is_empty() {
                format!("{} checks", rep.checks.len())
            } else {
                format!("{} of {} checks failed: {}", failed.len(), rep.checks.len(), failed.join("; "))
            };
            Outcome { passed: rep.passed && !rep.checks.is_empty(), detail }
        }
        Err(e) => Outcome { passed: false, detail: format!("error: {e}") },
    }
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

/// Two runs of the same config and a re-run from the first manifest give identical norms.csv bytes.
fn reproducible_norms() -> Result<SuiteReport, HarnessError> {
    let tmp = tempfile::tempdir()?;
    let (cfg, text) = RunConfig::load(&preset("sqg_thm1.cfg"))?;
    let a = run_scenario(&cfg, &text, &tmp.path().join("a"))?;
    let b = run_scenario(&cfg, &text, &tmp.path().join("b"))?;
    let (cfg_m, text_m) = RunConfig::load(&a.dir.join("manifest.json"))?;
    let c = run_scenario(&cfg_m, &text_m, &tmp.path().join("c"))?;
    let bytes = |o: &fracdrift::scenario::RunOutcome| std::fs::read(o.dir.join("norms.csv"));
    let (ba, bb, bc) = (bytes(&a)?, bytes(&b)?, bytes(&c)?);
    let check = |name: &str, ok: bool| Check { name: name.into(), passed: ok, value: ok as u8 as f64, limit: 1.0 };
    let checks = vec![
        check("same_config_identical_norms_csv", ba == bb && !ba.is_empty()),
        check("manifest_rerun_identical_norms_csv", ba == bc),
    ];
    Ok(SuiteReport { suite: "reproducibility".into(), passed: checks.iter().all(|c| c.passed), checks, constants: Vec::new() })
}

fn main() -> ExitCode {
    let (mp, traj) = match verify::max_principle(128, 1e-3, 1.0) {
        Ok((rep, traj)) => (Ok(rep), Some(traj)),
        Err(e) => (Err(e), None),
    };
    let balance = match &traj {
        Some(t) => verify::energy_balance(t),
        None => Err(HarnessError::Input("maximum-principle run did not complete".into())),
    };
    let estimators = verify::estimator_agreement().and_then(|r| Ok(r.merge(reproducible_norms()?)));

    let criteria: Vec<(&str, Result<SuiteReport, HarnessError>)> = vec![
        ("maximum principle, SQG N=128 dt=1e-3 T=1", mp),
        ("single-mode decay and p=4 dissipation balance", balance),
        ("Besov energy constant stable under N and dt refinement", verify::besov_energy()),
        ("Besov norm bounded by L^p energy plus dissipation", verify::besov_dissipation()),
        ("oscillation lemma batteries with annulus factors", verify::lemmas()),
        ("mollification bound for eps in 2^-2..2^-6", verify::mollification_bound()),
        ("transfer bracket constancy and dt order", verify::transfer()),
        ("molecule envelopes at r=1/16", verify::molecules()),
        ("exact exponent algebra and verdict flips", verify::exponents()),
        ("Holder gain from rough data", verify::holder_gain()),
        ("Besov estimator agreement and reproducible norms.csv", estimators),
    ];

    let mut all = true;
    for (i, (name, rep)) in criteria.into_iter().enumerate() {
        let o = from_report(rep);
        all &= o.passed;
        println!("criterion {:>2} {}: {} ({})", i + 1, if o.passed { "PASS" } else { "FAIL" }, name, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
