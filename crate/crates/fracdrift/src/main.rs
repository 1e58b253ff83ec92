use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use fracdrift::config::RunConfig;
use fracdrift::plots::emit_plots;
use fracdrift::records::exponents_verdict;
use fracdrift::scenario::{load_trajectory, run_dual, run_scenario, DualOptions};
use fracdrift::verify::run_suite;
use fracdrift::HarnessError;
use fracdrift_core::exponents::parse_rational;
use fracdrift_core::field::load_fdf;
use fracdrift_core::spaces::{norm_report, NormRequest, NormReport};

/// Transport-diffusion laboratory: exponent algebra, simulation, dual runs,
/// norm estimation, verification batteries and plots.
#[derive(Parser)]
#[command(name = "fracdrift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the [exponents] section and print the verdict record.
    Exponents {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario into a run directory.
    Simulate {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve a molecule backwards against a stored trajectory.
    Dual {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long = "t-pivot")]
        t_pivot: f64,
        #[arg(long)]
        r: f64,
        /// Rational or decimal; defaults to the smallest admissible power of 10.
        #[arg(long)]
        zeta: Option<String>,
        /// Dual horizon; defaults to min(eps r^alpha, t-pivot).
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [std::f64::consts::PI, std::f64::consts::PI])]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the norm report of a field file.
    Norms {
        field: PathBuf,
        /// Takes Besov, Morrey-Campanato and Holder parameters from a run config.
        #[arg(short = 'c', long = "config")]
        config: Option<PathBuf>,
        /// Appends one CSV row to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification battery.
    Verify {
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one SVG per norms.csv column into <out>/plots.
    Plots {
        #[arg(long)]
        out: PathBuf,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, name: &str) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), &text)?;
    }
    say(&text);
    Ok(())
}

/// Writes a line to stdout; a closed pipe is not an error for a report printer.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn norm_request(config: Option<&Path>) -> Result<NormRequest, HarnessError> {
    let mut req = NormRequest::default();
    if let Some(path) = config {
        let (cfg, _) = RunConfig::load(path)?;
        let r = cfg.resolve()?;
        req.besov = r.besov.into_iter().collect();
        req.morrey = r.morrey.into_iter().collect();
        req.holder = r.holder.into_iter().collect();
    }
    Ok(req)
}

fn append_csv_row(path: &Path, field: &Path, report: &NormReport) -> Result<(), HarnessError> {
    let mut header = vec!["field".to_string()];
    let mut row = vec![field.display().to_string()];
    for (p, v) in &report.lp {
        header.push(format!("l{p}"));
        row.push(format!("{v:e}"));
    }
    for b in &report.besov {
        let method = serde_json::to_value(b.method)?;
        header.push(format!("besov_{}_s{}_p{}", method.as_str().unwrap_or("unknown"), b.s, b.p));
        row.push(format!("{:e}", b.value));
    }
    for m in &report.morrey {
        header.push(format!("mc_q{}_a{}", m.q, m.a));
        row.push(format!("{:e}", m.value));
    }
    for h in &report.holder {
        header.push(format!("holder_{}", h.gamma));
        row.push(format!("{:e}", h.value));
    }
    let fresh = !path.exists();
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| HarnessError::Input(e.to_string());
    if fresh {
        w.write_record(&header).map_err(io)?;
    }
    w.write_record(&row).map_err(io)?;
    w.flush()?;
    Ok(())
}

fn code(passed: bool) -> u8 {
    u8::from(!passed)
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    out: String,
    passed: bool,
    checks: &'a [fracdrift::scenario::CheckResult],
    dual_passed: Option<bool>,
}

/// Returns the process exit code; failed checks give 1.
fn run(cli: Cli) -> Result<u8, HarnessError> {
    match cli.command {
        Command::Exponents { config, out } => {
            let (cfg, _) = RunConfig::load(&config)?;
            let v = exponents_verdict(&cfg)?;
            emit(&v, out.as_deref(), "exponents.json")?;
            if !v.admissible() {
                eprintln!("inadmissible exponents: violates {}", v.violated_constraints.join(", "));
                return Ok(3);
            }
            Ok(0)
        }
        Command::Simulate { config, out } => {
            let (cfg, text) = RunConfig::load(&config)?;
            let outcome = run_scenario(&cfg, &text, &out)?;
            let summary = SimulateSummary {
                out: out.display().to_string(),
                passed: outcome.passed(),
                checks: &outcome.manifest.checks,
                dual_passed: outcome.dual.as_ref().map(|d| d.verdict.passed),
            };
            emit(&summary, None, "")?;
            Ok(code(outcome.passed()))
        }
        Command::Dual { trajectory, t_pivot, r, zeta, s0, x0, steps, out } => {
            let traj = load_trajectory(&trajectory)?;
            let (cfg, _) = RunConfig::load(&trajectory.join("manifest.json"))?;
            let set = cfg
                .exponent_set()?
                .ok_or_else(|| HarnessError::Config("the trajectory's config names no exponent regime".into()))?;
            let zeta = zeta.map(|z| parse_rational(&z)).transpose().map_err(|e| HarnessError::Config(format!("--zeta: {e}")))?;
            std::fs::create_dir_all(&out)?;
            let opts = DualOptions { t_pivot, r, zeta, s0, x0: [x0[0], x0[1]], steps };
            let outcome = run_dual(&traj, &set, &opts, &out)?;
            emit(&outcome.verdict, None, "")?;
            Ok(code(outcome.verdict.passed))
        }
        Command::Norms { field, config, csv, out } => {
            let f = load_fdf(&field)?;
            let report = norm_report(&f, &norm_request(config.as_deref())?)?;
            if let Some(path) = csv {
                append_csv_row(&path, &field, &report)?;
            }
            emit(&report, out.as_deref(), "norms.json")?;
            Ok(0)
        }
        Command::Verify { suite, out } => {
            let report = run_suite(&suite)?;
            emit(&report, out.as_deref(), &format!("verify_{suite}.json"))?;
            Ok(code(report.passed))
        }
        Command::Plots { out } => {
            for path in emit_plots(&out)? {
                say(&path.display().to_string());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("FRACDRIFT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    match run(cli) {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
