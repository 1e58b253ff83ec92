use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracdrift::plots::parse_series_path;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracdrift"))
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
seed = 3
[grid]
resolution = 32
[exponents]
regime = "theorem1"
q = 6
a = 0
[drift]
kind = "sqg_riesz"
[run]
t_final = 0.05
dt = 1e-3
"#;

#[test]
fn rejected_preset_exits_3_naming_the_constraint() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin().args(["simulate", "-c"]).arg(preset("rejected_a_ge_n.cfg")).arg("--out").arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("a < n"));
    let o = bin().args(["exponents", "-c"]).arg(preset("rejected_a_ge_n.cfg")).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, SMALL.replace("[run]", "[run]\nbogus = 1")).unwrap();
    let o = bin().args(["simulate", "-c"]).arg(&cfg).arg("--out").arg(tmp.path().join("run")).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn alpha_mismatch_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("mismatch.cfg");
    std::fs::write(&cfg, SMALL.replace("[drift]", "[levy]\nalpha = 1.5\n[drift]")).unwrap();
    let o = bin().args(["simulate", "-c"]).arg(&cfg).arg("--out").arg(tmp.path().join("run")).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn unknown_suite_is_an_error() {
    let o = bin().args(["verify", "nonsense"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn header_only_csv_gives_empty_axes() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("norms.csv"), "t,l2,l4,l8,linf,besov_alpha_over_p_p,mc_q_a,holder_gamma\n").unwrap();
    let o = bin().arg("plots").arg("--out").arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = std::fs::read_to_string(tmp.path().join("plots/l2.svg")).unwrap();
    assert!(svg.contains("class=\"axes\""));
    assert!(parse_series_path(&svg).is_none());
}

#[test]
fn missing_csv_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin().arg("plots").arg("--out").arg(tmp.path()).output().unwrap();
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn simulate_then_dual_and_replot() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let cfg = tmp.path().join("small.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let o = bin().args(["simulate", "-c"]).arg(&cfg).arg("--out").arg(&run).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["manifest.json", "norms.csv", "plots/l2.svg", "plots/linf.svg"] {
        assert!(run.join(f).exists(), "{f}");
    }

    // the L^2 series decays, so the plotted polyline descends
    let pts = parse_series_path(&std::fs::read_to_string(run.join("plots/l2.svg")).unwrap()).unwrap();
    assert!(pts.len() > 2);
    assert!(pts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1), "{pts:?}");

    let before = std::fs::read(run.join("plots/l2.svg")).unwrap();
    let o = bin().arg("plots").arg("--out").arg(&run).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(run.join("plots/l2.svg")).unwrap(), before);

    // r = 1/2 is resolved at N = 32 (r >= 2h)
    let dual = tmp.path().join("dual");
    let o = bin()
        .args(["dual", "--trajectory"])
        .arg(&run)
        .args(["--t-pivot", "0.05", "--r", "0.5", "--out"])
        .arg(&dual)
        .output()
        .unwrap();
    assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["passed"].is_boolean());
    let bounds = std::fs::read_to_string(dual.join("bounds.csv")).unwrap();
    assert!(bounds.starts_with("s,conc_lhs,conc_env,height_lhs,height_env,l1_lhs,l1_env,bracket"));

    let field = run.join("fields/theta_00000.fdf");
    let csv = tmp.path().join("n.csv");
    for _ in 0..2 {
        let o = bin().arg("norms").arg(&field).arg("--csv").arg(&csv).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let mut outs = Vec::new();
    for threads in ["1", "3"] {
        let run = tmp.path().join(format!("t{threads}"));
        let o = bin().env("FRACDRIFT_THREADS", threads).args(["simulate", "-c"]).arg(&cfg).arg("--out").arg(&run).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outs.push(std::fs::read(run.join("norms.csv")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}
