use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn agd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agd"))
        .args(args)
        .output()
        .expect("spawn agd")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("bad error json {line}: {e}"))
}

const QUAD: &str = r#"
seed = 5
[problem]
kind = "testfn"
name = "quad_skew"
steps = 4000
[optimizer]
name = "agd"
alpha = 1e-3
"#;

#[test]
fn run_writes_artifacts_and_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = agd(&["run", "--config", &config("quad_skew.toml"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trajectory.csv", "summary.json", "histograms.json", "config.toml"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "converged");
    assert!(summary["wall_time_s"].as_f64().unwrap() >= 0.0);
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,loss,step_norm,truncation_fraction");
    assert_eq!(csv.lines().count(), 5001);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["quad_skew.toml", "two_moons.toml", "regret.toml", "rosenbrock.toml"] {
        let a = dir.path().join(format!("{name}.a"));
        let b = dir.path().join(format!("{name}.b"));
        for out in [&a, &b] {
            let o = agd(&["run", "--config", &config(name), "--out", out.to_str().unwrap()]);
            assert!(o.status.success());
        }
        for f in ["trajectory.csv", "histograms.json"] {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{name} {f}");
        }
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let cfg = config("two_moons.toml");
    assert!(agd(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(agd(&["run", "--config", &cfg, "--seed", "8", "--out", b.to_str().unwrap()]).status.success());
    assert_ne!(std::fs::read(a.join("trajectory.csv")).unwrap(), std::fs::read(b.join("trajectory.csv")).unwrap());
}

#[test]
fn zero_delta_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &QUAD.replace("alpha = 1e-3", "alpha = 1e-3\ndelta = 0.0"));
    let out = dir.path().join("out");
    let o = agd(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["field"], "optimizer.delta");
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &QUAD.replace("alpha = 1e-3", "alpha = 1e-3\nbeta_2 = 0.99"));
    let o = agd(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["field"], "beta_2");
}

#[test]
fn missing_config_is_a_config_error() {
    let o = agd(&["run", "--config", "/nonexistent/agd.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "config");
}

#[test]
fn delta_sweep_has_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = agd(&[
        "sweep",
        "--config",
        &config("two_moons.toml"),
        "--param",
        "optimizer.delta",
        "--values",
        "1e-8,1e-6,1e-4,1e-2",
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    for i in 0..4 {
        assert!(out.join(format!("point_{i:03}/trajectory.csv")).is_file());
    }
}

#[test]
fn divergent_lr_only_marks_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = agd(&[
        "sweep",
        "--config",
        &config("rosenbrock.toml"),
        "--param",
        "optimizer.alpha",
        "--values",
        "1e-3,1000,1e-2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let status: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(status, ["converged", "diverged", "converged"]);
    let diverged_at: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').nth(7).unwrap()).collect();
    assert_eq!(diverged_at, ["", "2", ""]);
}

#[test]
fn one_value_sweep_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let sweep = dir.path().join("sweep");
    let cfg = config("two_moons.toml");
    assert!(agd(&["run", "--config", &cfg, "--out", run.to_str().unwrap()]).status.success());
    let o = agd(&[
        "sweep", "--config", &cfg, "--param", "optimizer.delta", "--values", "1e-8", "--out", sweep.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read(run.join("trajectory.csv")).unwrap(),
        std::fs::read(sweep.join("point_000/trajectory.csv")).unwrap()
    );
}

#[test]
fn unknown_sweep_param_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = agd(&[
        "sweep",
        "--config",
        &config("quad_skew.toml"),
        "--param",
        "optimizer.gamma",
        "--values",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_rejects_beta2_one_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = agd(&["verify", "--beta2", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["field"], "beta2");
    assert!(o.stdout.is_empty());
    assert!(!out.exists());
}

#[test]
fn verify_with_few_samples_is_inconclusive_not_failed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = agd(&["verify", "--mc-samples", "1000", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let variance: Vec<_> = report["claims"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["claim"] == "variance_ratio")
        .collect();
    assert_eq!(variance.len(), 9);
    assert!(variance.iter().all(|c| c["status"] == "inconclusive"));
}

#[test]
fn default_race_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("race");
    let o = agd(&["race", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let table = std::fs::read_to_string(out.join("race.csv")).unwrap();
    assert_eq!(table.lines().count(), 16);
    assert!(out.join("race.json").is_file());
}
