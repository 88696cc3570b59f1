use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dpse_core::harness::SummaryDocument;

fn dpse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpse"))
        .args(args)
        .output()
        .unwrap()
}

fn small_grid(out: &Path, extra: &[&str]) -> Output {
    let out = out.to_str().unwrap();
    let mut args = vec![
        "bandit",
        "grid",
        "--setting",
        "c2",
        "--algo",
        "dp_se,dp_ucb",
        "--k",
        "4",
        "--eps",
        "0.5,1",
        "--horizon",
        "20000",
        "--runs",
        "3",
        "--checkpoints",
        "10",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    dpse(&args)
}

#[test]
fn grid_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let run = small_grid(dir.path(), &[]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 5);

    let report = dir.path().join("ratio.csv");
    let cmp = dpse(&[
        "bandit",
        "compare",
        "--summary",
        dir.path().to_str().unwrap(),
        "--a",
        "dp_se",
        "--b",
        "dp_ucb",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(
        cmp.status.success(),
        "{}",
        String::from_utf8_lossy(&cmp.stderr)
    );
    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(String::from_utf8(cmp.stdout).unwrap(), text);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("setting,K,epsilon,T,ratio,lower,upper"));
    for line in lines {
        let ratio: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(ratio > 1.0, "{line}");
    }
}

#[test]
fn zero_noise_outputs_are_not_private() {
    let dir = tempfile::tempdir().unwrap();
    let run = small_grid(dir.path(), &["--zero-noise", "--rewards", "deterministic"]);
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("non-private"));
    let doc = SummaryDocument::load(&dir.path().join("summary.json")).unwrap();
    assert!(!doc.metadata.private);
    assert!(doc.metadata.zero_noise);
    assert!(doc.metadata.config.zero_noise);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "settings = [\"c1\"]\nalgorithms = [\"se\"]\nk = [3]\nepsilon = [1.0]\nhorizon = 5000\nruns = 2\n").unwrap();
    let out = dir.path().join("out");
    let run = dpse(&[
        "bandit",
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--runs",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let resolved = fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    assert!(resolved.contains("runs = 1"));
    assert_eq!(fs::read_dir(out.join("traces")).unwrap().count(), 1);
}

#[test]
fn exit_codes() {
    assert_eq!(
        dpse(&["bandit", "grid", "--setting", "c7"]).status.code(),
        Some(2)
    );
    assert_eq!(
        dpse(&["bandit", "grid", "--config", "/no/such/file.toml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        dpse(&["bandit", "grid", "--runs", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        dpse(&["bandit", "run", "--eps", "0.5,1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        dpse(&["stopping-rule", "run", "--mu", "0.4", "--alpha", "2"])
            .status
            .code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let under_file = blocker.join("out");
    let run = small_grid(&under_file, &[]);
    assert_eq!(run.status.code(), Some(3));
    let missing = dpse(&[
        "bandit",
        "compare",
        "--summary",
        dir.path().join("nope.json").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn stopping_rule_prints_json_lines() {
    let run = dpse(&[
        "stopping-rule",
        "run",
        "--mu",
        "0.4",
        "--runs",
        "5",
        "--seed",
        "10",
    ]);
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 5);
    for line in stdout.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let t = v["halt_time"].as_u64().unwrap();
        assert!(t.is_power_of_two());
        assert!((v["estimate"].as_f64().unwrap() - 0.4).abs() < 0.1);
    }
    let ones = dpse(&[
        "stopping-rule",
        "run",
        "--rule",
        "dp-nas",
        "--mu",
        "1",
        "--alpha",
        "1",
        "--beta",
        "0.1",
        "--zero-noise",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&ones.stdout).unwrap();
    assert_eq!(v["halt_time"], 539);
}

#[test]
fn selftest_passes() {
    let run = dpse(&["selftest"]);
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(run.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 6);
}
