use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dpse_core::bandit::Algorithm;
use dpse_core::env::{RewardModel, Setting};
use dpse_core::harness::io::{parse_summary_csv, parse_trace_csv, trace_csv};
use dpse_core::harness::{
    cells, compare, mean_stderr, run_grid, run_task, trace_rows, ExperimentConfig, SummaryDocument,
    RESOLVED_CONFIG, SUMMARY_CSV, SUMMARY_JSON, TRACE_DIR,
};

fn small(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        settings: vec![Setting::C1, Setting::C2],
        algorithms: vec![Algorithm::DpSe, Algorithm::DpUcb],
        k: vec![4],
        epsilon: vec![0.5, 1.0],
        horizon: 20_000,
        runs: 3,
        checkpoints: 20,
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn read_dir_sorted(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn grid_counts_files_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_grid(&small(dir.path())).unwrap();
    assert_eq!(out.trace_files.len(), 24);
    assert_eq!(out.summaries.len(), 8);
    assert_eq!(read_dir_sorted(&dir.path().join(TRACE_DIR)).len(), 24);
    for f in [SUMMARY_CSV, SUMMARY_JSON, RESOLVED_CONFIG] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let echoed = ExperimentConfig::load(&dir.path().join(RESOLVED_CONFIG)).unwrap();
    assert_eq!(echoed, small(dir.path()));
}

#[test]
fn reproducible_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_grid(&ExperimentConfig {
        threads: 1,
        ..small(a.path())
    })
    .unwrap();
    run_grid(&ExperimentConfig {
        threads: 4,
        ..small(b.path())
    })
    .unwrap();
    assert_eq!(
        read_dir_sorted(&a.path().join(TRACE_DIR)),
        read_dir_sorted(&b.path().join(TRACE_DIR))
    );
    assert_eq!(
        fs::read(a.path().join(SUMMARY_CSV)).unwrap(),
        fs::read(b.path().join(SUMMARY_CSV)).unwrap()
    );
}

#[test]
fn single_cell_rerun_reproduces_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    run_grid(&cfg).unwrap();
    let cell = cells(&cfg)[5];
    let path = dir.path().join(TRACE_DIR).join(cell.trace_file_name(2));
    let original = fs::read(&path).unwrap();
    fs::remove_file(&path).unwrap();
    let trace = run_task(&cfg, &cell, 2).unwrap();
    assert_eq!(trace_csv(&trace_rows(&cell, &trace)).into_bytes(), original);
}

#[test]
fn summaries_match_raw_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let out = run_grid(&cfg).unwrap();
    let summary = parse_summary_csv(&fs::read_to_string(&out.summary_csv).unwrap()).unwrap();
    let doc = SummaryDocument::load(&out.summary_json).unwrap();
    assert_eq!(doc.cells.len(), 8);
    assert!(doc.metadata.private);
    assert!(!doc.metadata.zero_noise);
    for cs in &doc.cells {
        let traces: Vec<_> = (0..cfg.runs)
            .map(|r| {
                let text =
                    fs::read_to_string(dir.path().join(TRACE_DIR).join(cs.cell.trace_file_name(r)))
                        .unwrap();
                parse_trace_csv(&text).unwrap()
            })
            .collect();
        for (i, &t) in cs.t.iter().enumerate() {
            let col: Vec<f64> = traces.iter().map(|rows| rows[i].cum_regret).collect();
            assert!(traces.iter().all(|rows| rows[i].t == t));
            let (m, se) = mean_stderr(&col);
            let row = summary
                .iter()
                .find(|r| {
                    r.setting == cs.cell.setting
                        && r.algorithm == cs.cell.algorithm
                        && r.epsilon == cs.cell.epsilon
                        && r.t == t
                })
                .unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300);
            assert!(
                rel(m, row.mean_cum_regret),
                "{m} vs {}",
                row.mean_cum_regret
            );
            // Trace values are rounded to 10 digits, so the spread is only known to that scale.
            assert!(
                (se - row.stderr_cum_regret).abs() <= 1e-9 * m.abs().max(se),
                "{se} vs {}",
                row.stderr_cum_regret
            );
        }
    }
}

#[test]
fn zero_noise_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        settings: vec![Setting::C2],
        algorithms: vec![Algorithm::DpSe, Algorithm::Se],
        k: vec![5],
        epsilon: vec![0.5],
        horizon: 20_000,
        runs: 1,
        checkpoints: 10,
        rewards: RewardModel::Deterministic,
        zero_noise: true,
        out: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let out = run_grid(&cfg).unwrap();
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    for cell in cells(&cfg) {
        let name = cell.trace_file_name(0);
        let got = fs::read_to_string(dir.path().join(TRACE_DIR).join(&name)).unwrap();
        if std::env::var_os("DPSE_BLESS").is_some() {
            fs::create_dir_all(&fixtures).unwrap();
            fs::write(fixtures.join(&name), &got).unwrap();
        }
        let want = fs::read_to_string(fixtures.join(&name)).unwrap();
        assert_eq!(got, want, "{name}");
    }
    let doc = SummaryDocument::load(&out.summary_json).unwrap();
    assert!(!doc.metadata.private);
    assert!(doc.metadata.zero_noise);
}

#[test]
fn compare_from_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_grid(&small(dir.path())).unwrap();
    let rows = compare(&out.summaries, Algorithm::DpSe, Algorithm::DpUcb).unwrap();
    assert_eq!(rows.len(), 4);
    let back = compare(&out.summaries, Algorithm::DpUcb, Algorithm::DpSe).unwrap();
    for (a, b) in rows.iter().zip(&back) {
        assert!((a.ratio * b.ratio - 1.0).abs() < 1e-12);
        assert!(a.lower <= a.ratio && a.ratio <= a.upper);
    }
    for row in compare(&out.summaries, Algorithm::DpUcb, Algorithm::DpUcb).unwrap() {
        assert_eq!(row.ratio, 1.0);
    }
    assert!(compare(&out.summaries, Algorithm::DpSe, Algorithm::Ucb).is_err());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let err = run_grid(&small(&blocker.join("sub"))).unwrap_err();
    assert!(matches!(err, dpse_core::Error::Io { .. }), "{err}");
}

#[test]
fn invalid_config_is_rejected() {
    assert!(ExperimentConfig::from_toml_str("settings = [\"c9\"]")
        .unwrap_err()
        .is_config());
    assert!(ExperimentConfig::from_toml_str("bogus = 1")
        .unwrap_err()
        .is_config());
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        runs: 0,
        ..small(dir.path())
    };
    assert!(run_grid(&cfg).unwrap_err().is_config());
}

#[test]
fn shipped_presets_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let full = ExperimentConfig::load(&dir.join("full_scale.toml")).unwrap();
    full.validate().unwrap();
    assert_eq!(full.horizon, 50_000_000);
    assert_eq!(full.runs, 30);
    assert_eq!(full.epsilon, vec![0.1, 0.25, 0.5, 1.0]);
    assert_eq!(full.settings, ExperimentConfig::full_scale().settings);
    for name in ["desk.toml", "k_sweep.toml"] {
        ExperimentConfig::load(&dir.join(name))
            .unwrap()
            .validate()
            .unwrap();
    }
}
