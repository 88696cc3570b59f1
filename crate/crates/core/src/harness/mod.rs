//! Experiment grid runner.
//!
//! A grid is the product `settings × K × ε × algorithms`; each cell is run
//! `runs` times. The seed of run `i` in a cell depends only on the base seed,
//! the cell's `(setting, K, ε, T)` and `i`. The algorithm is left out so that
//! every algorithm in a cell sees the same reward tapes.

pub mod compare;
pub mod config;
pub mod io;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{Algorithm, BanditParams, RunTrace};
use crate::env::{BanditEnvironment, RewardModel, Setting};
use crate::error::{Error, Result};
use crate::noise::{splitmix64, NoiseSource, PRNG_NAME};

pub use compare::{compare, CompareRow};
pub use config::ExperimentConfig;
pub use io::{SummaryRow, TraceRow};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";
pub const TRACE_DIR: &str = "traces";

pub const DP_UCB_INFLATION: &str =
    "gamma(a,t) = (d/(eps*t_a)) * d * ln(K*t^4), d = max(2, ceil(log2 T)); index = noisy mean + sqrt(2 ln t / t_a) + gamma";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub setting: Setting,
    pub algorithm: Algorithm,
    pub k: usize,
    pub epsilon: f64,
    pub horizon: u64,
}

impl CellKey {
    pub fn trace_file_name(&self, run: usize) -> String {
        format!(
            "{}_{}_K{}_eps{}_T{}_run{:03}.csv",
            self.setting,
            self.algorithm,
            self.k,
            io::format_sig10(self.epsilon),
            self.horizon,
            run
        )
    }

    /// Same `(setting, K, ε, T)`, ignoring the algorithm.
    pub fn same_instance(&self, other: &CellKey) -> bool {
        self.setting == other.setting
            && self.k == other.k
            && self.epsilon.to_bits() == other.epsilon.to_bits()
            && self.horizon == other.horizon
    }
}

/// Cells in deterministic order: setting, then K, then ε, then algorithm.
pub fn cells(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let mut out = Vec::new();
    for &setting in &cfg.settings {
        for &k in &cfg.k {
            for &epsilon in &cfg.epsilon {
                for &algorithm in &cfg.algorithms {
                    out.push(CellKey {
                        setting,
                        algorithm,
                        k,
                        epsilon,
                        horizon: cfg.horizon,
                    });
                }
            }
        }
    }
    out
}

pub fn run_seed(base_seed: u64, cell: &CellKey, run: usize) -> u64 {
    let setting = Setting::ALL
        .iter()
        .position(|s| *s == cell.setting)
        .unwrap() as u64;
    let mut h = splitmix64(setting);
    for word in [
        cell.k as u64,
        cell.epsilon.to_bits(),
        cell.horizon,
        run as u64,
    ] {
        h = splitmix64(h ^ word);
    }
    base_seed ^ h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: CellKey,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub t: Vec<u64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub mean_pulls: Vec<f64>,
    /// Final pseudo-regret per run, in run order.
    pub final_regrets: Vec<f64>,
    /// Fraction of runs that eliminated the optimal arm; elimination algorithms only.
    pub optimal_eliminated_rate: Option<f64>,
}

impl CellSummary {
    pub fn from_traces(cell: CellKey, traces: &[RunTrace], optimal: usize) -> Self {
        let n = traces.len();
        let t: Vec<u64> = traces[0].checkpoints.iter().map(|c| c.0).collect();
        let mut mean = Vec::with_capacity(t.len());
        let mut stderr = Vec::with_capacity(t.len());
        for i in 0..t.len() {
            let col: Vec<f64> = traces.iter().map(|tr| tr.checkpoints[i].1).collect();
            let (m, se) = mean_stderr(&col);
            mean.push(m);
            stderr.push(se);
        }
        let arms = traces[0].pulls.len();
        let mean_pulls = (0..arms)
            .map(|a| traces.iter().map(|tr| tr.pulls[a] as f64).sum::<f64>() / n as f64)
            .collect();
        let optimal_eliminated_rate = cell.algorithm.is_elimination().then(|| {
            traces
                .iter()
                .filter(|tr| tr.optimal_eliminated(optimal))
                .count() as f64
                / n as f64
        });
        Self {
            cell,
            runs: n,
            seeds: traces.iter().map(|tr| tr.seed).collect(),
            t,
            mean,
            stderr,
            mean_pulls,
            final_regrets: traces.iter().map(RunTrace::final_regret).collect(),
            optimal_eliminated_rate,
        }
    }

    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn rows(&self) -> Vec<SummaryRow> {
        self.t
            .iter()
            .zip(self.mean.iter().zip(&self.stderr))
            .map(|(&t, (&m, &se))| SummaryRow {
                setting: self.cell.setting,
                algorithm: self.cell.algorithm,
                k: self.cell.k,
                epsilon: self.cell.epsilon,
                horizon: self.cell.horizon,
                runs: self.runs,
                t,
                mean_cum_regret: m,
                stderr_cum_regret: se,
            })
            .collect()
    }
}

/// Arithmetic mean and `sample std / sqrt(n)`; the error is 0 for a single value.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn trace_rows(cell: &CellKey, trace: &RunTrace) -> Vec<TraceRow> {
    trace
        .checkpoints
        .iter()
        .map(|&(t, cum_regret)| TraceRow {
            setting: cell.setting,
            algorithm: cell.algorithm,
            k: cell.k,
            epsilon: cell.epsilon,
            horizon: cell.horizon,
            seed: trace.seed,
            t,
            cum_regret,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub prng: String,
    pub dp_ucb_inflation: String,
    /// False whenever zero-noise debug mode produced the data.
    pub private: bool,
    pub zero_noise: bool,
    pub rewards: RewardModel,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub metadata: Metadata,
    pub cells: Vec<CellSummary>,
}

impl SummaryDocument {
    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_text(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct GridOutput {
    pub summaries: Vec<CellSummary>,
    pub trace_files: Vec<PathBuf>,
    pub summary_csv: PathBuf,
    pub summary_json: PathBuf,
}

/// Runs one `(cell, run)` task.
pub fn run_task(cfg: &ExperimentConfig, cell: &CellKey, run: usize) -> Result<RunTrace> {
    let env = BanditEnvironment::from_setting(cell.setting, cell.k, cfg.rewards)?;
    let mut params =
        BanditParams::new(cell.horizon, cell.epsilon).with_checkpoints(cfg.checkpoints);
    params.beta = cfg.beta;
    let seed = run_seed(cfg.base_seed, cell, run);
    let noise = if cfg.zero_noise {
        NoiseSource::zero()
    } else {
        NoiseSource::new(seed, 0)
    };
    let mut trace = cell.algorithm.run(&env, &params, &noise)?;
    trace.seed = seed;
    Ok(trace)
}

/// Executes every cell of the grid, writes traces and summaries under `cfg.out`.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridOutput> {
    cfg.validate()?;
    let cells = cells(cfg);
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.runs).map(move |r| (c, r)))
        .collect();
    let trace_dir = cfg.out.join(TRACE_DIR);
    std::fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::State(format!("thread pool: {e}")))?;
    let results: Vec<Result<(RunTrace, PathBuf)>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r)| {
                let cell = &cells[c];
                let trace = run_task(cfg, cell, r)?;
                let path = trace_dir.join(cell.trace_file_name(r));
                io::write_atomic(&path, io::trace_csv(&trace_rows(cell, &trace)).as_bytes())?;
                Ok((trace, path))
            })
            .collect()
    });
    let results: Vec<(RunTrace, PathBuf)> = results.into_iter().collect::<Result<_>>()?;

    let mut summaries = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let traces: Vec<RunTrace> = results[c * cfg.runs..(c + 1) * cfg.runs]
            .iter()
            .map(|(t, _)| t.clone())
            .collect();
        let optimal = BanditEnvironment::from_setting(cell.setting, cell.k, cfg.rewards)?.optimal();
        summaries.push(CellSummary::from_traces(*cell, &traces, optimal));
    }

    let rows: Vec<SummaryRow> = summaries.iter().flat_map(CellSummary::rows).collect();
    let summary_csv = cfg.out.join(SUMMARY_CSV);
    io::write_atomic(&summary_csv, io::summary_csv(&rows).as_bytes())?;
    let doc = SummaryDocument {
        metadata: Metadata {
            prng: PRNG_NAME.to_string(),
            dp_ucb_inflation: DP_UCB_INFLATION.to_string(),
            private: !cfg.zero_noise && cfg.algorithms.iter().all(|a| a.is_private()),
            zero_noise: cfg.zero_noise,
            rewards: cfg.rewards,
            config: cfg.clone(),
        },
        cells: summaries.clone(),
    };
    let summary_json = cfg.out.join(SUMMARY_JSON);
    let json = serde_json::to_string_pretty(&doc).expect("summary serialises");
    io::write_atomic(&summary_json, json.as_bytes())?;
    io::write_atomic(
        &cfg.out.join(RESOLVED_CONFIG),
        cfg.to_toml_string().as_bytes(),
    )?;

    Ok(GridOutput {
        summaries,
        trace_files: results.into_iter().map(|(_, p)| p).collect(),
        summary_csv,
        summary_json,
    })
}
