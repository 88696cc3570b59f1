#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dpse_core::bandit::Algorithm;
use dpse_core::env::{RewardModel, Setting};
use dpse_core::harness::io::{format_sig10, write_atomic};
use dpse_core::harness::{self, CompareRow, ExperimentConfig, SummaryDocument, SUMMARY_JSON};
use dpse_core::noise::NoiseSource;
use dpse_core::stopping::{self, BernoulliSignStream, StoppingRuleConfig};
use dpse_core::{selftest, Error, Result};

#[derive(Parser)]
#[command(
    name = "dpse",
    version,
    about = "Private stopping rules and successive elimination experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stopping-rule experiments on ±R Bernoulli streams.
    StoppingRule {
        #[command(subcommand)]
        command: StoppingCommand,
    },
    /// Bandit runs, grids and comparisons.
    Bandit {
        #[command(subcommand)]
        command: BanditCommand,
    },
    /// Statistical self-checks of the noise primitives and the tree mechanism.
    Selftest,
}

#[derive(Subcommand)]
enum StoppingCommand {
    /// Run one or more seeded stopping-rule experiments; prints one JSON line per run.
    Run(StoppingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Nas,
    DpNas,
    DpExpNas,
}

#[derive(Args)]
struct StoppingArgs {
    #[arg(long, value_enum, default_value = "dp-exp-nas")]
    rule: Rule,
    /// Stream mean; samples are ±R with this mean.
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    range: f64,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1 << 30)]
    max_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Debug only: every privacy draw is 0.
    #[arg(long)]
    zero_noise: bool,
}

#[derive(Subcommand)]
enum BanditCommand {
    /// Run a single cell (one setting, algorithm, K and ε).
    Run(GridArgs),
    /// Run the full grid from a config file and flag overrides.
    Grid(GridArgs),
    /// Final-regret ratio b/a per cell, from a summary.json.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GridArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    setting: Vec<Setting>,
    #[arg(long, value_delimiter = ',')]
    algo: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses one per core.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    checkpoints: Option<usize>,
    #[arg(long)]
    rewards: Option<RewardModel>,
    #[arg(long)]
    beta: Option<f64>,
    /// Debug only: every privacy draw is 0 and outputs are marked non-private.
    #[arg(long)]
    zero_noise: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// A summary.json, or a grid output directory containing one.
    #[arg(long)]
    summary: PathBuf,
    #[arg(long, default_value = "dp_se")]
    a: Algorithm,
    #[arg(long, default_value = "dp_ucb")]
    b: Algorithm,
    /// Also write the report as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl GridArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| Error::config(e.to_string()))?,
            None => ExperimentConfig::default(),
        };
        if !self.setting.is_empty() {
            cfg.settings = self.setting.clone();
        }
        if !self.algo.is_empty() {
            cfg.algorithms = self.algo.clone();
        }
        if !self.k.is_empty() {
            cfg.k = self.k.clone();
        }
        if !self.eps.is_empty() {
            cfg.epsilon = self.eps.clone();
        }
        cfg.horizon = self.horizon.unwrap_or(cfg.horizon);
        cfg.runs = self.runs.unwrap_or(cfg.runs);
        cfg.base_seed = self.seed.unwrap_or(cfg.base_seed);
        cfg.out = self.out.clone().unwrap_or(cfg.out);
        cfg.threads = self.threads.unwrap_or(cfg.threads);
        cfg.checkpoints = self.checkpoints.unwrap_or(cfg.checkpoints);
        cfg.rewards = self.rewards.unwrap_or(cfg.rewards);
        cfg.beta = self.beta.or(cfg.beta);
        cfg.zero_noise |= self.zero_noise;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::StoppingRule {
            command: StoppingCommand::Run(args),
        } => stopping_run(&args),
        Command::Bandit { command } => match command {
            BanditCommand::Run(args) => {
                let cfg = args.resolve()?;
                if cfg.settings.len() * cfg.algorithms.len() * cfg.k.len() * cfg.epsilon.len() != 1
                {
                    return Err(Error::config(
                        "bandit run takes exactly one setting, algorithm, K and eps; use bandit grid",
                    ));
                }
                grid(&cfg)
            }
            BanditCommand::Grid(args) => grid(&args.resolve()?),
            BanditCommand::Compare(args) => compare(&args),
        },
        Command::Selftest => {
            let results = selftest::run_all();
            for r in &results {
                println!(
                    "{} {}: {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
            }
            let ok = results.iter().all(|r| r.passed);
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
    }
}

fn stopping_run(args: &StoppingArgs) -> Result<ExitCode> {
    let cfg = match args.rule {
        Rule::Nas => StoppingRuleConfig::new(args.range, args.alpha, args.beta, args.max_samples),
        _ => StoppingRuleConfig::private(
            args.range,
            args.alpha,
            args.beta,
            args.eps,
            args.max_samples,
        ),
    }
    .map_err(|e| Error::config(e.to_string()))?;
    if !(args.mu.abs() <= args.range) {
        return Err(Error::config(format!(
            "|mu| must not exceed the range {}",
            args.range
        )));
    }
    if args.zero_noise {
        eprintln!("warning: zero-noise mode, released estimates are not private");
    }
    for run in 0..args.runs {
        let seed = args.seed.wrapping_add(run);
        let base = NoiseSource::new(seed, 0);
        let noise = if args.zero_noise {
            NoiseSource::zero()
        } else {
            base.clone()
        };
        let mut stream =
            BernoulliSignStream::with_mean(args.mu, args.range, base.substream(0x5354));
        let out = match args.rule {
            Rule::Nas => stopping::nas_run(&mut stream, &cfg)?,
            Rule::DpNas => stopping::dp_nas_run(&mut stream, &cfg, &noise)?,
            Rule::DpExpNas => stopping::dp_exp_nas_run(&mut stream, &cfg, &noise)?,
        };
        let line = serde_json::json!({
            "seed": seed,
            "halt_time": out.halt_time,
            "estimate": out.estimate,
            "capped": out.capped,
            "queries": out.queries,
        });
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

fn grid(cfg: &ExperimentConfig) -> Result<ExitCode> {
    if cfg.zero_noise {
        eprintln!("warning: zero-noise mode, outputs are marked non-private");
    }
    let out = harness::run_grid(cfg)?;
    println!("setting,algorithm,K,epsilon,T,runs,final_mean_regret,final_stderr");
    for s in &out.summaries {
        println!(
            "{},{},{},{},{},{},{},{}",
            s.cell.setting,
            s.cell.algorithm,
            s.cell.k,
            format_sig10(s.cell.epsilon),
            s.cell.horizon,
            s.runs,
            format_sig10(s.final_mean()),
            format_sig10(s.stderr.last().copied().unwrap_or(0.0)),
        );
    }
    eprintln!(
        "wrote {} trace files, {} and {}",
        out.trace_files.len(),
        out.summary_csv.display(),
        out.summary_json.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn report_csv(rows: &[CompareRow]) -> String {
    let mut s = String::from("setting,K,epsilon,T,ratio,lower,upper\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.setting,
            r.k,
            format_sig10(r.epsilon),
            r.horizon,
            format_sig10(r.ratio),
            format_sig10(r.lower),
            format_sig10(r.upper)
        ));
    }
    s
}

fn summary_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(SUMMARY_JSON)
    } else {
        p.to_path_buf()
    }
}

fn compare(args: &CompareArgs) -> Result<ExitCode> {
    let doc = SummaryDocument::load(&summary_path(&args.summary))?;
    let rows = harness::compare(&doc.cells, args.a, args.b)?;
    let text = report_csv(&rows);
    print!("{text}");
    if let Some(out) = &args.out {
        write_atomic(out, text.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}
