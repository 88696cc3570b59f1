//! Python bindings for the `dpse` simulator.
//!
//! ```python
//! import dpse
//! trace = dpse.bandit_run("c2", "dp_se", k=5, epsilon=0.5, horizon=100_000, seed=1)
//! print(trace.final_regret, trace.pulls)
//! ```

use std::path::Path;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dpse_core::bandit::{self, Algorithm, BanditParams};
use dpse_core::env::{BanditEnvironment, RewardModel, Setting};
use dpse_core::harness::{self, ExperimentConfig};
use dpse_core::noise::{self, LaplaceScale, NoiseSource};
use dpse_core::stopping::{self, BernoulliSignStream, StoppingRuleConfig};
use dpse_core::tree;
use dpse_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::State(_) | Error::Capacity(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn lap(s: f64) -> PyResult<LaplaceScale> {
    LaplaceScale::new(s).map_err(py_err)
}

fn source(seed: u64, zero_noise: bool) -> NoiseSource {
    if zero_noise {
        NoiseSource::zero()
    } else {
        NoiseSource::new(seed, 0)
    }
}

#[pyfunction]
fn laplace_inverse_cdf(u: f64, scale: f64) -> PyResult<f64> {
    noise::laplace_inverse_cdf(u, lap(scale)?).map_err(py_err)
}

#[pyfunction]
fn laplace_tail(tau: f64, scale: f64) -> PyResult<f64> {
    noise::laplace_tail(tau, lap(scale)?).map_err(py_err)
}

/// Seeded Laplace draws, for checking the sampler from Python.
#[pyfunction]
#[pyo3(signature = (n, scale, seed=0, stream=0))]
fn laplace_samples(n: usize, scale: f64, seed: u64, stream: u64) -> PyResult<Vec<f64>> {
    let s = lap(scale)?;
    let mut src = NoiseSource::new(seed, stream);
    Ok((0..n).map(|_| src.laplace(s)).collect())
}

#[pyfunction]
fn hoeffding_radius(t: u64, range: f64, delta: f64) -> PyResult<f64> {
    noise::hoeffding_radius(t, range, delta).map_err(py_err)
}

#[pyfunction]
fn epoch_length(arms: usize, epoch: u32, beta: f64, epsilon: f64) -> PyResult<u64> {
    bandit::epoch_length(arms, epoch, beta, epsilon).map_err(py_err)
}

#[pyfunction]
fn ucb_index(mean: f64, t: u64, pulls: u64) -> PyResult<f64> {
    bandit::ucb_index(mean, t, pulls).map_err(py_err)
}

#[pyfunction]
fn means(setting: &str, k: usize) -> PyResult<Vec<f64>> {
    setting
        .parse::<Setting>()
        .and_then(|s| s.means(k))
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (mu, range=1.0, alpha=0.25, beta=0.05, epsilon=1.0))]
fn expected_halt_bound(mu: f64, range: f64, alpha: f64, beta: f64, epsilon: f64) -> PyResult<u64> {
    let cfg = StoppingRuleConfig::private(range, alpha, beta, epsilon, 1).map_err(py_err)?;
    stopping::expected_halt_bound(&cfg, mu).map_err(py_err)
}

#[pyclass(frozen, get_all)]
struct StoppingOutcome {
    halt_time: u64,
    estimate: Option<f64>,
    capped: bool,
    queries: u64,
}

#[pymethods]
impl StoppingOutcome {
    fn __repr__(&self) -> String {
        format!(
            "StoppingOutcome(halt_time={}, estimate={:?}, capped={}, queries={})",
            self.halt_time, self.estimate, self.capped, self.queries
        )
    }
}

/// One stopping-rule run on a ±R stream with mean `mu`.
///
/// `rule` is one of "nas", "dp_nas", "dp_exp_nas".
#[pyfunction]
#[pyo3(signature = (mu, rule="dp_exp_nas", range=1.0, alpha=0.25, beta=0.05, epsilon=1.0, seed=0, max_samples=1<<30, zero_noise=false))]
#[allow(clippy::too_many_arguments)]
fn stopping_rule_run(
    mu: f64,
    rule: &str,
    range: f64,
    alpha: f64,
    beta: f64,
    epsilon: f64,
    seed: u64,
    max_samples: u64,
    zero_noise: bool,
) -> PyResult<StoppingOutcome> {
    let base = NoiseSource::new(seed, 0);
    let noise = if zero_noise {
        NoiseSource::zero()
    } else {
        base.clone()
    };
    let mut stream = BernoulliSignStream::with_mean(mu, range, base.substream(0x5354));
    let out = match rule {
        "nas" => {
            let cfg = StoppingRuleConfig::new(range, alpha, beta, max_samples).map_err(py_err)?;
            stopping::nas_run(&mut stream, &cfg)
        }
        "dp_nas" | "dp_exp_nas" => {
            let cfg = StoppingRuleConfig::private(range, alpha, beta, epsilon, max_samples)
                .map_err(py_err)?;
            if rule == "dp_nas" {
                stopping::dp_nas_run(&mut stream, &cfg, &noise)
            } else {
                stopping::dp_exp_nas_run(&mut stream, &cfg, &noise)
            }
        }
        other => return Err(PyValueError::new_err(format!("unknown rule {other:?}"))),
    }
    .map_err(py_err)?;
    Ok(StoppingOutcome {
        halt_time: out.halt_time,
        estimate: out.estimate,
        capped: out.capped,
        queries: out.queries,
    })
}

/// Private prefix sums over at most `horizon` values in [0, 1].
#[pyclass(name = "TreeCounter")]
struct PyTreeCounter {
    inner: tree::TreeCounter,
}

#[pymethods]
impl PyTreeCounter {
    #[new]
    #[pyo3(signature = (horizon, epsilon, seed=0, zero_noise=false))]
    fn new(horizon: u64, epsilon: f64, seed: u64, zero_noise: bool) -> PyResult<Self> {
        let inner =
            tree::TreeCounter::new(horizon, epsilon, source(seed, zero_noise)).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn add(&mut self, value: f64) -> PyResult<()> {
        self.inner.add(value).map_err(py_err)
    }

    fn sum(&self) -> PyResult<f64> {
        self.inner.sum().map_err(py_err)
    }

    #[getter]
    fn raw_sum(&self) -> f64 {
        self.inner.raw_sum()
    }

    #[getter]
    fn count(&self) -> u64 {
        self.inner.count()
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.inner.depth()
    }

    fn __len__(&self) -> usize {
        self.inner.count() as usize
    }
}

#[pyclass(frozen, get_all)]
struct RunTrace {
    algorithm: String,
    means: Vec<f64>,
    seed: u64,
    checkpoints: Vec<(u64, f64)>,
    pulls: Vec<u64>,
    /// `(arm, epoch, t)` per removed arm.
    eliminations: Vec<(usize, u32, u64)>,
    survivor: Option<usize>,
    final_regret: f64,
}

#[pymethods]
impl RunTrace {
    fn __repr__(&self) -> String {
        format!(
            "RunTrace(algorithm={:?}, final_regret={}, pulls={:?}, survivor={:?})",
            self.algorithm, self.final_regret, self.pulls, self.survivor
        )
    }
}

#[pyfunction]
#[pyo3(signature = (setting, algorithm, k=5, epsilon=0.25, horizon=100_000, seed=0, checkpoints=100, beta=None, rewards="bernoulli", zero_noise=false))]
#[allow(clippy::too_many_arguments)]
fn bandit_run(
    py: Python<'_>,
    setting: &str,
    algorithm: &str,
    k: usize,
    epsilon: f64,
    horizon: u64,
    seed: u64,
    checkpoints: usize,
    beta: Option<f64>,
    rewards: &str,
    zero_noise: bool,
) -> PyResult<RunTrace> {
    let setting: Setting = setting.parse().map_err(py_err)?;
    let alg: Algorithm = algorithm.parse().map_err(py_err)?;
    let rewards: RewardModel = rewards.parse().map_err(py_err)?;
    let env = BanditEnvironment::from_setting(setting, k, rewards).map_err(py_err)?;
    let mut params = BanditParams::new(horizon, epsilon).with_checkpoints(checkpoints);
    params.beta = beta;
    let noise = source(seed, zero_noise);
    let trace = py
        .detach(|| alg.run(&env, &params, &noise))
        .map_err(py_err)?;
    Ok(RunTrace {
        algorithm: alg.as_str().to_string(),
        final_regret: trace.final_regret(),
        means: trace.means,
        seed,
        checkpoints: trace.checkpoints,
        pulls: trace.pulls,
        eliminations: trace
            .eliminations
            .iter()
            .map(|e| (e.arm, e.epoch, e.t))
            .collect(),
        survivor: trace.survivor,
    })
}

type CellRow = (String, String, usize, f64, f64);

/// Runs a grid from a TOML config file; returns `(setting, algorithm, K, epsilon, final mean regret)` per cell.
#[pyfunction]
#[pyo3(signature = (config, out=None))]
fn run_grid(py: Python<'_>, config: &str, out: Option<&str>) -> PyResult<Vec<CellRow>> {
    let mut cfg = ExperimentConfig::load(Path::new(config)).map_err(py_err)?;
    if let Some(out) = out {
        cfg.out = out.into();
    }
    let grid = py.detach(|| harness::run_grid(&cfg)).map_err(py_err)?;
    Ok(grid
        .summaries
        .iter()
        .map(|s| {
            (
                s.cell.setting.to_string(),
                s.cell.algorithm.to_string(),
                s.cell.k,
                s.cell.epsilon,
                s.final_mean(),
            )
        })
        .collect())
}

#[pymodule]
fn dpse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(laplace_inverse_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(laplace_tail, m)?)?;
    m.add_function(wrap_pyfunction!(laplace_samples, m)?)?;
    m.add_function(wrap_pyfunction!(hoeffding_radius, m)?)?;
    m.add_function(wrap_pyfunction!(epoch_length, m)?)?;
    m.add_function(wrap_pyfunction!(ucb_index, m)?)?;
    m.add_function(wrap_pyfunction!(means, m)?)?;
    m.add_function(wrap_pyfunction!(expected_halt_bound, m)?)?;
    m.add_function(wrap_pyfunction!(stopping_rule_run, m)?)?;
    m.add_function(wrap_pyfunction!(bandit_run, m)?)?;
    m.add_function(wrap_pyfunction!(run_grid, m)?)?;
    m.add_class::<StoppingOutcome>()?;
    m.add_class::<PyTreeCounter>()?;
    m.add_class::<RunTrace>()?;
    m.add("PRNG", noise::PRNG_NAME)?;
    Ok(())
}
