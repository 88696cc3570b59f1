//! Streaming mean estimators with multiplicative accuracy guarantees.
//!
//! Three rules are provided:
//!
//! * [`nas_run`]: the non-private rule, halting once `|mean_t| ≥ h_t(1/α + 1)`.
//! * [`dp_nas_run`]: a sparse-vector version that noises the threshold once
//!   and every query, and releases a Laplace-noised mean on halting.
//! * [`dp_exp_nas_run`]: the same test, posed only at `t = 2^k`.
//!
//! The threshold noise `B`, the per-query noise `A_t` and the release noise
//! `L` come from three separate substreams of the caller's [`NoiseSource`],
//! so that the draws for one role do not shift when another role draws more.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{LaplaceScale, NoiseSource};

const THRESHOLD_STREAM: u64 = 1;
const QUERY_STREAM: u64 = 2;
const RELEASE_STREAM: u64 = 3;

/// Pull-based source of samples in `[-R, R]`. `None` means the source is exhausted.
pub trait SampleStream {
    fn next_sample(&mut self) -> Option<f64>;
}

impl<F> SampleStream for F
where
    F: FnMut() -> Option<f64>,
{
    fn next_sample(&mut self) -> Option<f64> {
        self()
    }
}

/// Endless stream repeating one value.
#[derive(Debug, Clone, Copy)]
pub struct ConstantStream(pub f64);

impl SampleStream for ConstantStream {
    fn next_sample(&mut self) -> Option<f64> {
        Some(self.0)
    }
}

/// Replays a recorded trace, then reports exhaustion.
#[derive(Debug, Clone)]
pub struct ReplayStream {
    values: Vec<f64>,
    pos: usize,
}

impl ReplayStream {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, pos: 0 }
    }
}

impl SampleStream for ReplayStream {
    fn next_sample(&mut self) -> Option<f64> {
        let v = self.values.get(self.pos).copied();
        self.pos += 1;
        v
    }
}

/// `+R` with probability `p`, `-R` otherwise; the mean is `R(2p - 1)`.
#[derive(Debug, Clone)]
pub struct BernoulliSignStream {
    p: f64,
    range: f64,
    noise: NoiseSource,
}

impl BernoulliSignStream {
    pub fn new(p: f64, range: f64, noise: NoiseSource) -> Self {
        Self { p, range, noise }
    }

    /// Stream whose mean is `mu`, for `|mu| ≤ range`.
    pub fn with_mean(mu: f64, range: f64, noise: NoiseSource) -> Self {
        Self::new((1.0 + mu / range) / 2.0, range, noise)
    }
}

impl SampleStream for BernoulliSignStream {
    fn next_sample(&mut self) -> Option<f64> {
        Some(if self.noise.bernoulli(self.p) {
            self.range
        } else {
            -self.range
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRuleConfig {
    /// Support half-width `R`: samples lie in `[-R, R]`.
    pub range: f64,
    /// Relative accuracy `α`.
    pub alpha: f64,
    /// Failure probability `β`.
    pub beta: f64,
    /// Privacy budget; `None` for the non-private rule.
    pub epsilon: Option<f64>,
    pub max_samples: u64,
}

impl StoppingRuleConfig {
    pub fn new(range: f64, alpha: f64, beta: f64, max_samples: u64) -> Result<Self> {
        let cfg = Self {
            range,
            alpha,
            beta,
            epsilon: None,
            max_samples,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn private(
        range: f64,
        alpha: f64,
        beta: f64,
        epsilon: f64,
        max_samples: u64,
    ) -> Result<Self> {
        let cfg = Self {
            epsilon: Some(epsilon),
            ..Self::new(range, alpha, beta, max_samples)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::domain(format!(
                "R must be positive, got {}",
                self.range
            )));
        }
        // α = 1 is admitted: the guarantee degrades to |μ̂ - μ| ≤ |μ| but the rule is well defined.
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::domain(format!(
                "alpha must be in (0,1], got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::domain(format!(
                "beta must be in (0,1), got {}",
                self.beta
            )));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(Error::domain(format!(
                    "epsilon must be positive, got {eps}"
                )));
            }
        }
        if self.max_samples == 0 {
            return Err(Error::domain("max_samples must be at least 1"));
        }
        Ok(())
    }

    fn require_epsilon(&self) -> Result<f64> {
        self.epsilon
            .ok_or_else(|| Error::domain("private stopping rule needs epsilon"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRuleOutcome {
    /// Samples consumed; the halting time `t*` unless capped.
    pub halt_time: u64,
    /// Released estimate; `None` when capped.
    pub estimate: Option<f64>,
    pub capped: bool,
    /// Number of times the halting condition was evaluated.
    pub queries: u64,
    pub config: StoppingRuleConfig,
}

impl StoppingRuleOutcome {
    fn halted(halt_time: u64, estimate: f64, queries: u64, config: StoppingRuleConfig) -> Self {
        Self {
            halt_time,
            estimate: Some(estimate),
            capped: false,
            queries,
            config,
        }
    }

    fn capped(halt_time: u64, queries: u64, config: StoppingRuleConfig) -> Self {
        Self {
            halt_time,
            estimate: None,
            capped: true,
            queries,
            config,
        }
    }
}

/// Laplace scales of the three noise roles, all proportional to `R/ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpNasScales {
    pub threshold: LaplaceScale,
    pub query: LaplaceScale,
    pub release: LaplaceScale,
}

impl DpNasScales {
    pub fn new(range: f64, epsilon: f64) -> Result<Self> {
        Ok(Self {
            threshold: LaplaceScale::new(12.0 * range / epsilon)?,
            query: LaplaceScale::new(12.0 * range / epsilon)?,
            release: LaplaceScale::new(4.0 * range / epsilon)?,
        })
    }
}

/// Radius of the non-private rule: Hoeffding at confidence `1 - β/(2t²)`.
pub fn nas_radius(t: u64, range: f64, beta: f64) -> f64 {
    let t = t as f64;
    range * ((4.0 * t * t / beta).ln() / (2.0 * t)).sqrt()
}

/// Radius and slack of the private rules at sample count `t`.
///
/// `index` is `t` for the every-step rule and the doubling index `k` for the
/// power-of-two rule; the union bound runs over it.
fn private_bounds(
    t: u64,
    index: u64,
    cfg: &StoppingRuleConfig,
    scales: &DpNasScales,
) -> (f64, f64) {
    let tf = t as f64;
    let i2 = (index as f64) * (index as f64);
    let beta = cfg.beta;
    let radius = cfg.range * ((2.0 / tf) * (16.0 * i2 / beta).ln()).sqrt();
    let slack = scales.threshold.get() * (4.0 / beta).ln()
        + scales.query.get() * (8.0 * i2 / beta).ln()
        + scales.release.get() / cfg.alpha * (4.0 / beta).ln();
    (radius, slack)
}

/// Streaming state shared by the private rules.
struct DpNasState {
    t: u64,
    running_sum: f64,
    threshold_noise: f64,
    scales: DpNasScales,
    queries: NoiseSource,
    query_count: u64,
}

impl DpNasState {
    fn start(cfg: &StoppingRuleConfig, noise: &NoiseSource) -> Result<Self> {
        let eps = cfg.require_epsilon()?;
        let scales = DpNasScales::new(cfg.range, eps)?;
        let threshold_noise = noise.substream(THRESHOLD_STREAM).laplace(scales.threshold);
        Ok(Self {
            t: 0,
            running_sum: 0.0,
            threshold_noise,
            scales,
            queries: noise.substream(QUERY_STREAM),
            query_count: 0,
        })
    }

    fn mean(&self) -> f64 {
        self.running_sum / self.t as f64
    }

    /// Poses the noisy threshold query at the current `t`.
    fn query(&mut self, index: u64, cfg: &StoppingRuleConfig) -> bool {
        self.query_count += 1;
        let query_noise = self.queries.laplace(self.scales.query);
        let (radius, slack) = private_bounds(self.t, index, cfg, &self.scales);
        let t = self.t as f64;
        self.mean().abs()
            >= radius * (1.0 + 1.0 / cfg.alpha) + (slack + self.threshold_noise + query_noise) / t
    }

    fn release(&self, cfg: &StoppingRuleConfig, noise: &NoiseSource) -> StoppingRuleOutcome {
        let l = noise.substream(RELEASE_STREAM).laplace(self.scales.release);
        let estimate = self.mean() + l / self.t as f64;
        StoppingRuleOutcome::halted(self.t, estimate, self.query_count, *cfg)
    }
}

fn draw(stream: &mut dyn SampleStream, cfg: &StoppingRuleConfig, t: u64) -> Result<f64> {
    let x = stream
        .next_sample()
        .ok_or_else(|| Error::Input(format!("sample stream exhausted after {} samples", t)))?;
    if !(x.abs() <= cfg.range) {
        return Err(Error::Input(format!(
            "sample {x} at t={} outside [-{r}, {r}]",
            t + 1,
            r = cfg.range
        )));
    }
    Ok(x)
}

/// Non-private rule: halts at the first `t` with `|mean_t| ≥ h_t(1/α + 1)`.
pub fn nas_run(
    stream: &mut dyn SampleStream,
    cfg: &StoppingRuleConfig,
) -> Result<StoppingRuleOutcome> {
    cfg.validate()?;
    let mut sum = 0.0;
    for t in 1..=cfg.max_samples {
        sum += draw(stream, cfg, t - 1)?;
        let mean = sum / t as f64;
        if mean.abs() >= nas_radius(t, cfg.range, cfg.beta) * (1.0 / cfg.alpha + 1.0) {
            return Ok(StoppingRuleOutcome::halted(t, mean, t, *cfg));
        }
    }
    Ok(StoppingRuleOutcome::capped(
        cfg.max_samples,
        cfg.max_samples,
        *cfg,
    ))
}

/// Private rule querying the sparse-vector test at every step.
pub fn dp_nas_run(
    stream: &mut dyn SampleStream,
    cfg: &StoppingRuleConfig,
    noise: &NoiseSource,
) -> Result<StoppingRuleOutcome> {
    cfg.validate()?;
    let mut state = DpNasState::start(cfg, noise)?;
    while state.t < cfg.max_samples {
        state.running_sum += draw(stream, cfg, state.t)?;
        state.t += 1;
        if state.query(state.t, cfg) {
            return Ok(state.release(cfg, noise));
        }
    }
    Ok(StoppingRuleOutcome::capped(
        state.t,
        state.query_count,
        *cfg,
    ))
}

/// Private rule querying only at `t = 2^k`, `k = 1, 2, ...`.
pub fn dp_exp_nas_run(
    stream: &mut dyn SampleStream,
    cfg: &StoppingRuleConfig,
    noise: &NoiseSource,
) -> Result<StoppingRuleOutcome> {
    cfg.validate()?;
    let mut state = DpNasState::start(cfg, noise)?;
    let mut k = 0u32;
    loop {
        k += 1;
        let Some(next_query) = 1u64.checked_shl(k).filter(|&q| q <= cfg.max_samples) else {
            break;
        };
        while state.t < next_query {
            state.running_sum += draw(stream, cfg, state.t)?;
            state.t += 1;
        }
        if state.query(u64::from(k), cfg) {
            return Ok(state.release(cfg, noise));
        }
    }
    // Consume the remainder up to the cap so the reported time is the cap.
    while state.t < cfg.max_samples {
        draw(stream, cfg, state.t)?;
        state.t += 1;
    }
    Ok(StoppingRuleOutcome::capped(
        state.t,
        state.query_count,
        *cfg,
    ))
}

/// High-probability halting time `t_U = 2000(t0 + t1 + t2)` of the doubling rule.
///
/// A loose upper envelope: the constant 2000 is not tuned.
pub fn expected_halt_bound(cfg: &StoppingRuleConfig, mu: f64) -> Result<u64> {
    cfg.validate()?;
    let eps = cfg.require_epsilon()?;
    if !(mu != 0.0 && mu.is_finite()) {
        return Err(Error::domain("halting bound needs a nonzero mean"));
    }
    if cfg.beta > 0.08 {
        return Err(Error::domain(format!(
            "halting bound needs beta <= 0.08, got {}",
            cfg.beta
        )));
    }
    let (r, a, m) = (cfg.range, cfg.alpha, mu.abs());
    let loglog = ((1.0 / cfg.beta) * (r / (a * m)).ln()).ln().max(0.0);
    let t0 = r * r * loglog / (a * a * m * m);
    let t1 = r * loglog / (eps * m);
    let t2 = r * (1.0 / cfg.beta).ln() / (eps * a * m);
    Ok((2000.0 * (t0 + t1 + t2)).ceil().max(1.0) as u64)
}
