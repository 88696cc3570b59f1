//! Successive elimination (private and not), UCB and the tree-based DP-UCB baseline.
//!
//! All runs consume a [`BanditEnvironment`] and a [`NoiseSource`] and return
//! a [`RunTrace`]. Reward draws for arm `a` come from substream
//! `REWARD_STREAM / a` of the run source, so two algorithms run on the same
//! seed see the same reward tape for every arm. Privacy noise lives on the
//! separate `PRIVACY_STREAM` substream.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{argmax_lowest, BanditEnvironment};
use crate::error::{Error, Result};
use crate::noise::{LaplaceScale, NoiseSource};
use crate::tree::TreeCounter;

pub const REWARD_STREAM: u64 = 0x5157_4152;
pub const PRIVACY_STREAM: u64 = 0x5052_4956;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DpSe,
    DpUcb,
    Se,
    Ucb,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::DpSe,
        Algorithm::DpUcb,
        Algorithm::Se,
        Algorithm::Ucb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::DpSe => "dp_se",
            Algorithm::DpUcb => "dp_ucb",
            Algorithm::Se => "se",
            Algorithm::Ucb => "ucb",
        }
    }

    pub fn is_private(self) -> bool {
        matches!(self, Algorithm::DpSe | Algorithm::DpUcb)
    }

    pub fn is_elimination(self) -> bool {
        matches!(self, Algorithm::DpSe | Algorithm::Se)
    }

    pub fn run(
        self,
        env: &BanditEnvironment,
        params: &BanditParams,
        noise: &NoiseSource,
    ) -> Result<RunTrace> {
        match self {
            Algorithm::DpSe => dp_se_run(env, params, noise),
            Algorithm::DpUcb => dp_ucb_run(env, params, noise),
            Algorithm::Se => se_run(env, params, noise),
            Algorithm::Ucb => ucb_run(env, params, noise),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "dp_se" => Ok(Algorithm::DpSe),
            "dp_ucb" => Ok(Algorithm::DpUcb),
            "se" => Ok(Algorithm::Se),
            "ucb" => Ok(Algorithm::Ucb),
            other => Err(Error::config(format!(
                "unknown algorithm {other:?} (expected dp_se, dp_ucb, se, ucb)"
            ))),
        }
    }
}

/// Run parameters shared by every algorithm; fields an algorithm does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditParams {
    pub horizon: u64,
    pub epsilon: f64,
    /// Confidence parameter; `None` means `1/T`.
    pub beta: Option<f64>,
    /// Number of equally spaced checkpoints recorded in the trace.
    pub checkpoints: usize,
}

impl BanditParams {
    pub fn new(horizon: u64, epsilon: f64) -> Self {
        Self {
            horizon,
            epsilon,
            beta: None,
            checkpoints: 100,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_checkpoints(mut self, checkpoints: usize) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn resolved_beta(&self) -> f64 {
        self.beta.unwrap_or(1.0 / self.horizon as f64)
    }

    fn validate(&self, arms: usize, private: bool) -> Result<()> {
        if self.horizon < arms as u64 {
            return Err(Error::domain(format!(
                "horizon {} smaller than arm count {arms}",
                self.horizon
            )));
        }
        let beta = self.resolved_beta();
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::domain(format!("beta must be in (0,1), got {beta}")));
        }
        if private && !(self.epsilon > 0.0) {
            return Err(Error::domain(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// `⌈i·T/n⌉` for `i = 1..=n`, deduplicated; the last entry is always `T`.
pub fn checkpoint_times(horizon: u64, count: usize) -> Vec<u64> {
    let n = (count.max(1) as u64).min(horizon);
    let mut times: Vec<u64> = (1..=n)
        .map(|i| ((i as u128 * horizon as u128).div_ceil(n as u128)) as u64)
        .collect();
    times.dedup();
    times
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elimination {
    pub arm: usize,
    pub epoch: u32,
    /// Pulls completed when the arm was removed.
    pub t: u64,
}

/// One Laplace-noised mean released by private successive elimination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyRelease {
    pub epoch: u32,
    pub arm: usize,
    /// Rewards averaged into this mean; its sensitivity is `1/samples`.
    pub samples: u64,
    pub noise_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub means: Vec<f64>,
    pub params: BanditParams,
    pub seed: u64,
    /// `(t, cumulative pseudo-regret)` at each checkpoint.
    pub checkpoints: Vec<(u64, f64)>,
    pub pulls: Vec<u64>,
    pub eliminations: Vec<Elimination>,
    pub survivor: Option<usize>,
    pub releases: Vec<NoisyRelease>,
}

impl RunTrace {
    pub fn final_regret(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.1)
    }

    pub fn optimal_eliminated(&self, optimal: usize) -> bool {
        self.eliminations.iter().any(|e| e.arm == optimal)
    }
}

/// Pull bookkeeping shared by all algorithms.
struct Recorder<'a> {
    env: &'a BanditEnvironment,
    rewards: Vec<NoiseSource>,
    horizon: u64,
    t: u64,
    pulls: Vec<u64>,
    schedule: Vec<u64>,
    next: usize,
    checkpoints: Vec<(u64, f64)>,
}

impl<'a> Recorder<'a> {
    fn new(env: &'a BanditEnvironment, params: &BanditParams, noise: &NoiseSource) -> Self {
        let reward_root = noise.substream(REWARD_STREAM);
        let schedule = checkpoint_times(params.horizon, params.checkpoints);
        Self {
            env,
            rewards: (0..env.arms())
                .map(|a| reward_root.substream(a as u64))
                .collect(),
            horizon: params.horizon,
            t: 0,
            pulls: vec![0; env.arms()],
            checkpoints: Vec::with_capacity(schedule.len()),
            schedule,
            next: 0,
        }
    }

    fn done(&self) -> bool {
        self.t >= self.horizon
    }

    fn regret(&self) -> f64 {
        // Σ pulls·gap, so the trace agrees exactly with the pull counts.
        self.pulls
            .iter()
            .zip(self.env.gaps())
            .map(|(&n, &g)| n as f64 * g)
            .sum()
    }

    fn pull(&mut self, arm: usize) -> f64 {
        debug_assert!(!self.done());
        let reward = self.env.pull(arm, &mut self.rewards[arm]);
        self.t += 1;
        self.pulls[arm] += 1;
        if self.schedule.get(self.next) == Some(&self.t) {
            self.checkpoints.push((self.t, self.regret()));
            self.next += 1;
        }
        reward
    }

    fn finish(
        self,
        algorithm: Algorithm,
        params: &BanditParams,
        noise: &NoiseSource,
        eliminations: Vec<Elimination>,
        survivor: Option<usize>,
        releases: Vec<NoisyRelease>,
    ) -> RunTrace {
        RunTrace {
            algorithm,
            means: self.env.means().to_vec(),
            params: *params,
            seed: noise.seed(),
            checkpoints: self.checkpoints,
            pulls: self.pulls,
            eliminations,
            survivor,
            releases,
        }
    }
}

/// Per-arm pulls in epoch `epoch` with `arms` viable arms.
///
/// `⌈max(32·ln(8se²/β)/Δ², 8·ln(4se²/β)/(εΔ))⌉ + 1` with `Δ = 2^-e`. An
/// infinite `epsilon` drops the privacy branch.
pub fn epoch_length(arms: usize, epoch: u32, beta: f64, epsilon: f64) -> Result<u64> {
    if arms == 0 || epoch == 0 {
        return Err(Error::domain(
            "epoch length needs at least one arm and epoch >= 1",
        ));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("beta must be in (0,1), got {beta}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let delta = epoch_gap(epoch);
    let se2 = arms as f64 * f64::from(epoch).powi(2);
    let hoeffding = 32.0 * (8.0 * se2 / beta).ln() / (delta * delta);
    let privacy = 8.0 * (4.0 * se2 / beta).ln() / (epsilon * delta);
    Ok((hoeffding.max(privacy).ceil() as u64).saturating_add(1))
}

/// `Δ_e = 2^-e`.
pub fn epoch_gap(epoch: u32) -> f64 {
    (-f64::from(epoch)).exp2()
}

/// State of one elimination epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochState {
    /// Viable arms, ascending.
    pub arms: Vec<usize>,
    pub epoch: u32,
    pub delta: f64,
    /// Pulls per viable arm this epoch.
    pub length: u64,
    /// Empirical means, aligned with `arms`.
    pub empirical: Vec<f64>,
    /// Noisy means, aligned with `arms`; filled by [`eliminate`].
    pub noisy: Vec<f64>,
    pub radius: f64,
    pub slack: f64,
    /// `None` for the non-private variant.
    pub epsilon: Option<f64>,
}

impl EpochState {
    pub fn begin(arms: Vec<usize>, epoch: u32, beta: f64, epsilon: Option<f64>) -> Result<Self> {
        let s = arms.len();
        let length = epoch_length(s, epoch, beta, epsilon.unwrap_or(f64::INFINITY))?;
        let se2 = s as f64 * f64::from(epoch).powi(2);
        let r = length as f64;
        let radius = ((8.0 * se2 / beta).ln() / (2.0 * r)).sqrt();
        let slack = match epsilon {
            Some(eps) => (4.0 * se2 / beta).ln() / (r * eps),
            None => 0.0,
        };
        Ok(Self {
            empirical: vec![0.0; s],
            noisy: vec![0.0; s],
            arms,
            epoch,
            delta: epoch_gap(epoch),
            length,
            radius,
            slack,
            epsilon,
        })
    }

    pub fn threshold(&self) -> f64 {
        2.0 * self.radius + 2.0 * self.slack
    }

    /// Laplace scale `1/(ε·R_e)` of each noisy mean, if private.
    pub fn noise_scale(&self) -> Option<f64> {
        self.epsilon.map(|eps| 1.0 / (eps * self.length as f64))
    }
}

/// Noises the epoch means and returns the surviving arms.
///
/// Arm `a` in epoch `e` draws its noise from substream `e / a` of `noise`.
/// Arms with `max noisy - noisy_j > 2h + 2c` are removed; the argmax (ties
/// to the lowest arm) always survives.
pub fn eliminate(state: &mut EpochState, noise: &NoiseSource) -> Result<Vec<usize>> {
    let scale = state.noise_scale().map(LaplaceScale::new).transpose()?;
    let epoch_noise = noise.substream(u64::from(state.epoch));
    for (j, &arm) in state.arms.iter().enumerate() {
        let z = match scale {
            Some(sc) => epoch_noise.substream(arm as u64).laplace(sc),
            None => 0.0,
        };
        state.noisy[j] = state.empirical[j] + z;
    }
    let best = state.noisy[argmax_lowest(&state.noisy)];
    let threshold = state.threshold();
    Ok(state
        .arms
        .iter()
        .zip(&state.noisy)
        .filter(|(_, &m)| !(best - m > threshold))
        .map(|(&a, _)| a)
        .collect())
}

fn successive_elimination(
    algorithm: Algorithm,
    env: &BanditEnvironment,
    params: &BanditParams,
    noise: &NoiseSource,
    epsilon: Option<f64>,
) -> Result<RunTrace> {
    params.validate(env.arms(), epsilon.is_some())?;
    let beta = params.resolved_beta();
    let privacy = noise.substream(PRIVACY_STREAM);
    let mut rec = Recorder::new(env, params, noise);
    let mut viable: Vec<usize> = (0..env.arms()).collect();
    let mut eliminations = Vec::new();
    let mut releases = Vec::new();
    let mut epoch = 0u32;

    'epochs: while viable.len() > 1 {
        epoch += 1;
        let mut state = EpochState::begin(viable.clone(), epoch, beta, epsilon)?;
        let mut sums = vec![0.0; viable.len()];
        for _ in 0..state.length {
            for (j, &arm) in viable.iter().enumerate() {
                if rec.done() {
                    // Partial epoch: the horizon ends before any release.
                    break 'epochs;
                }
                sums[j] += rec.pull(arm);
            }
        }
        let r = state.length as f64;
        for (m, s) in state.empirical.iter_mut().zip(&sums) {
            *m = s / r;
        }
        let survivors = eliminate(&mut state, &privacy)?;
        if let Some(scale) = state.noise_scale() {
            releases.extend(state.arms.iter().map(|&arm| NoisyRelease {
                epoch,
                arm,
                samples: state.length,
                noise_scale: scale,
            }));
        }
        eliminations.extend(
            viable
                .iter()
                .filter(|a| !survivors.contains(a))
                .map(|&arm| Elimination {
                    arm,
                    epoch,
                    t: rec.t,
                }),
        );
        viable = survivors;
    }

    let survivor = (viable.len() == 1).then(|| viable[0]);
    if let Some(arm) = survivor {
        while !rec.done() {
            rec.pull(arm);
        }
    }
    Ok(rec.finish(algorithm, params, noise, eliminations, survivor, releases))
}

/// Private successive elimination with budget `params.epsilon`.
pub fn dp_se_run(
    env: &BanditEnvironment,
    params: &BanditParams,
    noise: &NoiseSource,
) -> Result<RunTrace> {
    successive_elimination(Algorithm::DpSe, env, params, noise, Some(params.epsilon))
}

/// Non-private successive elimination: Hoeffding epoch lengths, no slack, no noise.
pub fn se_run(
    env: &BanditEnvironment,
    params: &BanditParams,
    noise: &NoiseSource,
) -> Result<RunTrace> {
    successive_elimination(Algorithm::Se, env, params, noise, None)
}

/// `μ̄ + sqrt(2·ln t / t_a)`.
pub fn ucb_index(mean: f64, t: u64, pulls: u64) -> Result<f64> {
    if pulls == 0 {
        return Err(Error::State(
            "unpulled arm has no index; it must be forced".into(),
        ));
    }
    if t < pulls {
        return Err(Error::domain(format!(
            "timestep {t} below pull count {pulls}"
        )));
    }
    Ok(ucb_index_unchecked(mean, t, pulls))
}

fn ucb_index_unchecked(mean: f64, t: u64, pulls: u64) -> f64 {
    mean + (2.0 * (t as f64).ln() / pulls as f64).sqrt()
}

/// Envelope of the tree noise in an arm's mean: `(d/(ε·t_a))·d·ln(K·t⁴)`.
///
/// Each of at most `d` covering nodes carries `Lap(d/ε)` noise, which stays
/// below `(d/ε)·ln(K·t⁴)` with probability `1 - 1/(K·t⁴)`.
pub fn dp_ucb_inflation(depth: u32, epsilon: f64, pulls: u64, t: u64, arms: usize) -> f64 {
    let d = f64::from(depth);
    let tf = t as f64;
    (d / (epsilon * pulls as f64)) * d * (arms as f64 * tf.powi(4)).ln()
}

/// DP-UCB: UCB over per-arm tree-mechanism sums, inflated by [`dp_ucb_inflation`].
pub fn dp_ucb_run(
    env: &BanditEnvironment,
    params: &BanditParams,
    noise: &NoiseSource,
) -> Result<RunTrace> {
    dp_ucb_run_with(env, params, noise, true)
}

/// DP-UCB with the inflation term optionally disabled (diagnostics only).
pub fn dp_ucb_run_with(
    env: &BanditEnvironment,
    params: &BanditParams,
    noise: &NoiseSource,
    inflate: bool,
) -> Result<RunTrace> {
    params.validate(env.arms(), true)?;
    let k = env.arms();
    let privacy = noise.substream(PRIVACY_STREAM);
    // Each reward enters exactly one arm's counter, so every counter gets the full budget.
    let mut counters = (0..k)
        .map(|a| TreeCounter::new(params.horizon, params.epsilon, privacy.substream(a as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut rec = Recorder::new(env, params, noise);
    let mut scores = vec![0.0; k];
    while !rec.done() {
        let arm = if (rec.t as usize) < k {
            rec.t as usize
        } else {
            let t = rec.t;
            for (a, c) in counters.iter().enumerate() {
                let n = c.count();
                let mean = c.sum()? / n as f64;
                let gamma = if inflate {
                    dp_ucb_inflation(c.depth(), params.epsilon, n, t, k)
                } else {
                    0.0
                };
                scores[a] = ucb_index_unchecked(mean, t, n) + gamma;
            }
            argmax_lowest(&scores)
        };
        let reward = rec.pull(arm);
        counters[arm].add(reward)?;
    }
    Ok(rec.finish(
        Algorithm::DpUcb,
        params,
        noise,
        Vec::new(),
        None,
        Vec::new(),
    ))
}

/// Standard UCB: one forced pull per arm, then the argmax of [`ucb_index`].
pub fn ucb_run(
    env: &BanditEnvironment,
    params: &BanditParams,
    noise: &NoiseSource,
) -> Result<RunTrace> {
    params.validate(env.arms(), false)?;
    let k = env.arms();
    let mut rec = Recorder::new(env, params, noise);
    let mut sums = vec![0.0; k];
    let mut scores = vec![0.0; k];
    while !rec.done() {
        let arm = if (rec.t as usize) < k {
            rec.t as usize
        } else {
            let t = rec.t;
            for a in 0..k {
                let n = rec.pulls[a];
                scores[a] = ucb_index_unchecked(sums[a] / n as f64, t, n);
            }
            argmax_lowest(&scores)
        };
        sums[arm] += rec.pull(arm);
    }
    Ok(rec.finish(Algorithm::Ucb, params, noise, Vec::new(), None, Vec::new()))
}
