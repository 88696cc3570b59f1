//! Stochastic bandit instances and pseudo-regret accounting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSource;

/// The four mean-vector families used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// One best arm at 0.75, all others at 0.7.
    C1,
    /// Linearly spaced from 0.75 down to 0.25.
    C2,
    /// Convex quadratic from 0.75 down to 0.25 (many large gaps).
    C3,
    /// Concave quadratic from 0.75 down to 0.25 (many small gaps).
    C4,
}

impl Setting {
    pub const ALL: [Setting; 4] = [Setting::C1, Setting::C2, Setting::C3, Setting::C4];

    pub fn means(self, k: usize) -> Result<Vec<f64>> {
        match self {
            Setting::C1 => means_c1(k),
            Setting::C2 => means_c2(k),
            Setting::C3 => means_c3(k),
            Setting::C4 => means_c4(k),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::C1 => "c1",
            Setting::C2 => "c2",
            Setting::C3 => "c3",
            Setting::C4 => "c4",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c1" => Ok(Setting::C1),
            "c2" => Ok(Setting::C2),
            "c3" => Ok(Setting::C3),
            "c4" => Ok(Setting::C4),
            other => Err(Error::config(format!(
                "unknown setting {other:?} (expected c1..c4)"
            ))),
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::domain(format!("need at least 2 arms, got {k}")));
    }
    Ok(())
}

pub fn means_c1(k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    Ok(std::iter::once(0.75)
        .chain(std::iter::repeat_n(0.7, k - 1))
        .collect())
}

pub fn means_c2(k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    let last = (k - 1) as f64;
    Ok((0..k).map(|i| 0.75 - 0.5 * i as f64 / last).collect())
}

pub fn means_c3(k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    let last = (k - 1) as f64;
    let a = 0.5 / (last * last);
    // μ_i = a(i - K)² + 0.25 with 1-based i; here i is 0-based.
    Ok((0..k)
        .map(|i| a * (i as f64 - last).powi(2) + 0.25)
        .collect())
}

pub fn means_c4(k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    let last = (k - 1) as f64;
    let a = -0.5 / (last * last);
    Ok((0..k).map(|i| a * (i as f64).powi(2) + 0.75).collect())
}

/// How a pull turns an arm mean into a reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardModel {
    /// Reward in {0, 1} with `Pr[1] = μ`.
    #[default]
    Bernoulli,
    /// Reward is exactly `μ`; consumes no randomness.
    Deterministic,
}

impl FromStr for RewardModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bernoulli" => Ok(RewardModel::Bernoulli),
            "deterministic" => Ok(RewardModel::Deterministic),
            other => Err(Error::config(format!("unknown reward model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditEnvironment {
    means: Vec<f64>,
    gaps: Vec<f64>,
    optimal: usize,
    rewards: RewardModel,
}

impl BanditEnvironment {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        Self::with_rewards(means, RewardModel::Bernoulli)
    }

    pub fn with_rewards(means: Vec<f64>, rewards: RewardModel) -> Result<Self> {
        check_k(means.len())?;
        if let Some(bad) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(Error::domain(format!("arm mean {bad} outside [0,1]")));
        }
        let optimal = argmax_lowest(&means);
        let best = means[optimal];
        let gaps = means.iter().map(|m| best - m).collect();
        Ok(Self {
            means,
            gaps,
            optimal,
            rewards,
        })
    }

    pub fn from_setting(setting: Setting, k: usize, rewards: RewardModel) -> Result<Self> {
        Self::with_rewards(setting.means(k)?, rewards)
    }

    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn optimal(&self) -> usize {
        self.optimal
    }

    pub fn reward_model(&self) -> RewardModel {
        self.rewards
    }

    /// Draws one reward of `arm` from the caller's per-arm source.
    pub fn pull(&self, arm: usize, noise: &mut NoiseSource) -> f64 {
        let mu = self.means[arm];
        match self.rewards {
            RewardModel::Deterministic => mu,
            RewardModel::Bernoulli => {
                if noise.bernoulli(mu) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Pseudo-regret of one pull: the arm's gap.
    pub fn regret_increment(&self, arm: usize) -> f64 {
        self.gaps[arm]
    }
}

/// Index of the largest value, ties to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn c1_means() {
        close(&means_c1(5).unwrap(), &[0.75, 0.7, 0.7, 0.7, 0.7]);
        close(&means_c1(2).unwrap(), &[0.75, 0.7]);
        let env = BanditEnvironment::new(means_c1(7).unwrap()).unwrap();
        for a in 1..7 {
            assert!((env.gaps()[a] - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn c2_means() {
        close(&means_c2(5).unwrap(), &[0.75, 0.625, 0.5, 0.375, 0.25]);
        close(&means_c2(2).unwrap(), &[0.75, 0.25]);
        close(&means_c2(3).unwrap(), &[0.75, 0.5, 0.25]);
    }

    #[test]
    fn c3_means() {
        close(
            &means_c3(5).unwrap(),
            &[0.75, 0.53125, 0.375, 0.28125, 0.25],
        );
        close(&means_c3(2).unwrap(), &[0.75, 0.25]);
    }

    #[test]
    fn c4_means() {
        close(
            &means_c4(5).unwrap(),
            &[0.75, 0.71875, 0.625, 0.46875, 0.25],
        );
        close(&means_c4(2).unwrap(), &[0.75, 0.25]);
        close(&means_c4(3).unwrap(), &[0.75, 0.625, 0.25]);
    }

    #[test]
    fn endpoints_for_all_families() {
        for k in 2..40 {
            for s in Setting::ALL {
                let m = s.means(k).unwrap();
                assert_eq!(m[0], 0.75);
                if s != Setting::C1 {
                    assert!((m[k - 1] - 0.25).abs() < 1e-12, "{s} K={k}");
                }
            }
        }
    }

    #[test]
    fn convex_and_concave_spacing() {
        for k in [3, 5, 10, 20] {
            let g2 = BanditEnvironment::new(means_c2(k).unwrap()).unwrap();
            let g3 = BanditEnvironment::new(means_c3(k).unwrap()).unwrap();
            let g4 = BanditEnvironment::new(means_c4(k).unwrap()).unwrap();
            for a in 1..k - 1 {
                assert!(g3.gaps()[a] >= g2.gaps()[a], "K={k} a={a}");
                assert!(g4.gaps()[a] <= g2.gaps()[a], "K={k} a={a}");
            }
        }
    }

    #[test]
    fn too_few_arms() {
        for s in Setting::ALL {
            assert!(s.means(1).is_err());
        }
        assert!(BanditEnvironment::new(vec![0.5]).is_err());
        assert!(BanditEnvironment::new(vec![0.5, 1.5]).is_err());
    }

    #[test]
    fn degenerate_bernoulli() {
        let env = BanditEnvironment::new(vec![1.0, 0.0]).unwrap();
        let mut n = NoiseSource::new(5, 0);
        for _ in 0..1000 {
            assert_eq!(env.pull(0, &mut n), 1.0);
            assert_eq!(env.pull(1, &mut n), 0.0);
        }
    }

    #[test]
    fn bernoulli_mean_within_four_se() {
        let env = BanditEnvironment::new(vec![0.75, 0.1]).unwrap();
        let mut n = NoiseSource::new(11, 4);
        let draws = 100_000;
        let hits: f64 = (0..draws).map(|_| env.pull(0, &mut n)).sum();
        let se = (0.75f64 * 0.25 / draws as f64).sqrt();
        assert!((hits / draws as f64 - 0.75).abs() < 4.0 * se);
    }

    #[test]
    fn regret_increments() {
        let env = BanditEnvironment::new(means_c2(5).unwrap()).unwrap();
        assert_eq!(env.regret_increment(0), 0.0);
        assert!((env.regret_increment(2) - 0.25).abs() < 1e-12);
        let env = BanditEnvironment::new(means_c1(4).unwrap()).unwrap();
        assert!((env.regret_increment(3) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn optimal_ties_to_lowest() {
        let env = BanditEnvironment::new(vec![0.3, 0.8, 0.8]).unwrap();
        assert_eq!(env.optimal(), 1);
        assert_eq!(env.gaps()[2], 0.0);
    }

    #[test]
    fn setting_parse() {
        assert_eq!("C3".parse::<Setting>().unwrap(), Setting::C3);
        assert!("c5".parse::<Setting>().is_err());
    }
}
