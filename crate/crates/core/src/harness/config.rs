use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bandit::Algorithm;
use crate::env::{RewardModel, Setting};
use crate::error::{Error, Result};

/// Grid description, read from TOML.
///
/// ```toml
/// settings = ["c2"]            # any of c1, c2, c3, c4
/// algorithms = ["dp_se", "dp_ucb"]
/// k = [5]
/// epsilon = [0.25]
/// horizon = 1000000
/// runs = 10
/// base_seed = 0
/// checkpoints = 100
/// out = "results"
/// # beta = 1e-6               # defaults to 1/horizon
/// # rewards = "bernoulli"     # or "deterministic"
/// # zero_noise = false        # debug only: all Laplace draws are 0
/// # threads = 0               # 0 = one per core
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_settings")]
    pub settings: Vec<Setting>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub rewards: RewardModel,
    #[serde(default)]
    pub zero_noise: bool,
    #[serde(default)]
    pub threads: usize,
}

fn default_settings() -> Vec<Setting> {
    vec![Setting::C2]
}
fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::DpSe, Algorithm::DpUcb]
}
fn default_k() -> Vec<usize> {
    vec![5]
}
fn default_epsilon() -> Vec<f64> {
    vec![0.25]
}
fn default_horizon() -> u64 {
    1_000_000
}
fn default_runs() -> usize {
    10
}
fn default_checkpoints() -> usize {
    100
}
fn default_out() -> PathBuf {
    PathBuf::from("results")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            settings: default_settings(),
            algorithms: default_algorithms(),
            k: default_k(),
            epsilon: default_epsilon(),
            horizon: default_horizon(),
            runs: default_runs(),
            base_seed: 0,
            checkpoints: default_checkpoints(),
            out: default_out(),
            beta: None,
            rewards: RewardModel::default(),
            zero_noise: false,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// The long-horizon preset: T = 5·10⁷, 30 runs, every setting and ε.
    pub fn full_scale() -> Self {
        Self {
            settings: Setting::ALL.to_vec(),
            algorithms: default_algorithms(),
            k: vec![5],
            epsilon: vec![0.1, 0.25, 0.5, 1.0],
            horizon: 50_000_000,
            runs: 30,
            out: PathBuf::from("results-full"),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings.is_empty()
            || self.algorithms.is_empty()
            || self.k.is_empty()
            || self.epsilon.is_empty()
        {
            return Err(Error::config(
                "settings, algorithms, k and epsilon must be non-empty",
            ));
        }
        if let Some(&k) = self.k.iter().find(|&&k| k < 2) {
            return Err(Error::config(format!("K must be at least 2, got {k}")));
        }
        if let Some(&k) = self.k.iter().find(|&&k| k as u64 > self.horizon) {
            return Err(Error::config(format!(
                "horizon {} smaller than K={k}",
                self.horizon
            )));
        }
        if let Some(&e) = self.epsilon.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::config(format!(
                "epsilon must be positive and finite, got {e}"
            )));
        }
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if self.checkpoints < 2 {
            return Err(Error::config("checkpoints must be at least 2"));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::config(format!("beta must be in (0,1), got {b}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_desk_defaults() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.horizon, 1_000_000);
        assert_eq!(c.runs, 10);
        assert_eq!(c.checkpoints, 100);
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = ExperimentConfig::full_scale();
        c.beta = Some(1e-3);
        c.zero_noise = true;
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(ExperimentConfig::from_toml_str("settings = [\"c9\"]").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        let bad = [
            ExperimentConfig {
                runs: 0,
                ..Default::default()
            },
            ExperimentConfig {
                checkpoints: 1,
                ..Default::default()
            },
            ExperimentConfig {
                k: vec![1],
                ..Default::default()
            },
            ExperimentConfig {
                horizon: 3,
                ..Default::default()
            },
            ExperimentConfig {
                epsilon: vec![0.0],
                ..Default::default()
            },
            ExperimentConfig {
                algorithms: vec![],
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
    }
}
