//! Differentially private stopping rules and stochastic bandits.
//!
//! * [`noise`]: seeded randomness, Laplace primitives, Hoeffding radii.
//! * [`stopping`]: the NAS stopping rule and its sparse-vector private variants.
//! * [`tree`]: the binary counting mechanism for private prefix sums.
//! * [`env`]: Bernoulli bandit instances and pseudo-regret.
//! * [`bandit`]: private successive elimination, DP-UCB and non-private references.
//! * [`harness`]: the experiment grid, CSV/JSON output and ratio reports.
//!
//! ```
//! use dpse_core::bandit::{dp_se_run, BanditParams};
//! use dpse_core::env::{BanditEnvironment, RewardModel, Setting};
//! use dpse_core::noise::NoiseSource;
//!
//! let env = BanditEnvironment::from_setting(Setting::C2, 5, RewardModel::Bernoulli).unwrap();
//! let params = BanditParams::new(100_000, 0.5);
//! let trace = dp_se_run(&env, &params, &NoiseSource::new(7, 0)).unwrap();
//! assert_eq!(trace.pulls.iter().sum::<u64>(), 100_000);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandit;
pub mod env;
pub mod error;
pub mod harness;
pub mod noise;
pub mod selftest;
pub mod stopping;
pub mod tree;

pub use error::{Error, Result};
