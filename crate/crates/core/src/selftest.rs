//! Statistical and analytic checks of the noise primitives, runnable from the CLI.

use crate::noise::{fact1_lhs, laplace_tail, LaplaceScale, NoiseSource};
use crate::tree::{covering_nodes, TreeCounter};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

/// Two sources with equal `(seed, stream)` agree on `draws` uniforms.
pub fn check_determinism(draws: usize) -> CheckResult {
    let mut a = NoiseSource::new(0xDEC0DE, 7);
    let mut b = NoiseSource::new(0xDEC0DE, 7);
    let first = (0..draws).position(|_| a.uniform().to_bits() != b.uniform().to_bits());
    CheckResult::new(
        "determinism",
        first.is_none(),
        format!("{draws} draws, first mismatch {first:?}"),
    )
}

/// Sample mean and variance of `Lap(λ)` draws against `0` and `2λ²`.
pub fn check_laplace_moments(draws: usize, scale: f64) -> CheckResult {
    let lambda = LaplaceScale::new(scale).expect("positive scale");
    let mut s = NoiseSource::new(11, 1);
    let xs: Vec<f64> = (0..draws).map(|_| s.laplace(lambda)).collect();
    let n = draws as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let target = lambda.variance();
    let mean_se = (target / n).sqrt();
    let passed = mean.abs() <= 5.0 * mean_se && (var / target - 1.0).abs() <= 0.05;
    CheckResult::new(
        "laplace_moments",
        passed,
        format!("mean {mean:.5} (se {mean_se:.5}), var {var:.4} vs {target:.4}"),
    )
}

/// Empirical `Pr[|X| > τ]` within 4 binomial standard errors of `exp(-τ/λ)`.
pub fn check_laplace_tails(draws: usize, scale: f64) -> CheckResult {
    let lambda = LaplaceScale::new(scale).expect("positive scale");
    let mut s = NoiseSource::new(12, 1);
    let xs: Vec<f64> = (0..draws).map(|_| s.laplace(lambda).abs()).collect();
    let mut worst = 0.0f64;
    for mult in [1.0, 2.0, 4.0] {
        let tau = mult * scale;
        let p = laplace_tail(tau, lambda).expect("valid tail");
        let freq = xs.iter().filter(|&&x| x > tau).count() as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        worst = worst.max((freq - p).abs() / se);
    }
    CheckResult::new(
        "laplace_tails",
        worst <= 4.0,
        format!("worst deviation {worst:.2} SE"),
    )
}

/// Both directions of the log-log fact on the 3×3 `(a, b)` grid.
pub fn check_fact1_grid() -> CheckResult {
    let mut failures = Vec::new();
    for a in [1.5, 2.0, 10.0] {
        for b in [1e-2, 1e-3, 1e-4] {
            let pivot = (a * (1.0f64 / b).ln()).ln() / b;
            let below = fact1_lhs(a, pivot).map(|v| v > b).unwrap_or(false);
            let above = fact1_lhs(a, 2.0 * pivot).map(|v| v < b).unwrap_or(false);
            if !(below && above) {
                failures.push(format!("(a={a}, b={b})"));
            }
        }
    }
    CheckResult::new(
        "fact1_grid",
        failures.is_empty(),
        format!("{} of 9 pairs fail {failures:?}", failures.len()),
    )
}

/// Histogram test of `value + Lap(GS/ε)` on neighbouring inputs `0` and `GS`.
///
/// Every bin's `|ln(p0/p1)|` must be at most `ε + 3·SE`, with the delta-method
/// `SE = sqrt(1/n0 + 1/n1)`.
pub fn check_laplace_dp_ratio(draws: usize, epsilon: f64) -> CheckResult {
    let sensitivity = 1.0;
    let lambda = LaplaceScale::new(sensitivity / epsilon).expect("positive scale");
    let (lo, hi, bins) = (-4.0 / epsilon, 1.0 + 4.0 / epsilon, 20usize);
    let width = (hi - lo) / bins as f64;
    let histogram = |value: f64, stream: u64| {
        let mut s = NoiseSource::new(13, stream);
        let mut h = vec![0u64; bins];
        for _ in 0..draws {
            let x = value + s.laplace(lambda);
            if x >= lo && x < hi {
                h[(((x - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
        h
    };
    let h0 = histogram(0.0, 1);
    let h1 = histogram(sensitivity, 2);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut passed = true;
    for (&a, &b) in h0.iter().zip(&h1) {
        if a == 0 || b == 0 {
            passed = false;
            continue;
        }
        let log_ratio = (a as f64 / b as f64).ln().abs();
        let se = (1.0 / a as f64 + 1.0 / b as f64).sqrt();
        let excess = log_ratio - (epsilon + 3.0 * se);
        worst_excess = worst_excess.max(excess);
        passed &= excess <= 0.0;
    }
    CheckResult::new(
        "laplace_dp_ratio",
        passed,
        format!("eps={epsilon}, worst |log ratio| - (eps + 3 SE) = {worst_excess:.4}"),
    )
}

/// Variance of the tree noise at `t = horizon/2` across seeded counters.
pub fn check_tree_variance(counters: usize, horizon: u64, epsilon: f64) -> CheckResult {
    let t = horizon / 2;
    let mut errs = Vec::with_capacity(counters);
    let mut depth = 0;
    for seed in 0..counters as u64 {
        let mut c = TreeCounter::new(horizon, epsilon, NoiseSource::new(seed, 0x7EE))
            .expect("valid counter");
        depth = c.depth();
        for _ in 0..t {
            c.add(0.5).expect("within horizon");
        }
        errs.push(c.sum().expect("non-empty") - c.raw_sum());
    }
    let nodes = covering_nodes(t, depth).len() as f64;
    let target = nodes * 2.0 * (f64::from(depth) / epsilon).powi(2);
    let n = counters as f64;
    let mean = errs.iter().sum::<f64>() / n;
    let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let ratio = var / target;
    CheckResult::new(
        "tree_variance",
        (0.5..=1.5).contains(&ratio),
        format!("{nodes} covering nodes, variance {var:.2} vs {target:.2} (ratio {ratio:.3})"),
    )
}

/// The full suite behind `dpse selftest`.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        check_determinism(1_000_000),
        check_laplace_moments(1_000_000, 2.0),
        check_laplace_tails(1_000_000, 1.5),
        check_fact1_grid(),
        check_laplace_dp_ratio(1_000_000, 1.0),
        check_tree_variance(2000, 100, 1.0),
    ]
}
