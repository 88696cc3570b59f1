//! Seeded randomness, Laplace primitives and concentration radii.
//!
//! Every random draw in the crate goes through [`NoiseSource`]. A source is
//! identified by a `(seed, stream_id)` pair and backed by ChaCha12, whose
//! 64-bit stream parameter gives 2^64 independent keystreams per seed.
//! Substreams are derived by mixing a child id into the parent stream id, so
//! one run seed fans out into independent draws for rewards, thresholds,
//! query noise and so on.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Human-readable PRNG identifier, echoed into experiment metadata.
pub const PRNG_NAME: &str = "ChaCha12 (rand_chacha 0.9), stream-per-substream";

/// Scale `λ` of a centred Laplace distribution, `pdf(x) ∝ exp(-|x|/λ)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub fn new(scale: f64) -> Result<Self> {
        if scale.is_finite() && scale > 0.0 {
            Ok(Self(scale))
        } else {
            Err(Error::domain(format!(
                "Laplace scale must be positive and finite, got {scale}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Variance `2λ²`.
    pub fn variance(self) -> f64 {
        2.0 * self.0 * self.0
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Seeded(Box<ChaCha12Rng>),
    Zero,
}

/// Provider of uniform, Bernoulli and Laplace draws.
///
/// The zero variant is a deterministic stand-in for tests: every Laplace
/// draw is exactly `0` and every uniform draw is exactly `0.5`.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    stream_id: u64,
    backend: Backend,
}

impl NoiseSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            backend: Backend::Seeded(Box::new(rng)),
        }
    }

    pub fn zero() -> Self {
        Self {
            seed: 0,
            stream_id: 0,
            backend: Backend::Zero,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.backend, Backend::Zero)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Fresh source on an independent stream derived from this one and `child`.
    ///
    /// Derivation depends only on `(seed, stream_id, child)`, never on how
    /// many draws the parent has already produced.
    pub fn substream(&self, child: u64) -> NoiseSource {
        match self.backend {
            Backend::Zero => NoiseSource::zero(),
            Backend::Seeded(_) => {
                let id = splitmix64(self.stream_id ^ splitmix64(child.wrapping_add(0x5bd1_e995)));
                NoiseSource::new(self.seed, id)
            }
        }
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        match &mut self.backend {
            Backend::Zero => 0.5,
            Backend::Seeded(rng) => {
                // 53 random bits centred in their cell: never 0, never 1.
                let bits = rng.next_u64() >> 11;
                (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn laplace(&mut self, scale: LaplaceScale) -> f64 {
        match self.backend {
            Backend::Zero => 0.0,
            Backend::Seeded(_) => {
                let u = self.uniform();
                laplace_inverse_cdf_unchecked(u, scale.get())
            }
        }
    }
}

/// SplitMix64 finaliser, used for stream and seed derivation.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn laplace_inverse_cdf_unchecked(u: f64, scale: f64) -> f64 {
    let centred = u - 0.5;
    if centred == 0.0 {
        return 0.0;
    }
    -scale * centred.signum() * (1.0 - 2.0 * centred.abs()).ln()
}

/// Inverse CDF of `Lap(λ)`: `-λ·sign(u-½)·ln(1 - 2|u-½|)`.
pub fn laplace_inverse_cdf(u: f64, scale: LaplaceScale) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!(
            "inverse CDF needs u in (0,1), got {u}"
        )));
    }
    Ok(laplace_inverse_cdf_unchecked(u, scale.get()))
}

/// `Pr[|X| > τ] = exp(-τ/λ)` for `X ~ Lap(λ)`.
pub fn laplace_tail(tau: f64, scale: LaplaceScale) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::domain(format!(
            "tail threshold must be nonnegative, got {tau}"
        )));
    }
    Ok((-tau / scale.get()).exp())
}

/// Two-sided Hoeffding radius: `Pr[|mean_t - μ| ≥ h] ≤ δ` for `h = R·sqrt(ln(2/δ)/(2t))`.
pub fn hoeffding_radius(t: u64, range: f64, delta: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::domain("Hoeffding radius needs at least one sample"));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::domain(format!(
            "range must be positive, got {range}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!(
            "confidence delta must be in (0,1), got {delta}"
        )));
    }
    Ok(range * ((2.0 / delta).ln() / (2.0 * t as f64)).sqrt())
}

/// `ln(a·ln x)/x`, the left-hand side of the log-log crossing fact.
///
/// For `a > 1` and `0 < b < 1/16` the value exceeds `b` for
/// `e < x < ln(a·ln(1/b))/b` and falls below `b` for `x > 2·ln(a·ln(1/b))/b`.
pub fn fact1_lhs(a: f64, x: f64) -> Result<f64> {
    if !(a > 1.0) {
        return Err(Error::domain(format!("need a > 1, got {a}")));
    }
    if !(x > std::f64::consts::E) {
        return Err(Error::domain(format!("need x > e, got {x}")));
    }
    Ok((a * x.ln()).ln() / x)
}
