use dpse_core::noise::{
    hoeffding_radius, laplace_inverse_cdf, laplace_tail, LaplaceScale, NoiseSource,
};
use dpse_core::selftest;
use proptest::prelude::*;

#[test]
fn million_draw_determinism() {
    let r = selftest::check_determinism(1_000_000);
    assert!(r.passed, "{}", r.detail);
}

#[test]
fn laplace_moments_and_tails() {
    for scale in [0.5, 2.0, 12.0] {
        let m = selftest::check_laplace_moments(1_000_000, scale);
        assert!(m.passed, "scale {scale}: {}", m.detail);
        let t = selftest::check_laplace_tails(1_000_000, scale);
        assert!(t.passed, "scale {scale}: {}", t.detail);
    }
}

#[test]
fn laplace_dp_ratio_bins() {
    for eps in [0.5, 1.0, 2.0] {
        let r = selftest::check_laplace_dp_ratio(1_000_000, eps);
        assert!(r.passed, "{}", r.detail);
    }
}

#[test]
fn fact1_grid() {
    let r = selftest::check_fact1_grid();
    assert!(r.passed, "{}", r.detail);
}

#[test]
fn different_seeds_differ() {
    let mut a = NoiseSource::new(1, 0);
    let mut b = NoiseSource::new(2, 0);
    let same = (0..1000).filter(|_| a.uniform() == b.uniform()).count();
    assert_eq!(same, 0);
}

proptest! {
    #[test]
    fn inverse_cdf_is_odd(u in 1e-9f64..0.5, scale in 1e-3f64..1e3) {
        let s = LaplaceScale::new(scale).unwrap();
        let lo = laplace_inverse_cdf(u, s).unwrap();
        let hi = laplace_inverse_cdf(1.0 - u, s).unwrap();
        prop_assert!((lo + hi).abs() <= 1e-9 * scale.max(lo.abs()));
        prop_assert!(lo <= 0.0);
    }

    #[test]
    fn inverse_cdf_is_monotone(u in 1e-9f64..0.999, d in 1e-6f64..1e-3, scale in 1e-3f64..1e3) {
        let s = LaplaceScale::new(scale).unwrap();
        let v = (u + d).min(1.0 - 1e-12);
        prop_assert!(laplace_inverse_cdf(u, s).unwrap() <= laplace_inverse_cdf(v, s).unwrap());
    }

    #[test]
    fn tail_matches_inverse_cdf(p in 1e-6f64..0.999, scale in 1e-2f64..1e2) {
        // |X| > τ with probability p when τ is the (1 - p/2) quantile.
        let s = LaplaceScale::new(scale).unwrap();
        let tau = laplace_inverse_cdf(1.0 - p / 2.0, s).unwrap();
        prop_assert!((laplace_tail(tau, s).unwrap() - p).abs() <= 1e-9);
    }

    #[test]
    fn hoeffding_scales(t in 1u64..1_000_000, range in 1e-3f64..1e3, delta in 1e-9f64..0.99) {
        let h = hoeffding_radius(t, range, delta).unwrap();
        let h4 = hoeffding_radius(4 * t, range, delta).unwrap();
        prop_assert!((h4 - h / 2.0).abs() <= 1e-12 * h);
        let unit = hoeffding_radius(t, 1.0, delta).unwrap();
        prop_assert!((h - range * unit).abs() <= 1e-12 * h);
    }

    #[test]
    fn uniform_open_and_reproducible(seed: u64, stream: u64) {
        let mut a = NoiseSource::new(seed, stream);
        let mut b = NoiseSource::new(seed, stream);
        for _ in 0..64 {
            let u = a.uniform();
            prop_assert!(u > 0.0 && u < 1.0);
            prop_assert_eq!(u.to_bits(), b.uniform().to_bits());
        }
    }
}
