"""Smoke test for the dpse extension module.

Build and install first, for example:

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/dpse-*.whl

then run `python3 python/smoke_test.py`.
"""

import math
import statistics

import dpse


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    assert close(dpse.laplace_inverse_cdf(0.75, 1.0), math.log(2))
    assert close(dpse.laplace_tail(2.0, 2.0), math.exp(-1))
    assert close(dpse.hoeffding_radius(200, 1.0, 0.05), math.sqrt(math.log(40) / 400))
    assert dpse.epoch_length(5, 1, 0.1, 1.0) == 768
    assert close(dpse.ucb_index(0.5, 100, 50), 0.5 + math.sqrt(2 * math.log(100) / 50))
    assert dpse.means("c2", 5) == [0.75, 0.625, 0.5, 0.375, 0.25]
    assert dpse.expected_halt_bound(0.4) == 845017

    xs = dpse.laplace_samples(200_000, 2.0, seed=3)
    assert abs(statistics.fmean(xs)) < 0.05
    assert abs(statistics.pvariance(xs) / 8.0 - 1.0) < 0.05

    out = dpse.stopping_rule_run(0.4, alpha=0.25, beta=0.05, epsilon=1.0, seed=1)
    assert not out.capped and out.halt_time & (out.halt_time - 1) == 0
    assert abs(out.estimate - 0.4) <= 0.1
    ones = dpse.stopping_rule_run(1.0, rule="dp_nas", alpha=1.0, beta=0.1, zero_noise=True)
    assert ones.halt_time == 539

    c = dpse.TreeCounter(8, 1.0, zero_noise=True)
    for _ in range(8):
        c.add(0.5)
    assert c.sum() == 4.0 and len(c) == 8 and c.depth == 3
    try:
        c.add(0.5)
    except RuntimeError:
        pass
    else:
        raise AssertionError("counter accepted a value past its horizon")

    se = dpse.bandit_run("c2", "dp_se", k=5, epsilon=0.5, horizon=100_000, seed=1)
    ucb = dpse.bandit_run("c2", "dp_ucb", k=5, epsilon=0.5, horizon=100_000, seed=1)
    assert sum(se.pulls) == 100_000 and se.survivor == 0
    assert se.checkpoints[-1] == (100_000, se.final_regret)
    assert se.final_regret < ucb.final_regret
    regrets = [r for _, r in se.checkpoints]
    assert regrets == sorted(regrets)

    try:
        dpse.means("c9", 5)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown setting accepted")

    print(f"ok: dp_se regret {se.final_regret:.1f}, dp_ucb regret {ucb.final_regret:.1f}")


if __name__ == "__main__":
    main()
