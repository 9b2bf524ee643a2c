"""End-to-end acceptance checks, one PASS/FAIL line per criterion.

Each test records its verdict with the ``report`` fixture and then asserts
it, so the terminal summary lists every criterion even when some fail.
"""
import math
import time

import numpy as np
import pytest

from batchbandits import design as dsg
from batchbandits.env import LinearBanditInstance, StochasticMabInstance, make_iid_adversary
from batchbandits.harness import RunConfig, run_experiment
from batchbandits.policy_adversarial import run_batched_adversarial
from batchbandits.policy_linear import run_batched_linear
from batchbandits.policy_mab import run_batched_mab
from batchbandits.regret import batch_random_expected_regret
from batchbandits.rng import make_rng
from conftest import random_unit_vectors

SEED = 2024
MEANS = [0.9, 0.6]


def mab(horizon, batches, reps=500, **kw):
    return run_experiment(RunConfig(kind="mab", horizon=horizon, batches=batches, reps=reps,
                                    seed=SEED, means=MEANS, **kw))


def test_criterion_1_regret_below_bound(report):
    start = time.perf_counter()
    s = mab(5000, 4)
    elapsed = time.perf_counter() - start
    ok = s.mean <= s.bound and elapsed <= 60
    report(1, ok, f"mean regret {s.mean:.1f} <= bound {s.bound:.1f}; runtime {elapsed:.1f}s <= 60s")
    assert ok


def test_criterion_2_deterministic_trace(report):
    inst = StochasticMabInstance([1.0, 0.0])
    res = run_batched_mab(inst, 1000, 3, make_rng(SEED))
    ok = res.trace.final == 110 and res.n_batches == 3 and res.pull_counts.sum() == 1000
    report(2, ok, f"regret {res.trace.final:g} (expect 110), batches {res.n_batches} (expect 3)")
    assert ok


def test_criterion_3_log_batches_suffice(report):
    horizon = 5000
    b_log = math.ceil(math.log2(horizon))
    s_log, s_32, s_full = mab(horizon, b_log), mab(horizon, 32), mab(horizon, horizon)
    ratio_ok = s_log.mean <= 2.5 * s_full.mean
    tol = 2 * max(s_log.ci_halfwidth, s_32.ci_halfwidth)
    close_ok = abs(s_log.mean - s_32.mean) <= tol
    report(3, ratio_ok and close_ok,
           f"B={b_log}: {s_log.mean:.1f}, B=T: {s_full.mean:.1f} (ratio {s_log.mean / s_full.mean:.2f} <= 2.5: "
           f"{ratio_ok}); |B={b_log} - B=32| = {abs(s_log.mean - s_32.mean):.1f} <= {tol:.1f}: {close_ok}")
    assert ratio_ok and close_ok


def test_criterion_4_best_arm_survives(report):
    inst = StochasticMabInstance(MEANS)
    lost = 0
    for rep in range(500):
        res = run_batched_mab(inst, 5000, 4, make_rng(SEED, rep))
        assert res.pull_counts.sum() == 5000 and res.n_batches <= 4
        lost += 0 not in res.final_active
    ok = lost / 500 <= 0.02
    report(4, ok, f"best arm eliminated in {lost}/500 runs (<= 2%)")
    assert ok


def test_criterion_5_design_certificate(report):
    rng = make_rng(SEED, 0, 5)
    worst, slow = 0.0, 0
    for d in (2, 3, 5):
        for k in (10, 100):
            for _ in range(50):
                des = dsg.frank_wolfe_goptimal(random_unit_vectors(rng, k, d))
                worst = max(worst, des.g_value / d)
                slow += not (des.converged and des.iterations <= 100_000)
    basis_err = max(abs(dsg.frank_wolfe_goptimal(np.eye(d)).g_value - d) for d in (2, 3, 5))
    ok = worst <= 1.01 and slow == 0 and basis_err <= 1e-9
    report(5, ok, f"max g/d {worst:.5f} <= 1.01 on 300 instances ({slow} unconverged); "
                  f"basis |g-d| = {basis_err:.1e}")
    assert ok


def test_criterion_6_confidence_width(report):
    rng = make_rng(SEED, 0, 6)
    actions = random_unit_vectors(rng, 10, 2)
    theta = random_unit_vectors(rng, 1, 2)[0] * 0.8
    eps, delta = 0.2, 0.05
    pulls = dsg.round_design(dsg.frank_wolfe_goptimal(actions), eps, delta)
    pulled = actions[pulls.as_sequence()]
    mean_rewards = pulled @ theta
    misses = np.zeros(10)
    reps = 2000
    for _ in range(reps):
        est = dsg.least_squares(pulled, mean_rewards + rng.normal(size=mean_rewards.size))
        misses += np.abs(actions @ (est.theta_hat - theta)) > eps
    worst = misses.max() / reps
    ok = worst <= 0.07
    report(6, ok, f"worst per-arm violation rate {worst:.4f} <= 0.07 (n={pulls.total})")
    assert ok


def linear_instance(seed):
    rng = make_rng(seed, 0)
    actions = random_unit_vectors(rng, 10, 2)
    theta = random_unit_vectors(rng, 1, 2)[0] * rng.uniform(0.5, 1.0)
    return theta, actions


def test_criterion_7_linear_scaling(report):
    theta, actions = linear_instance(0)
    means = {}
    for t in (2000, 8000):
        s = run_experiment(RunConfig(kind="linear", horizon=t, batches=4, reps=200, seed=SEED,
                                     theta=theta.tolist(), actions=actions.tolist()))
        means[t] = s.mean
    ratio = means[8000] / means[2000]
    ratio_ok = 1.6 <= ratio <= 3.0

    inst = LinearBanditInstance(theta, actions, noise="none")
    expected = inst.expected_rewards()
    sets_ok = True
    for t in (2000, 8000):
        res = run_batched_linear(inst, t, 4, make_rng(SEED))
        assert res.actions.size == t and res.n_batches <= 4
        for rec in res.history:
            gap = expected.max() - expected[rec.active_before]
            want = rec.active_before[~(gap > 2 * rec.eps)]
            sets_ok &= np.array_equal(np.sort(rec.survivors), np.sort(want))
    ok = ratio_ok and sets_ok
    report(7, ok, f"regret ratio T=8000/T=2000 {ratio:.2f} in [1.6, 3.0]: {ratio_ok}; "
                  f"noiseless survivor sets exact: {sets_ok}")
    assert ok


def test_criterion_8_batch_random_adversary(report):
    s = run_experiment(RunConfig(kind="adversarial", horizon=1000, batches=4, reps=10_000, seed=SEED,
                                 adversary="batchrandom"))
    exact = batch_random_expected_regret((250,) * 4)
    se = s.std / math.sqrt(s.reps)
    floor = 1000 / (2 * math.sqrt(12))
    small = batch_random_expected_regret((50, 50))
    ok = abs(s.mean - exact) <= 0.03 * exact and s.mean >= floor - 3 * se and small == 25
    report(8, ok, f"mean {s.mean:.2f} vs exact {exact:.2f} (rel err {abs(s.mean - exact) / exact:.4f} <= 0.03); "
                  f">= {floor:.1f} - 3 SE ({3 * se:.2f}); T=100, B=2 exact {small:g}")
    assert ok


def test_criterion_9_switching_adversary(report):
    s = run_experiment(RunConfig(kind="adversarial", horizon=1000, batches=4, reps=10_000, seed=SEED,
                                 adversary="switching"))
    ok = s.mean >= 0.8 * 1000 / 16
    report(9, ok, f"mean regret {s.mean:.1f} >= 50")
    assert ok


def test_criterion_10_adversarial_sublinear(report):
    means = {}
    for t in (1000, 4000):
        b = math.ceil(math.sqrt(t / 2))
        s = run_experiment(RunConfig(kind="adversarial", horizon=t, batches=b, reps=500, seed=SEED,
                                     adversary="iid", means=[0.6, 0.4]))
        means[t] = s.mean
    ratio = means[4000] / means[1000]
    ok = ratio <= 2.5
    report(10, ok, f"regret {means[1000]:.1f} -> {means[4000]:.1f}, ratio {ratio:.2f} <= 2.5")
    assert ok


def test_criterion_11_run_invariants(report):
    """Randomized battery over all three players; the per-module property
    tests cover the rest of the invariants."""
    rng = make_rng(SEED, 0, 11)
    runs = 0
    for _ in range(60):
        t = int(rng.integers(10, 3000))
        b = int(rng.integers(1, 12))
        k = int(rng.integers(2, 6))

        inst = StochasticMabInstance(rng.uniform(size=k))
        res = run_batched_mab(inst, t, b, rng)
        assert res.pull_counts.sum() == t and res.n_batches <= b
        assert np.all(np.diff(res.trace.cumulative) >= 0)
        # eliminated arms are never pulled in the exploitation batch
        assert res.actions[-1] in res.final_active

        theta, actions = rng.normal(size=2), random_unit_vectors(rng, k + 2, 2)
        theta /= 2 * np.linalg.norm(theta)
        lres = run_batched_linear(LinearBanditInstance(theta, actions), t, b, rng)
        assert lres.actions.size == t and lres.n_batches <= b
        sizes = [rec.active_before.size for rec in lres.history] + [1]
        assert all(x >= y for x, y in zip(sizes, sizes[1:]))
        for rec in lres.history:
            assert set(rec.survivors) <= set(rec.active_before)

        table = make_iid_adversary(rng.uniform(size=k), t, rng)
        ares = run_batched_adversarial(table, t, b, rng)
        assert ares.actions.size == t and ares.n_batches <= b
        assert all(abs(p.sum() - 1) < 1e-9 and p.min() >= 0 for p in ares.batch_probabilities)
        runs += 3
    # harness runs in the other criteria check pulls = T and batches <= B and raise otherwise
    report(11, True, f"{runs} randomized runs: pulls = T, batches <= B, monotone active sets, valid distributions")
