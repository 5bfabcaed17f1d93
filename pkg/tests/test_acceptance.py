"""End-to-end acceptance checks.

Each test covers one acceptance criterion at its stated tolerance and
prints one PASS/FAIL line (run with ``pytest -s`` to see them live).
"""

import math
import time
from fractions import Fraction

import numpy as np

from becsim.bounds import best_lb, direct_lb
from becsim.channel import round_erasure_prob
from becsim.protocol import PartyInput, make_random_spec, random_input, reference_transcript
from becsim.reward_chain import (
    ChainParams,
    error_upper_bound,
    expected_reward_closed_form,
    expected_reward_closed_form_curve,
    expected_reward_dp,
    expected_reward_dp_curve,
    expected_reward_recurrence_curve,
    hitting_times,
    hitting_times_mc,
    total_reward_samples,
)
from becsim.simulator import (
    Sampled,
    SimConfig,
    exact_error_prob,
    monte_carlo_error,
    run,
    run_invariant_sweep,
)


def _report(name, ok, note=""):
    status = "PASS" if ok else "FAIL"
    suffix = f"  ({note})" if note else ""
    print(f"[acceptance] {name}: {status}{suffix}")


def test_criterion_1_noiseless_correctness():
    ok = False
    try:
        t0 = time.perf_counter()
        rng = np.random.default_rng(20250810)
        streams = np.random.SeedSequence(1).spawn(1000)
        for t in range(1000):
            n0 = int(rng.integers(1, 65))
            spec = make_random_spec(n0, int(rng.integers(0, 2**63)))
            x_a = random_input(n0, rng)
            x_b = random_input(n0, rng)
            ref = reference_transcript(spec, x_a, x_b)
            res = run(
                SimConfig(spec, x_a, x_b, 2 * n0, 0.0, Sampled(streams[t])),
                record_trace=False,
            )
            assert res.success
            assert res.out_a == ref == res.out_b
        elapsed = time.perf_counter() - t0
        assert elapsed < 1.0, f"took {elapsed:.2f}s"
        ok = True
        note = f"1000 runs in {elapsed:.2f}s"
    finally:
        _report("1 noiseless correctness", ok, note if ok else "")


def test_criterion_2_exact_oracle_agreement():
    ok = False
    try:
        t0 = time.perf_counter()
        spec = make_random_spec(2, 2024)
        x_a, x_b = PartyInput("10"), PartyInput("01")
        trials = 100_000
        for eps, seed in ((0.1, 101), (0.5, 102)):
            exact = exact_error_prob(spec, x_a, x_b, 6, eps)
            cfg = SimConfig(spec, x_a, x_b, 6, eps, Sampled(seed))
            est, _ = monte_carlo_error(cfg, trials)
            sigma = math.sqrt(exact * (1.0 - exact) / trials)
            assert abs(est - exact) <= 3.0 * sigma, (eps, est, exact)
        one = make_random_spec(1, 7)
        y_a, y_b = PartyInput("1"), PartyInput("0")
        for eps in (0.1, 0.5):
            exact = exact_error_prob(one, y_a, y_b, 2, eps)
            assert abs(exact - round_erasure_prob(eps)) <= 1e-12
        elapsed = time.perf_counter() - t0
        assert elapsed < 10.0, f"took {elapsed:.2f}s"
        ok = True
        note = f"in {elapsed:.2f}s"
    finally:
        _report("2 exact-oracle agreement", ok, note if ok else "")


def test_criterion_3_invariant_suite():
    ok = False
    try:
        t0 = time.perf_counter()
        report = run_invariant_sweep(trials=10_000, seed=20240821, n0_max=64)
        assert report.violations == 0, report.messages
        elapsed = time.perf_counter() - t0
        assert elapsed < 30.0, f"took {elapsed:.2f}s"
        ok = True
        note = (
            f"{report.trials} runs, {report.sim_failures} honest failures, "
            f"0 violations in {elapsed:.1f}s"
        )
    finally:
        _report("3 invariant suite", ok, note if ok else "")


def test_criterion_4_recurrence_vs_closed_form():
    ok = False
    try:
        for p10 in range(1, 10):
            p = p10 / 10
            params = ChainParams(p)
            rec = expected_reward_recurrence_curve(10_000, params)
            closed = expected_reward_closed_form_curve(10_000, params)
            diff = np.abs(rec[1:] - closed[1:])
            assert np.all(diff <= 1e-9 * np.abs(closed[1:])), p
            # closed form at n=1 equals 2 - p exactly: bit-for-bit in exact
            # rational arithmetic, and to one ulp in floats.
            q = Fraction(p)
            exact = (2 * 1 * (1 - q * q) + q * (3 - q) * (1 - (-q))) / (1 + q) ** 2
            assert exact == 2 - q
            f = expected_reward_closed_form(1, params)
            assert abs(f - (2.0 - p)) <= math.ulp(2.0 - p)
        ok = True
    finally:
        _report("4 recurrence vs closed form", ok, "n <= 1e4, 9 p values" if ok else "")


def test_criterion_5_chain_expectation():
    ok = False
    try:
        params = ChainParams(0.36)
        totals = total_reward_samples(200, params, 100_000, seed=424242)
        want = expected_reward_dp(200, params)
        assert abs(totals.mean() - want) <= 0.01 * want

        gaps = []
        for p10 in range(0, 11):
            p = p10 / 10
            grid_params = ChainParams(p)
            dp = expected_reward_dp_curve(10_000, grid_params)
            n = np.arange(0, 10_001)
            floor = 2.0 * (1.0 - p) / (1.0 + p)
            assert np.all(dp[1:] >= floor * n[1:] - 1e-9), p
            if p10 >= 1:
                closed = expected_reward_closed_form_curve(10_000, grid_params)
                gap = dp[1:] - closed[1:]
                assert np.all(np.abs(gap) <= 1.0 + 1e-9), p
                gaps.append((p, float(np.max(np.abs(gap)))))
            if 1 <= p10 <= 9:
                slope = dp[10_000] / 10_000
                assert abs(slope - floor) <= 1e-3, p
        gap_note = ", ".join(f"p={p}: {g:.4f}" for p, g in gaps)
        ok = True
        note = f"max |dp - closed| per p: {gap_note}"
    finally:
        _report("5 chain expectation", ok, note if ok else "")


def test_criterion_6_error_regime():
    ok = False
    try:
        t0 = time.perf_counter()
        eps, k = 0.2, 3.0
        hit = hitting_times(ChainParams(round_erasure_prob(eps))).hit_tr
        estimates = []
        for n0, seed in ((100, 61), (400, 62), (1600, 63)):
            spec = make_random_spec(n0, 1000 + n0)
            rng = np.random.default_rng(n0)
            cfg = SimConfig(
                spec,
                random_input(n0, rng),
                random_input(n0, rng),
                int(k * n0),
                eps,
                Sampled(seed),
            )
            est, _ = monte_carlo_error(cfg, 10_000)
            bound = error_upper_bound(n0, k, eps, hit)
            assert bound >= est, (n0, bound, est)
            estimates.append(est)
        assert estimates[0] >= estimates[1] >= estimates[2]
        assert estimates[2] < 0.01
        elapsed = time.perf_counter() - t0
        assert elapsed < 120.0, f"took {elapsed:.2f}s"
        ok = True
        note = f"P_e = {estimates}, {elapsed:.1f}s"
    finally:
        _report("6 failure-bound regime", ok, note if ok else "")


def test_criterion_7_hitting_times():
    ok = False
    try:
        for p, seed in ((0.1, 71), (0.5, 72), (0.9, 73)):
            params = ChainParams(p)
            exact = hitting_times(params)
            assert all(math.isfinite(v) for v in exact.expected_hits.values())
            sampled = hitting_times_mc(params, walks=100_000, seed=seed)
            for key, value in exact.expected_hits.items():
                assert abs(sampled[key] - value) <= 0.02 * value, (p, key)
        ok = True
    finally:
        _report("7 hitting times", ok, "3 p values, 25 pairs each" if ok else "")


def test_criterion_8_capacity_constants():
    ok = False
    try:
        t0 = time.perf_counter()
        assert direct_lb(0.0) == 0.5
        assert 0.3766 <= direct_lb(0.073) <= 0.3768
        crossover = 0.61484
        min_ratio = math.inf
        for i in range(1, 1000):
            eps = i / 1000
            rep = best_lb(eps)
            min_ratio = min(min_ratio, rep.ratio)
            direct_ratio = rep.direct_lb / rep.shannon
            if eps < crossover:
                assert direct_ratio >= 0.104, eps
            else:
                assert direct_ratio < 0.104, eps
        assert min_ratio >= 0.104
        elapsed = time.perf_counter() - t0
        assert elapsed < 1.0, f"took {elapsed:.2f}s"
        ok = True
        note = f"min ratio {min_ratio:.6f} over 999 points in {elapsed:.2f}s"
    finally:
        _report("8 capacity constants", ok, note if ok else "")
