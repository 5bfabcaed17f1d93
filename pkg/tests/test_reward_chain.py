"""Reward chain: edges, expectation routes, hitting times, failure bound."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from becsim.channel import round_erasure_prob
from becsim.reward_chain import (
    SUPPORTED_TRANSITIONS,
    ChainParams,
    ChainState,
    error_upper_bound,
    expected_reward_closed_form,
    expected_reward_closed_form_curve,
    expected_reward_dp,
    expected_reward_dp_curve,
    expected_reward_recurrence,
    expected_reward_recurrence_curve,
    hitting_times,
    hitting_times_mc,
    markov_report,
    min_k,
    simulate_chain,
    step,
    total_reward_samples,
)

S1, S2, S3 = ChainState.SYNCED, ChainState.STALLED, ChainState.CATCHING_UP


def test_step_edges():
    assert step(S1, False) == (S1, 2)
    assert step(S1, True) == (S2, 1)
    assert step(S2, False) == (S3, 0)
    assert step(S2, True) == (S3, 0)
    assert step(S3, False) == (S1, 1)
    assert step(S3, True) == (S2, 0)


def test_simulate_chain_clear_channel():
    trace = simulate_chain(5, ChainParams(0.0), np.random.default_rng(0))
    assert trace.rewards == (2, 2, 2, 2, 2)
    assert trace.total == 10
    assert all(s is S1 for s in trace.states)


def test_simulate_chain_always_erased():
    trace = simulate_chain(5, ChainParams(1.0), np.random.default_rng(0))
    assert [s.value for s in trace.states] == ["s1", "s2", "s3", "s2", "s3", "s2"]
    assert trace.rewards == (1, 0, 0, 0, 0)
    assert trace.total == 1


@settings(max_examples=25, deadline=None)
@given(
    p=st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
    n=st.integers(min_value=0, max_value=60),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_simulate_chain_walks_only_labelled_edges(p, n, seed):
    trace = simulate_chain(n, ChainParams(p), np.random.default_rng(seed))
    assert trace.states[0] is S1
    legal = {
        (S1, S1, 2), (S1, S2, 1), (S2, S3, 0), (S3, S1, 1), (S3, S2, 0),
    }
    for a, b, r in zip(trace.states, trace.states[1:], trace.rewards):
        assert (a, b, r) in legal


def test_recurrence_seed_values():
    for p in (0.1, 0.36, 0.9):
        params = ChainParams(p)
        assert expected_reward_recurrence(0, params) == 0.0
        assert expected_reward_recurrence(1, params) == 2.0 - p
        # one unroll of the recurrence
        assert math.isclose(
            expected_reward_recurrence(2, params), (1 - p) * (4 - p), rel_tol=1e-12
        )


def test_closed_form_matches_recurrence():
    for p in (0.1, 0.36, 0.8):
        params = ChainParams(p)
        rec = expected_reward_recurrence_curve(2000, params)
        closed = expected_reward_closed_form_curve(2000, params)
        for n in range(1, 2001):
            assert abs(rec[n] - closed[n]) <= 1e-9 * abs(closed[n])


def test_closed_form_small_values():
    for p in (0.2, 0.5, 0.7):
        params = ChainParams(p)
        assert math.isclose(expected_reward_closed_form(1, params), 2 - p, rel_tol=1e-14)
        assert math.isclose(
            expected_reward_closed_form(2, params), (1 - p) * (4 - p), rel_tol=1e-12
        )
    assert expected_reward_closed_form(7, ChainParams(0.0)) == 14.0
    with pytest.raises(ValueError):
        expected_reward_closed_form(0, ChainParams(0.5))


def test_dp_small_values():
    for p in (0.25, 0.75):
        assert expected_reward_dp(1, ChainParams(p)) == 2 - p
    assert expected_reward_dp(2, ChainParams(1.0)) == 1.0
    for n in (1, 4, 9):
        assert expected_reward_dp(n, ChainParams(0.0)) == 2.0 * n


def test_dp_matches_two_round_hand_expectation():
    # Enumerating the four 2-round patterns gives E = (2 - p)^2, which the
    # two-step recurrence seeded at zero does not reproduce; the exact and
    # analytical routes intentionally coexist.
    for p in (0.3, 0.6):
        params = ChainParams(p)
        assert math.isclose(expected_reward_dp(2, params), (2 - p) ** 2, rel_tol=1e-12)
        gap = expected_reward_dp(2, params) - expected_reward_closed_form(2, params)
        assert math.isclose(gap, p, rel_tol=1e-9)


def test_dp_closed_form_gap_is_bounded_and_structured():
    # The two routes differ by (p + (-p)^n) / (1 + p), always within [0, 1].
    for p in (0.1, 0.5, 0.9, 1.0):
        params = ChainParams(p)
        dp = expected_reward_dp_curve(300, params)
        closed = expected_reward_closed_form_curve(300, params)
        for n in range(1, 301):
            gap = dp[n] - closed[n]
            assert -1e-9 <= gap <= 1.0 + 1e-9
            assert math.isclose(gap, (p + (-p) ** n) / (1 + p), abs_tol=1e-8)


def test_dp_dominates_linear_floor():
    for p in [i / 10 for i in range(0, 11)]:
        params = ChainParams(p)
        dp = expected_reward_dp_curve(500, params)
        floor = 2.0 * (1 - p) / (1 + p)
        for n in range(1, 501):
            assert dp[n] >= n * floor - 1e-9


def test_chain_sampler_matches_scalar_traces():
    params = ChainParams(0.36)
    totals = total_reward_samples(150, params, 8, seed=714)
    children = np.random.SeedSequence(714).spawn(8)
    for j in range(8):
        trace = simulate_chain(150, params, np.random.default_rng(children[j]))
        assert trace.total == totals[j]


def test_chain_sampler_mean_tracks_dp():
    params = ChainParams(0.36)
    totals = total_reward_samples(200, params, 20_000, seed=515)
    want = expected_reward_dp(200, params)
    assert abs(totals.mean() - want) <= 0.01 * want


def test_hitting_times_finite_positive_and_at_least_two():
    for p in (0.05, 0.36, 0.95):
        rep = hitting_times(ChainParams(p))
        assert set(rep.supported_states) == set(SUPPORTED_TRANSITIONS)
        assert len(rep.expected_hits) == 25
        for value in rep.expected_hits.values():
            assert math.isfinite(value)
            assert value >= 2.0
        assert rep.hit_tr == max(rep.expected_hits.values())


def test_hitting_time_deterministic_reach():
    # From the pair (STALLED, SYNCED) the very next pair is always
    # (CATCHING_UP, STALLED), so the expected hitting index is exactly 2.
    for p in (0.2, 0.7):
        rep = hitting_times(ChainParams(p))
        key = ((S3, S2), (S2, S1))
        assert rep.expected_hits[key] == pytest.approx(2.0, abs=1e-12)


def test_hitting_times_reject_degenerate_p():
    for p in (0.0, 1.0):
        with pytest.raises(ValueError):
            hitting_times(ChainParams(p))
        with pytest.raises(ValueError):
            hitting_times_mc(ChainParams(p), 10, 0)


def test_hitting_times_match_monte_carlo():
    params = ChainParams(0.5)
    exact = hitting_times(params).expected_hits
    sampled = hitting_times_mc(params, walks=20_000, seed=2101)
    assert set(sampled) == set(exact)
    for key, value in exact.items():
        assert abs(sampled[key] - value) <= 0.03 * value


def test_min_k_values():
    assert min_k(0.0) == 1.0
    assert math.isclose(min_k(0.2), 2.125, abs_tol=1e-12)
    assert min_k(0.5) == 7.0
    with pytest.raises(ValueError):
        min_k(1.0)


def test_error_upper_bound_range_and_monotonicity():
    hit = hitting_times(ChainParams(round_erasure_prob(0.2))).hit_tr
    values = [error_upper_bound(n0, 3.0, 0.2, hit) for n0 in (100, 400, 1600)]
    assert all(0.0 < v <= 2.0 for v in values)
    assert values[0] > values[1] > values[2]


def test_error_upper_bound_refuses_small_k():
    hit = hitting_times(ChainParams(round_erasure_prob(0.2))).hit_tr
    with pytest.raises(ValueError, match="threshold"):
        error_upper_bound(100, min_k(0.2), 0.2, hit)


def test_error_upper_bound_formula_value():
    p = round_erasure_prob(0.2)
    hit = hitting_times(ChainParams(p)).hit_tr
    k, n0 = 3.0, 100
    want = 2.0 * math.exp(-(2 * k * n0 / hit**2) * ((1 - p) / (1 + p) - 1 / k) ** 2)
    assert error_upper_bound(n0, k, 0.2, hit) == pytest.approx(want, rel=1e-15)


def test_markov_report_keys():
    report = markov_report(0.36, 200)
    assert list(report) == [
        "p", "n", "f_recurrence", "f_closed_form", "f_dp", "hit_tr", "error_bound",
    ]
    assert report["error_bound"] is None
    with_bound = markov_report(0.36, 300, k=3.0, n0=100)
    assert with_bound["error_bound"] > 0.0
    with pytest.raises(ValueError):
        markov_report(0.36, 300, k=3.0)  # n0 missing


def test_chain_params_validated():
    with pytest.raises(ValueError):
        ChainParams(-0.2)
    with pytest.raises(ValueError):
        ChainParams(1.2)
