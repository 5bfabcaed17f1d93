"""Three-state Markov reward chain for the relay's round-by-round progress.

One chain step is one simulation round; a step is "erased" when at least one
of the round's two bits is erased (probability p).  The reward of a step is
the total growth of the two estimated transcripts in that round:

    SYNCED       both estimates have equal length; a clear round grows both
                 (+2, stay SYNCED), an erased one grows only the sender's
                 (+1, go STALLED).
    STALLED      the party that is behind is about to resend; nothing can
                 grow (+0) and the chain moves to CATCHING_UP.
    CATCHING_UP  the party that is ahead resends; a clear round lets the
                 other catch up (+1, back to SYNCED), an erased one wastes
                 the round (+0, go STALLED).

The chain starts in SYNCED.  Cumulative reward equals the sum of estimate
lengths, so the relay succeeds exactly when the chain collects enough
reward; the calculators below quantify that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .channel import round_erasure_prob


class ChainState(Enum):
    SYNCED = "s1"
    STALLED = "s2"
    CATCHING_UP = "s3"


@dataclass(frozen=True)
class ChainParams:
    """Round-erasure probability p."""

    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p!r}")


@dataclass(frozen=True)
class RewardTrace:
    """A sampled path: states Z_1..Z_{n+1} and the n per-step rewards."""

    states: tuple[ChainState, ...]
    rewards: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.rewards)


def step(state: ChainState, erased: bool) -> tuple[ChainState, int]:
    """One round: the next state and the transcript growth it yields."""
    if state is ChainState.SYNCED:
        return (ChainState.STALLED, 1) if erased else (ChainState.SYNCED, 2)
    if state is ChainState.STALLED:
        return (ChainState.CATCHING_UP, 0)
    return (ChainState.STALLED, 0) if erased else (ChainState.SYNCED, 1)


def simulate_chain(n: int, params: ChainParams, rng) -> RewardTrace:
    """Sample n rounds from SYNCED, drawing erasures independently."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n!r}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    p = params.p
    state = ChainState.SYNCED
    states = [state]
    rewards: list[int] = []
    for _ in range(n):
        state, reward = step(state, bool(rng.random() < p))
        states.append(state)
        rewards.append(reward)
    return RewardTrace(states=tuple(states), rewards=tuple(rewards))


# State encoding used by the vectorized samplers: SYNCED=0, STALLED=1,
# CATCHING_UP=2, indexing these lookup tables.
_NEXT_CLEAR = np.array([0, 2, 0], dtype=np.int8)
_NEXT_ERASED = np.array([1, 2, 1], dtype=np.int8)
_REWARD_CLEAR = np.array([2, 0, 1], dtype=np.int8)
_REWARD_ERASED = np.array([1, 0, 0], dtype=np.int8)


def total_reward_samples(n: int, params: ChainParams, traces: int, seed) -> np.ndarray:
    """Vectorized totals of `traces` independent n-round chains from SYNCED.

    Trace j consumes its own stream spawned from the master seed and
    reproduces simulate_chain run with that stream.
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n!r}")
    if traces < 1:
        raise ValueError(f"traces must be positive, got {traces!r}")
    p = params.p
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(traces)
    totals = np.empty(traces, dtype=np.int64)
    chunk = max(1, int(32_000_000 // max(n, 1)))
    for lo in range(0, traces, chunk):
        group = children[lo : lo + chunk]
        c = len(group)
        erased = np.empty((c, n), dtype=bool)
        for j, ss in enumerate(group):
            erased[j] = np.random.default_rng(ss).random(n) < p
        states = np.zeros(c, dtype=np.int8)
        part = np.zeros(c, dtype=np.int64)
        for i in range(n):
            e = erased[:, i]
            part += np.where(e, _REWARD_ERASED[states], _REWARD_CLEAR[states])
            states = np.where(e, _NEXT_ERASED[states], _NEXT_CLEAR[states])
        totals[lo : lo + c] = part
    return totals


def expected_reward_recurrence_curve(n_max: int, params: ChainParams) -> np.ndarray:
    """f(0..n_max) iterated from the two-step linear recurrence

        f(m+2) = (1-p) f(m+1) + p f(m) + 2(1-p),   f(0) = 0,  f(1) = 2 - p.

    This is the analytical route for the expected total from SYNCED; see
    expected_reward_dp for the exact backward-induction value, which exceeds
    it by a bounded amount from n = 2 on (the seeding at f(0) = 0 is what
    shifts it).  Both are kept on purpose and compared in the tests.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be non-negative, got {n_max!r}")
    p = params.p
    out = np.empty(n_max + 1, dtype=np.float64)
    out[0] = 0.0
    if n_max >= 1:
        out[1] = 2.0 - p
    for m in range(2, n_max + 1):
        out[m] = (1.0 - p) * out[m - 1] + p * out[m - 2] + 2.0 * (1.0 - p)
    return out


def expected_reward_recurrence(n: int, params: ChainParams) -> float:
    """f(n) from the two-step recurrence (see the curve variant)."""
    return float(expected_reward_recurrence_curve(n, params)[n])


def expected_reward_closed_form_curve(n_max: int, params: ChainParams) -> np.ndarray:
    """Closed form of the recurrence route for n = 1..n_max:

        f(n) = [2n (1 - p^2) + p (3 - p) (1 - (-p)^n)] / (1 + p)^2.

    Index 0 is NaN (the closed form is stated for n >= 1).
    """
    if n_max < 1:
        raise ValueError(f"n_max must be at least 1, got {n_max!r}")
    p = params.p
    n = np.arange(0, n_max + 1, dtype=np.int64)
    alt = np.power(-p, n)
    out = (2.0 * n * (1.0 - p * p) + p * (3.0 - p) * (1.0 - alt)) / (1.0 + p) ** 2
    out[0] = np.nan
    return out


def expected_reward_closed_form(n: int, params: ChainParams) -> float:
    """Closed-form expected total for a single n >= 1."""
    if n < 1:
        raise ValueError(f"the closed form is defined for n >= 1, got {n!r}")
    p = params.p
    return (2.0 * n * (1.0 - p * p) + p * (3.0 - p) * (1.0 - (-p) ** n)) / (1.0 + p) ** 2


def expected_reward_dp_curve(n_max: int, params: ChainParams) -> np.ndarray:
    """Exact expected totals from SYNCED for 0..n_max by backward induction.

    g(0, .) = 0 and, stepping one round at a time using only the edge
    probabilities and rewards,

        g(m, SYNCED)      = (2-p) + (1-p) g(m-1, SYNCED) + p g(m-1, STALLED)
        g(m, STALLED)     = g(m-1, CATCHING_UP)
        g(m, CATCHING_UP) = (1-p) + (1-p) g(m-1, SYNCED) + p g(m-1, STALLED)

    The returned array holds g(m, SYNCED).
    """
    if n_max < 0:
        raise ValueError(f"n_max must be non-negative, got {n_max!r}")
    p = params.p
    out = np.empty(n_max + 1, dtype=np.float64)
    g1 = g2 = g3 = 0.0
    out[0] = 0.0
    for m in range(1, n_max + 1):
        g1, g2, g3 = (
            (2.0 - p) + (1.0 - p) * g1 + p * g2,
            g3,
            (1.0 - p) + (1.0 - p) * g1 + p * g2,
        )
        out[m] = g1
    return out


def expected_reward_dp(n: int, params: ChainParams) -> float:
    """Exact expected n-round total from SYNCED (independent oracle)."""
    return float(expected_reward_dp_curve(n, params)[n])


# Consecutive-state pairs (Z_{i+1}, Z_i) that the chain can actually realize:
# exactly the five labelled edges.
SUPPORTED_TRANSITIONS: tuple[tuple[ChainState, ChainState], ...] = (
    (ChainState.SYNCED, ChainState.SYNCED),
    (ChainState.STALLED, ChainState.SYNCED),
    (ChainState.CATCHING_UP, ChainState.STALLED),
    (ChainState.SYNCED, ChainState.CATCHING_UP),
    (ChainState.STALLED, ChainState.CATCHING_UP),
)

# Pair-chain moves, indexed by SUPPORTED_TRANSITIONS position: from (a, b)
# the next pair is (c, a) where c is a one-step move from a.
_PAIR_NEXT_CLEAR = np.array([0, 2, 3, 0, 2], dtype=np.int8)
_PAIR_NEXT_ERASED = np.array([1, 2, 4, 1, 2], dtype=np.int8)


@dataclass(frozen=True)
class HittingTimeReport:
    """Expected hitting indices of the consecutive-pair chain.

    ``expected_hits[(target, start)]`` is the expected first index i >= 2
    with pair_i == target given pair_1 == start, so hitting the start pair
    itself is a return and is at least 2.  ``hit_tr`` is the maximum entry.
    """

    supported_states: tuple[tuple[ChainState, ChainState], ...]
    expected_hits: Mapping[tuple, float]
    hit_tr: float


def _pair_matrix(p: float) -> np.ndarray:
    m = np.zeros((5, 5))
    for i in range(5):
        if i in (1, 4):  # moves out of STALLED are deterministic
            m[i, _PAIR_NEXT_CLEAR[i]] = 1.0
        else:
            m[i, _PAIR_NEXT_CLEAR[i]] += 1.0 - p
            m[i, _PAIR_NEXT_ERASED[i]] += p
    return m


def hitting_times(params: ChainParams) -> HittingTimeReport:
    """Exact expected hitting indices by one linear solve per target pair.

    For a fixed target, first-passage steps m(x) solve m(target) = 0 and
    m(x) = 1 + sum_y P(x, y) m(y) otherwise; the expected hitting index from
    `start` is then 2 + sum_y P(start, y) m(y).  Requires 0 < p < 1, where
    the pair chain is irreducible over its five supported states.
    """
    p = params.p
    if not 0.0 < p < 1.0:
        raise ValueError(
            f"hitting times need 0 < p < 1 (pair chain irreducible), got {p!r}"
        )
    m = _pair_matrix(p)
    hits: dict[tuple, float] = {}
    for t in range(5):
        a = np.eye(5) - m
        a[t, :] = 0.0
        a[t, t] = 1.0
        b = np.ones(5)
        b[t] = 0.0
        steps = np.linalg.solve(a, b)
        expected = 2.0 + m @ steps
        for s in range(5):
            hits[(SUPPORTED_TRANSITIONS[t], SUPPORTED_TRANSITIONS[s])] = float(expected[s])
    return HittingTimeReport(
        supported_states=SUPPORTED_TRANSITIONS,
        expected_hits=hits,
        hit_tr=max(hits.values()),
    )


def hitting_times_mc(params: ChainParams, walks: int, seed) -> dict:
    """Monte-Carlo counterpart of hitting_times: same keys, sample means."""
    p = params.p
    if not 0.0 < p < 1.0:
        raise ValueError(f"hitting-time walks need 0 < p < 1, got {p!r}")
    if walks < 1:
        raise ValueError(f"walks must be positive, got {walks!r}")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = root.spawn(25)
    out: dict[tuple, float] = {}
    k = 0
    for t in range(5):
        for s in range(5):
            rng = np.random.default_rng(streams[k])
            k += 1
            out[(SUPPORTED_TRANSITIONS[t], SUPPORTED_TRANSITIONS[s])] = _mc_expected_hit(
                p, t, s, walks, rng
            )
    return out


def _mc_expected_hit(p: float, target: int, start: int, walks: int, rng) -> float:
    cur = np.full(walks, start, dtype=np.int8)
    times = np.zeros(walks, dtype=np.int64)
    alive = np.arange(walks)
    i = 1
    while alive.size:
        i += 1
        if i > 10_000_000:
            raise RuntimeError("hitting-time walk failed to terminate")
        u = rng.random(alive.size)
        cur = np.where(u < p, _PAIR_NEXT_ERASED[cur], _PAIR_NEXT_CLEAR[cur])
        hit = cur == target
        if hit.any():
            times[alive[hit]] = i
            keep = ~hit
            alive = alive[keep]
            cur = cur[keep]
    return float(times.mean())


def _min_k_from_p(p: float) -> float:
    return 2.0 / (1.0 - p) - 1.0


def min_k(epsilon: float) -> float:
    """Smallest round multiplier above which the failure bound decays:
    2 / (1 - epsilon)**2 - 1."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must be in [0, 1), got {epsilon!r}")
    return 2.0 / (1.0 - epsilon) ** 2 - 1.0


def _failure_bound(n0: int, k: float, p: float, hit_tr: float) -> float:
    if n0 < 1:
        raise ValueError(f"n0 must be a positive integer, got {n0!r}")
    if hit_tr <= 0.0:
        raise ValueError(f"hit_tr must be positive, got {hit_tr!r}")
    if k <= _min_k_from_p(p):
        raise ValueError(
            f"k={k} is at or below the threshold 2/(1-p) - 1 = {_min_k_from_p(p)}; "
            "the expected-growth margin is non-positive there"
        )
    margin = (1.0 - p) / (1.0 + p) - 1.0 / k
    return 2.0 * math.exp(-(2.0 * k * n0 / (hit_tr * hit_tr)) * margin * margin)


def error_upper_bound(n0: int, k: float, epsilon: float, hit_tr: float) -> float:
    """Concentration-based failure bound

        2 exp( -(2 k n0 / hit_tr**2) ((1-p)/(1+p) - 1/k)**2 ),

    with p the round-erasure probability of epsilon.  Requires k above
    min_k(epsilon); below that the bound is vacuous and is refused.
    """
    return _failure_bound(n0, k, round_erasure_prob(epsilon), hit_tr)


def markov_report(p: float, n: int, k: float | None = None, n0: int | None = None) -> dict:
    """JSON-ready report: both expectation routes, the exact value, the
    hitting time, and (when k and n0 are given) the failure bound."""
    params = ChainParams(p)
    rep = hitting_times(params)
    bound = None
    if (k is None) != (n0 is None):
        raise ValueError("k and n0 must be given together")
    if k is not None:
        bound = _failure_bound(n0, k, p, rep.hit_tr)
    return {
        "p": p,
        "n": n,
        "f_recurrence": expected_reward_recurrence(n, params),
        "f_closed_form": expected_reward_closed_form(n, params),
        "f_dp": expected_reward_dp(n, params),
        "hit_tr": rep.hit_tr,
        "error_bound": bound,
    }
