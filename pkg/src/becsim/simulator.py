"""Round-by-round execution of the two-bit erasure-coping relay.

Each round one party sends a (message bit, parity bit) pair over the erasure
channel while the other listens.  The sender appends a fresh protocol bit
and flips its parity whenever its own estimate says it is that party's turn
in the underlying protocol; otherwise it resends its last pair unchanged.
The receiver appends the message bit only when both bits arrive and the
parity matches its acceptance rule (Alice wants the complement of her
parity, Bob wants his parity).  Rounds alternate: Alice sends on odd
indices, Bob on even ones.  Initial parities are 0 for Alice and 1 for Bob,
and a party whose estimate already reached the protocol length keeps the
state machine running by sending zero bits.

The monitors check, at every round, the structural facts the analysis
rests on: estimate lengths never differ by more than one, unequal lengths
are (odd, even), equal lengths fix the round parity, each parity bit is a
function of the estimate length mod 4, every appended bit extends the
reference transcript (zeros past the end), every observed transition matches
the six-state table and projects onto a legal reward-chain edge, and the
final verdict coincides with the total-growth criterion.  A monitor failure
is an implementation bug, never channel bad luck, so it raises.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .channel import (
    ChannelParams,
    ReceivedPair,
    deliver,
    enumerate_round_patterns,
    round_erasure_prob,
)
from .protocol import Party, PartyInput, ProtocolSpec, Transcript, reference_transcript
from .reward_chain import ChainState, step as chain_step


class InvariantViolation(RuntimeError):
    """A runtime monitor caught a state the protocol analysis forbids."""


class ProtoState(Enum):
    """Joint classification of (estimate-length relation, round parity)."""

    EQUAL_EVEN = "I"
    EQUAL_ODD = "II"
    A_AHEAD_ODD = "III"
    A_AHEAD_EVEN = "IV"
    B_AHEAD_ODD = "V"
    B_AHEAD_EVEN = "VI"


def classify_state(len_a: int, len_b: int, i: int) -> ProtoState:
    """The unique protocol state for estimate lengths (len_a, len_b) at the
    beginning of round i."""
    odd = i % 2 == 1
    if len_a == len_b:
        return ProtoState.EQUAL_ODD if odd else ProtoState.EQUAL_EVEN
    if len_a == len_b + 1:
        return ProtoState.A_AHEAD_ODD if odd else ProtoState.A_AHEAD_EVEN
    if len_b == len_a + 1:
        return ProtoState.B_AHEAD_ODD if odd else ProtoState.B_AHEAD_EVEN
    raise InvariantViolation(
        f"estimate lengths ({len_a}, {len_b}) differ by more than 1 at round {i}"
    )


_CHAIN_OF = {
    ProtoState.EQUAL_EVEN: ChainState.SYNCED,
    ProtoState.EQUAL_ODD: ChainState.SYNCED,
    ProtoState.A_AHEAD_EVEN: ChainState.STALLED,
    ProtoState.B_AHEAD_ODD: ChainState.STALLED,
    ProtoState.A_AHEAD_ODD: ChainState.CATCHING_UP,
    ProtoState.B_AHEAD_EVEN: ChainState.CATCHING_UP,
}


def chain_state(state: ProtoState) -> ChainState:
    """Project a protocol state onto the three-state reward chain."""
    return _CHAIN_OF[state]


# (state at round start, round erased) -> (state at next round start, reward).
_TRANSITIONS = {
    (ProtoState.EQUAL_ODD, False): (ProtoState.EQUAL_EVEN, 2),
    (ProtoState.EQUAL_ODD, True): (ProtoState.A_AHEAD_EVEN, 1),
    (ProtoState.EQUAL_EVEN, False): (ProtoState.EQUAL_ODD, 2),
    (ProtoState.EQUAL_EVEN, True): (ProtoState.B_AHEAD_ODD, 1),
    (ProtoState.A_AHEAD_EVEN, False): (ProtoState.A_AHEAD_ODD, 0),
    (ProtoState.A_AHEAD_EVEN, True): (ProtoState.A_AHEAD_ODD, 0),
    (ProtoState.B_AHEAD_ODD, False): (ProtoState.B_AHEAD_EVEN, 0),
    (ProtoState.B_AHEAD_ODD, True): (ProtoState.B_AHEAD_EVEN, 0),
    (ProtoState.A_AHEAD_ODD, False): (ProtoState.EQUAL_EVEN, 1),
    (ProtoState.A_AHEAD_ODD, True): (ProtoState.A_AHEAD_EVEN, 0),
    (ProtoState.B_AHEAD_EVEN, False): (ProtoState.EQUAL_ODD, 1),
    (ProtoState.B_AHEAD_EVEN, True): (ProtoState.B_AHEAD_ODD, 0),
}


@dataclass(frozen=True)
class Sampled:
    """Channel noise drawn from a seeded stream (one stream per run)."""

    seed: int | np.random.SeedSequence


@dataclass(frozen=True)
class Fixed:
    """Predetermined round-erasure flags, one per round."""

    pattern: tuple[bool, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pattern", tuple(bool(x) for x in self.pattern))


@dataclass(frozen=True)
class SimConfig:
    """Everything one run needs; `rounds` is the full round count k * n0."""

    spec: ProtocolSpec
    x_a: PartyInput
    x_b: PartyInput
    rounds: int
    epsilon: float
    noise: Sampled | Fixed

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError(f"rounds must be positive, got {self.rounds!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon!r}")
        if isinstance(self.noise, Fixed) and len(self.noise.pattern) != self.rounds:
            raise ValueError(
                f"fixed pattern length {len(self.noise.pattern)} != rounds {self.rounds}"
            )


@dataclass(frozen=True)
class RoundRecord:
    """Trace of one round.

    Lengths are captured before and after the round; `proto_state` and
    `chain` classify the round's starting boundary, so consecutive records
    walk the reward chain edge by edge.
    """

    i: int
    sender: str
    fresh: bool
    erased: bool
    len_a_before: int
    len_a_after: int
    len_b_before: int
    len_b_after: int
    proto_state: ProtoState
    chain: ChainState
    reward: int

    def trace_entry(self) -> dict:
        """Wire form used by the JSON-lines trace dump (post-round lengths)."""
        return {
            "i": self.i,
            "sender": self.sender,
            "fresh": self.fresh,
            "erased": self.erased,
            "lenA": self.len_a_after,
            "lenB": self.len_b_after,
            "state": self.proto_state.value,
            "chain": self.chain.value,
            "reward": self.reward,
        }


@dataclass(frozen=True)
class SimResult:
    """Outcome of one run: truncated outputs, verdict, total growth, trace."""

    out_a: Transcript
    out_b: Transcript
    success: bool
    total_reward: int
    trace: tuple[RoundRecord, ...]


def _check_boundary(i: int, len_a: int, len_b: int, p_a: int, p_b: int) -> None:
    gap = len_a - len_b
    if gap > 1 or gap < -1:
        raise InvariantViolation(
            f"length gap |{len_a} - {len_b}| exceeds 1 at boundary {i}"
        )
    if gap != 0:
        if len_a % 2 != 1 or len_b % 2 != 0:
            raise InvariantViolation(
                f"unequal lengths must be (odd, even), got ({len_a}, {len_b}) "
                f"at boundary {i}"
            )
    elif (len_a % 2 == 0) != (i % 2 == 1):
        raise InvariantViolation(
            f"equal length {len_a} clashes with the parity of round {i}"
        )
    if p_a != (1 if len_a % 4 in (1, 2) else 0):
        raise InvariantViolation(
            f"Alice's parity {p_a} is off the length relation at boundary {i} "
            f"(length {len_a})"
        )
    if p_b != (1 if len_b % 4 in (0, 1) else 0):
        raise InvariantViolation(
            f"Bob's parity {p_b} is off the length relation at boundary {i} "
            f"(length {len_b})"
        )


def _check_bit(ch: str, pos: int, ref: str, n0: int, side: str) -> None:
    want = ref[pos] if pos < n0 else "0"
    if ch != want:
        raise InvariantViolation(
            f"{side} appended {ch!r} at position {pos}, expected {want!r} "
            "(prefix property)"
        )


def _check_transition(
    i: int, before: ProtoState, erased: bool, after: ProtoState, reward: int
) -> None:
    want = _TRANSITIONS[(before, erased)]
    if (after, reward) != want:
        raise InvariantViolation(
            f"round {i}: {before.value} with erased={erased} moved to "
            f"({after.value}, +{reward}), expected ({want[0].value}, +{want[1]})"
        )
    cs_before = chain_state(before)
    if i == 1 and cs_before is not ChainState.SYNCED:
        raise InvariantViolation(f"chain must start SYNCED, got {cs_before.value}")
    want_chain = chain_step(cs_before, erased)
    if want_chain != (chain_state(after), reward):
        raise InvariantViolation(
            f"round {i}: observed chain move {cs_before.value}->"
            f"{chain_state(after).value} (+{reward}) is not the labelled edge"
        )


def run(config: SimConfig, monitors: bool = True, record_trace: bool = True) -> SimResult:
    """Execute one full run and return outputs, verdict and trace.

    With `monitors` on (the default, and always on in the test suite) every
    boundary, appended bit and transition is checked; breaches raise
    InvariantViolation.  `record_trace=False` skips RoundRecord
    construction for throughput.
    """
    spec, rounds = config.spec, config.rounds
    n0 = spec.n0
    x_a, x_b = config.x_a, config.x_b
    fixed = isinstance(config.noise, Fixed)
    if fixed:
        pattern = config.noise.pattern
        uniforms = None
    else:
        rng = np.random.default_rng(config.noise.seed)
        uniforms = rng.random((rounds, 2))
    epsilon = config.epsilon
    ref = reference_transcript(spec, x_a, x_b).bits

    est_a: list[str] = []
    est_b: list[str] = []
    p_a, p_b = 0, 1
    # Stored pairs carry the current parity; Alice's placeholder is never
    # sent (round 1 is always fresh for her), Bob's covers a round-2 resend
    # after a round-1 erasure.
    msg_a = ("0", p_a)
    msg_b = ("0", p_b)
    records: list[RoundRecord] = []

    for i in range(1, rounds + 1):
        len_a0, len_b0 = len(est_a), len(est_b)
        if monitors:
            _check_boundary(i, len_a0, len_b0, p_a, p_b)
        before = classify_state(len_a0, len_b0, i)

        if i % 2 == 1:  # Alice sends, Bob listens
            sender = "A"
            fresh = len_a0 % 2 == 0
            if fresh:
                bit = spec.bit_at(Party.A, x_a, "".join(est_a)) if len_a0 < n0 else 0
                p_a ^= 1
                ch = "1" if bit else "0"
                if monitors:
                    _check_bit(ch, len_a0, ref, n0, "Alice")
                est_a.append(ch)
                msg_a = (ch, p_a)
            t_ch, p_sent = msg_a
        else:  # Bob sends, Alice listens
            sender = "B"
            fresh = len_b0 % 2 == 1
            if fresh:
                bit = spec.bit_at(Party.B, x_b, "".join(est_b)) if len_b0 < n0 else 0
                p_b ^= 1
                ch = "1" if bit else "0"
                if monitors:
                    _check_bit(ch, len_b0, ref, n0, "Bob")
                est_b.append(ch)
                msg_b = (ch, p_b)
            t_ch, p_sent = msg_b

        if fixed:
            erased = pattern[i - 1]
            received = (
                ReceivedPair(None, None)
                if erased
                else ReceivedPair(int(t_ch), p_sent)
            )
        else:
            u_t, u_p = uniforms[i - 1]
            received = deliver(int(t_ch), p_sent, epsilon, u_t, u_p)
            erased = received.has_erasure

        if not erased:
            if i % 2 == 1:
                if received.p == p_b:
                    ch = "1" if received.t else "0"
                    if monitors:
                        _check_bit(ch, len(est_b), ref, n0, "Bob")
                    est_b.append(ch)
            else:
                if received.p == 1 - p_a:
                    ch = "1" if received.t else "0"
                    if monitors:
                        _check_bit(ch, len(est_a), ref, n0, "Alice")
                    est_a.append(ch)

        len_a1, len_b1 = len(est_a), len(est_b)
        reward = (len_a1 + len_b1) - (len_a0 + len_b0)
        if monitors:
            after = classify_state(len_a1, len_b1, i + 1)
            _check_transition(i, before, erased, after, reward)
        if record_trace:
            records.append(
                RoundRecord(
                    i=i,
                    sender=sender,
                    fresh=fresh,
                    erased=bool(erased),
                    len_a_before=len_a0,
                    len_a_after=len_a1,
                    len_b_before=len_b0,
                    len_b_after=len_b1,
                    proto_state=before,
                    chain=chain_state(before),
                    reward=reward,
                )
            )

    len_a, len_b = len(est_a), len(est_b)
    if monitors:
        _check_boundary(rounds + 1, len_a, len_b, p_a, p_b)
    out_a = Transcript("".join(est_a[:n0]))
    out_b = Transcript("".join(est_b[:n0]))
    success = out_a.bits == ref and out_b.bits == ref
    total = len_a + len_b
    if monitors and success != (total >= 2 * n0):
        raise InvariantViolation(
            f"verdict {success} disagrees with total growth {total} vs {2 * n0}"
        )
    return SimResult(
        out_a=out_a,
        out_b=out_b,
        success=success,
        total_reward=total,
        trace=tuple(records),
    )


def trace_jsonl(source: SimResult | Iterable[RoundRecord]) -> str:
    """The run trace as JSON lines, one round per line."""
    records = source.trace if isinstance(source, SimResult) else source
    return "\n".join(json.dumps(r.trace_entry()) for r in records)


def exact_error_prob(
    spec: ProtocolSpec,
    x_a: PartyInput,
    x_b: PartyInput,
    rounds: int,
    epsilon: float,
) -> float:
    """Failure probability by exhaustive round-pattern enumeration.

    Exact up to float summation; refuses round counts above the
    enumeration guard.
    """
    p = round_erasure_prob(epsilon)
    failed: list[float] = []
    for pat in enumerate_round_patterns(rounds, p):
        cfg = SimConfig(spec, x_a, x_b, rounds, epsilon, Fixed(pat.erased))
        if not run(cfg, monitors=True, record_trace=False).success:
            failed.append(pat.weight)
    return math.fsum(failed)


def trial_streams(seed, trials: int) -> list:
    """Independent per-trial seed sequences derived from a master seed."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(trials)


def mc_failures(config: SimConfig, trials: int, monitors: bool = False) -> int:
    """Number of failing runs over `trials` independently seeded trials.

    monitors=True drives every trial through the bit-level checked runner;
    monitors=False uses the vectorized engine.  Both consume identical
    per-trial streams and count identical failures (the accept decisions
    depend only on lengths and parities, never on bit values; the test
    suite pins the two paths against each other).
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials!r}")
    if not isinstance(config.noise, Sampled):
        raise ValueError("Monte-Carlo estimation needs Sampled noise")
    streams = trial_streams(config.noise.seed, trials)
    if monitors:
        bad = 0
        for ss in streams:
            res = run(replace(config, noise=Sampled(ss)), monitors=True, record_trace=False)
            bad += not res.success
        return bad
    return _batch_failures(config.spec.n0, config.rounds, config.epsilon, streams)


def _batch_failures(
    n0: int, rounds: int, epsilon: float, streams: Sequence, chunk_rows: int = 4096
) -> int:
    """Vectorized length/parity dynamics across trials; counts failures."""
    failures = 0
    for lo in range(0, len(streams), chunk_rows):
        group = streams[lo : lo + chunk_rows]
        c = len(group)
        flags = np.empty((c, rounds), dtype=bool)
        for j, ss in enumerate(group):
            u = np.random.default_rng(ss).random((rounds, 2))
            np.logical_or(u[:, 0] < epsilon, u[:, 1] < epsilon, out=flags[j])
        len_a = np.zeros(c, dtype=np.int64)
        len_b = np.zeros(c, dtype=np.int64)
        p_a = np.zeros(c, dtype=bool)
        p_b = np.ones(c, dtype=bool)
        for i in range(1, rounds + 1):
            e = flags[:, i - 1]
            if i % 2 == 1:
                fresh = (len_a % 2) == 0
                p_a ^= fresh
                len_a += fresh
                len_b += (~e) & (p_a == p_b)  # Bob accepts a matching parity
            else:
                fresh = (len_b % 2) == 1
                p_b ^= fresh
                len_b += fresh
                len_a += (~e) & (p_a != p_b)  # Alice accepts the complement
        failures += int(np.count_nonzero((len_a < n0) | (len_b < n0)))
    return failures


def monte_carlo_error(
    config: SimConfig, trials: int, monitors: bool = False
) -> tuple[float, float]:
    """Failure fraction and a 3-sigma binomial half-width over seeded trials."""
    bad = mc_failures(config, trials, monitors=monitors)
    est = bad / trials
    return est, 3.0 * math.sqrt(est * (1.0 - est) / trials)


@dataclass(frozen=True)
class InvariantSweepReport:
    """Outcome of a randomized monitored sweep."""

    trials: int
    violations: int
    sim_failures: int
    messages: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return self.violations == 0


def run_invariant_sweep(
    trials: int,
    seed: int,
    n0_max: int = 64,
    k_choices: Sequence[int] = (2, 3, 4, 5, 6),
) -> InvariantSweepReport:
    """Monitored runs over random protocols, inputs, sizes and noise levels.

    Counts monitor violations (must be zero) and ordinary simulation
    failures (expected at high noise).  Fully reproducible from the seed.
    """
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials!r}")
    master = np.random.SeedSequence(seed)
    ss_pick, ss_trials = master.spawn(2)
    pick = np.random.default_rng(ss_pick)
    streams = ss_trials.spawn(trials)
    violations = 0
    sim_failures = 0
    messages: list[str] = []
    for t in range(trials):
        n0 = int(pick.integers(1, n0_max + 1))
        k = int(pick.choice(k_choices))
        epsilon = float(pick.random())
        spec = ProtocolSpec.from_prf(n0, int(pick.integers(0, 2**63)))
        x_a = _random_input(n0, pick)
        x_b = _random_input(n0, pick)
        cfg = SimConfig(spec, x_a, x_b, k * n0, epsilon, Sampled(streams[t]))
        try:
            res = run(cfg, monitors=True, record_trace=False)
        except InvariantViolation as exc:
            violations += 1
            if len(messages) < 5:
                messages.append(str(exc))
        else:
            sim_failures += not res.success
    return InvariantSweepReport(
        trials=trials,
        violations=violations,
        sim_failures=sim_failures,
        messages=tuple(messages),
    )


def _random_input(n_bits: int, rng) -> PartyInput:
    return PartyInput("".join("1" if b else "0" for b in rng.integers(0, 2, size=n_bits)))
