"""Binary erasure channel on two-bit (message, parity) transmissions.

Erased positions are received as None; a delivered position always equals
the transmitted bit (the channel never flips).  The exhaustive oracle works
at round granularity: a round counts as erased when at least one of its two
bits is erased, which is the only event the receiving rule reacts to, so
round-level enumeration is exact and halves the enumeration exponent.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

# 2**rounds patterns; past this the exhaustive oracle is not desk-scale.
ENUMERATION_GUARD = 24


@dataclass(frozen=True)
class ChannelParams:
    """Per-bit erasure probability."""

    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon!r}")


@dataclass(frozen=True)
class ReceivedPair:
    """Channel output for one round; None marks an erased position."""

    t: int | None
    p: int | None

    @property
    def has_erasure(self) -> bool:
        return self.t is None or self.p is None


@dataclass(frozen=True)
class RoundPattern:
    """One assignment of per-round erasure flags with its probability weight."""

    erased: tuple[bool, ...]
    weight: float

    def flags(self) -> list[int]:
        """The pattern as a JSON-friendly array of 0/1 flags."""
        return [int(e) for e in self.erased]


def deliver(t: int, p: int, epsilon: float, u_t: float, u_p: float) -> ReceivedPair:
    """Erasure rule applied to pre-drawn uniforms (one per bit)."""
    return ReceivedPair(
        t=None if u_t < epsilon else t,
        p=None if u_p < epsilon else p,
    )


def transmit(t: int, p: int, params: ChannelParams, rng) -> ReceivedPair:
    """Send (t, p); each bit is independently erased with probability epsilon."""
    return deliver(t, p, params.epsilon, rng.random(), rng.random())


def round_erasure_prob(epsilon: float) -> float:
    """Probability 1 - (1 - epsilon)**2 that a two-bit round loses a bit."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon!r}")
    return 1.0 - (1.0 - epsilon) ** 2


def enumerate_round_patterns(rounds: int, p: float) -> Iterator[RoundPattern]:
    """Yield all 2**rounds round-erasure patterns exactly once.

    Weights are p**e * (1-p)**(rounds-e) for e erased rounds and sum to one.
    Refuses round counts above ENUMERATION_GUARD.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be positive, got {rounds!r}")
    if rounds > ENUMERATION_GUARD:
        raise ValueError(
            f"{rounds} rounds would enumerate 2**{rounds} patterns; "
            f"the guard is {ENUMERATION_GUARD}"
        )
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p!r}")
    for flags in itertools.product((False, True), repeat=rounds):
        e = sum(flags)
        yield RoundPattern(erased=flags, weight=(p**e) * ((1.0 - p) ** (rounds - e)))
