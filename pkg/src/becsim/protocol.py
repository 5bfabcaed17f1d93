"""Noiseless alternating two-party protocols and their reference transcripts.

A protocol prescribes, for every partial transcript, the next bit the
speaking party sends.  The speaking order is fixed: Alice owns even-length
prefixes (odd rounds), Bob owns odd-length prefixes (even rounds).

Two backings are supported.  An explicit prefix table serves hand-crafted
unit cases; a keyed pseudorandom function gives reproducible "generic"
protocols of any size without 2**n0 storage.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping


class Party(Enum):
    """One of the two endpoints. Alice speaks first."""

    A = "A"
    B = "B"

    def other(self) -> "Party":
        return Party.B if self is Party.A else Party.A


def speaking_party(prefix_length: int) -> Party:
    """Who sends the next bit once `prefix_length` bits have been exchanged."""
    return Party.A if prefix_length % 2 == 0 else Party.B


def _require_bits(text: str, what: str) -> None:
    if not set(text) <= {"0", "1"}:
        raise ValueError(f"{what} must be a string of 0/1 characters, got {text!r}")


@dataclass(frozen=True)
class PartyInput:
    """A party's private input: an opaque finite bit string."""

    value: str = ""

    def __post_init__(self) -> None:
        _require_bits(self.value, "party input")


@dataclass(frozen=True)
class Transcript:
    """A sequence of exchanged bits, in transmission order."""

    bits: str = ""

    def __post_init__(self) -> None:
        _require_bits(self.bits, "transcript")

    @property
    def length(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class ProtocolSpec:
    """A deterministic next-bit rule together with its total length n0.

    ``kind`` selects the backing: "table" looks raw prefix strings up in
    ``entries`` (ignoring party inputs; a table is an already-instantiated
    protocol), while "prf" derives each bit from (seed, party, input,
    prefix) with a keyed hash.  Instances are immutable after construction
    and safe to share across any number of workers.
    """

    n0: int
    kind: str
    seed: int | None = None
    entries: Mapping[str, int] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.n0, int) or self.n0 < 1:
            raise ValueError(f"n0 must be a positive integer, got {self.n0!r}")
        if self.kind == "prf":
            if self.seed is None:
                raise ValueError("a prf-backed spec needs a seed")
        elif self.kind == "table":
            if self.entries is None:
                raise ValueError("a table-backed spec needs entries")
            for prefix, bit in self.entries.items():
                _require_bits(prefix, "table prefix")
                if len(prefix) >= self.n0:
                    raise ValueError(
                        f"table prefix {prefix!r} is not shorter than n0={self.n0}"
                    )
                if bit not in (0, 1):
                    raise ValueError(f"table bit for prefix {prefix!r} must be 0 or 1")
        else:
            raise ValueError(f"unknown spec kind {self.kind!r}")

    @classmethod
    def from_prf(cls, n0: int, seed: int) -> "ProtocolSpec":
        return cls(n0=n0, kind="prf", seed=int(seed))

    @classmethod
    def from_table(
        cls, n0: int, entries: Mapping[str, int] | Iterable[tuple[str, int]]
    ) -> "ProtocolSpec":
        return cls(n0=n0, kind="table", entries=dict(entries))

    def bit_at(self, party: Party, inp: PartyInput, prefix: str) -> int:
        """Next-bit rule on a raw prefix string; no precondition checks.

        Hot path for the simulator; use :func:`next_bit` for the checked
        public entry point.
        """
        if self.kind == "table":
            try:
                return self.entries[prefix]
            except KeyError:
                raise ValueError(f"table spec has no entry for prefix {prefix!r}") from None
        payload = f"{self.seed}:{party.value}:{inp.value}:{prefix}".encode()
        return hashlib.blake2b(payload, digest_size=1).digest()[0] & 1


def next_bit(spec: ProtocolSpec, party: Party, inp: PartyInput, prefix: Transcript) -> int:
    """The bit `party` sends after `prefix` under protocol `spec`.

    Pure: identical arguments always yield the identical bit.  The prefix
    must be shorter than ``spec.n0`` and its length parity must match the
    speaking party (even for Alice, odd for Bob); padding past n0 is the
    simulator's job, never the protocol's.
    """
    length = len(prefix.bits)
    if length >= spec.n0:
        raise ValueError(f"prefix length {length} is out of range for n0={spec.n0}")
    if speaking_party(length) is not party:
        raise ValueError(
            f"party {party.value} does not speak after {length} exchanged bits"
        )
    return spec.bit_at(party, inp, prefix.bits)


def reference_transcript(spec: ProtocolSpec, x_a: PartyInput, x_b: PartyInput) -> Transcript:
    """The noiseless transcript: exactly n0 bits, Alice on odd positions."""
    bits: list[str] = []
    for r in range(spec.n0):
        party = speaking_party(r)
        inp = x_a if party is Party.A else x_b
        bit = next_bit(spec, party, inp, Transcript("".join(bits)))
        bits.append("1" if bit else "0")
    return Transcript("".join(bits))


def make_random_spec(n0: int, seed: int) -> ProtocolSpec:
    """A reproducible PRF-backed protocol; (n0, seed) fully determine it."""
    if n0 < 1:
        raise ValueError(f"n0 must be a positive integer, got {n0!r}")
    return ProtocolSpec.from_prf(n0, seed)


def random_input(n_bits: int, rng) -> PartyInput:
    """A uniform random input of `n_bits` bits drawn from a numpy Generator."""
    if n_bits == 0:
        return PartyInput("")
    draw = rng.integers(0, 2, size=n_bits)
    return PartyInput("".join("1" if b else "0" for b in draw))


def spec_to_dict(spec: ProtocolSpec) -> dict:
    """JSON-ready form: {"n0", "kind", "seed"} or {"n0", "kind", "entries"}."""
    if spec.kind == "prf":
        return {"n0": spec.n0, "kind": "prf", "seed": spec.seed}
    ordered = sorted(spec.entries.items(), key=lambda kv: (len(kv[0]), kv[0]))
    return {"n0": spec.n0, "kind": "table", "entries": [[k, v] for k, v in ordered]}


def spec_from_dict(obj: Mapping) -> ProtocolSpec:
    kind = obj.get("kind")
    if kind == "prf":
        return ProtocolSpec.from_prf(int(obj["n0"]), int(obj["seed"]))
    if kind == "table":
        return ProtocolSpec.from_table(
            int(obj["n0"]), {k: int(v) for k, v in obj["entries"]}
        )
    raise ValueError(f"unknown spec kind {kind!r}")


def spec_to_json(spec: ProtocolSpec) -> str:
    return json.dumps(spec_to_dict(spec), sort_keys=True)


def spec_from_json(text: str) -> ProtocolSpec:
    return spec_from_dict(json.loads(text))
