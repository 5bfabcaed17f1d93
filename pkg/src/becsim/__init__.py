"""Simulation and analysis toolkit for reliable interactive coding over the
binary erasure channel.

The package has three layers: a round-by-round simulator for the two-bit
relay of alternating two-party protocols (with always-on invariant
monitors, an exhaustive error oracle, and a vectorized Monte-Carlo engine),
the three-state Markov reward chain that describes the relay's progress
(expectation calculators, hitting times, and a concentration-based failure
bound), and evaluators for the resulting capacity lower bounds.
"""

from .bounds import (
    BoundReport,
    best_lb,
    direct_lb,
    repetition_factor,
    repetition_lb_ratio,
    shannon_capacity,
)
from .channel import (
    ChannelParams,
    ReceivedPair,
    RoundPattern,
    enumerate_round_patterns,
    round_erasure_prob,
    transmit,
)
from .protocol import (
    Party,
    PartyInput,
    ProtocolSpec,
    Transcript,
    make_random_spec,
    next_bit,
    random_input,
    reference_transcript,
    spec_from_dict,
    spec_from_json,
    spec_to_dict,
    spec_to_json,
)
from .reward_chain import (
    ChainParams,
    ChainState,
    HittingTimeReport,
    RewardTrace,
    error_upper_bound,
    expected_reward_closed_form,
    expected_reward_dp,
    expected_reward_recurrence,
    hitting_times,
    hitting_times_mc,
    markov_report,
    min_k,
    simulate_chain,
    total_reward_samples,
)
from .simulator import (
    Fixed,
    InvariantSweepReport,
    InvariantViolation,
    ProtoState,
    RoundRecord,
    Sampled,
    SimConfig,
    SimResult,
    chain_state,
    classify_state,
    exact_error_prob,
    mc_failures,
    monte_carlo_error,
    run,
    run_invariant_sweep,
    trace_jsonl,
)

__all__ = [
    "BoundReport",
    "ChainParams",
    "ChainState",
    "ChannelParams",
    "Fixed",
    "HittingTimeReport",
    "InvariantSweepReport",
    "InvariantViolation",
    "Party",
    "PartyInput",
    "ProtoState",
    "ProtocolSpec",
    "ReceivedPair",
    "RewardTrace",
    "RoundPattern",
    "RoundRecord",
    "Sampled",
    "SimConfig",
    "SimResult",
    "Transcript",
    "best_lb",
    "chain_state",
    "classify_state",
    "direct_lb",
    "enumerate_round_patterns",
    "error_upper_bound",
    "exact_error_prob",
    "expected_reward_closed_form",
    "expected_reward_dp",
    "expected_reward_recurrence",
    "hitting_times",
    "hitting_times_mc",
    "make_random_spec",
    "markov_report",
    "mc_failures",
    "min_k",
    "monte_carlo_error",
    "next_bit",
    "random_input",
    "reference_transcript",
    "repetition_factor",
    "repetition_lb_ratio",
    "round_erasure_prob",
    "run",
    "run_invariant_sweep",
    "shannon_capacity",
    "simulate_chain",
    "spec_from_dict",
    "spec_from_json",
    "spec_to_dict",
    "spec_to_json",
    "total_reward_samples",
    "trace_jsonl",
    "transmit",
]
