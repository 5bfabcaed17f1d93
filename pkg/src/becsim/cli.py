"""Command-line harness: Monte-Carlo runs, epsilon sweeps, reward-chain
reports, capacity tables, and randomized invariant verification.

Reports are CSV (default) or JSON, written to --out or stdout; summary lines
go to stderr.  Exit codes: 0 success, 1 acceptance-check failure (bounds
ratio below the floor, or invariant violations in verify mode), 2 usage
error.  Identical arguments and seed produce byte-identical reports; the
SIM_THREADS environment variable caps sweep workers without affecting
output.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal, InvalidOperation

import numpy as np

from . import bounds as capacity
from .channel import ENUMERATION_GUARD, round_erasure_prob
from .protocol import make_random_spec, random_input
from .reward_chain import markov_report
from .simulator import (
    Sampled,
    SimConfig,
    exact_error_prob,
    mc_failures,
    run_invariant_sweep,
)

_SIMULATE_COLUMNS = ["epsilon", "k", "n0", "rounds", "trials", "errors", "p_hat", "ci", "seed"]
_BOUNDS_COLUMNS = ["epsilon", "shannon", "direct_lb", "repetition_lb", "best_lb", "ratio", "rho"]
_VERIFY_COLUMNS = ["trials", "violations", "sim_failures", "passed"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _parse_grid(text: str) -> list[float]:
    try:
        lo_s, hi_s, step_s = text.split(":")
        lo, hi, step = Decimal(lo_s), Decimal(hi_s), Decimal(step_s)
    except (ValueError, InvalidOperation):
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:step, got {text!r}")
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"grid must satisfy lo <= hi and step > 0, got {text!r}")
    values = []
    v = lo
    while v <= hi:
        values.append(float(v))
        v += step
    return values


def _emit(args, columns: list[str], rows: list[dict], config: dict) -> None:
    if args.format == "json":
        text = json.dumps({"config": config, "results": rows}, indent=2) + "\n"
    else:
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_fmt(row.get(col)) for col in columns))
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rounds_from(parser: argparse.ArgumentParser, k: float, n0: int) -> int:
    rounds = round(k * n0)
    if abs(k * n0 - rounds) > 1e-9 or rounds < 1:
        parser.error(f"k * n0 must be a positive integer round count, got {k} * {n0}")
    return rounds


def _instance(seed_source, n0: int):
    """Reproducible random protocol instance plus the trial stream root."""
    root = (
        seed_source
        if isinstance(seed_source, np.random.SeedSequence)
        else np.random.SeedSequence(seed_source)
    )
    ss_spec, ss_inputs, ss_trials = root.spawn(3)
    spec_seed = int(np.random.default_rng(ss_spec).integers(0, 2**63))
    spec = make_random_spec(n0, spec_seed)
    gen = np.random.default_rng(ss_inputs)
    x_a = random_input(n0, gen)
    x_b = random_input(n0, gen)
    return spec, x_a, x_b, ss_trials


def _simulate_point(args, parser, epsilon: float, seed_source):
    rounds = _rounds_from(parser, args.k, args.n0)
    spec, x_a, x_b, ss_trials = _instance(seed_source, args.n0)
    cfg = SimConfig(spec, x_a, x_b, rounds, epsilon, Sampled(ss_trials))
    errors = mc_failures(cfg, args.trials, monitors=not args.no_monitors)
    p_hat = errors / args.trials
    row = {
        "epsilon": epsilon,
        "k": args.k,
        "n0": args.n0,
        "rounds": rounds,
        "trials": args.trials,
        "errors": errors,
        "p_hat": p_hat,
        "ci": 3.0 * math.sqrt(p_hat * (1.0 - p_hat) / args.trials),
        "seed": args.seed,
    }
    if rounds <= ENUMERATION_GUARD:
        row["exact_pe"] = exact_error_prob(spec, x_a, x_b, rounds, epsilon)
    return row


def _cmd_simulate(args, parser) -> int:
    row = _simulate_point(args, parser, args.epsilon, args.seed)
    if "exact_pe" in row:
        print(f"exact_pe {_fmt(row['exact_pe'])}", file=sys.stderr)
    _emit(args, _SIMULATE_COLUMNS, [row], _config_summary("simulate", args))
    return 0


def _cmd_sweep(args, parser) -> int:
    epsilons = args.grid if args.grid else [args.epsilon]
    if epsilons is None or epsilons == [None]:
        parser.error("sweep needs --grid or --epsilon")
    roots = np.random.SeedSequence(args.seed).spawn(len(epsilons))
    workers = max(1, int(os.environ.get("SIM_THREADS", "1") or "1"))

    def point(idx: int) -> dict:
        return _simulate_point(args, parser, epsilons[idx], roots[idx])

    if workers == 1:
        rows = [point(i) for i in range(len(epsilons))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, range(len(epsilons))))
    rows.sort(key=lambda r: r["epsilon"])
    _emit(args, _SIMULATE_COLUMNS, rows, _config_summary("sweep", args))
    return 0


def _cmd_markov(args, parser) -> int:
    p = args.p if args.p is not None else round_erasure_prob(args.epsilon)
    if not 0.0 < p < 1.0:
        parser.error("the chain analysis needs a round-erasure probability strictly inside (0, 1)")
    if (args.k is None) != (args.n0 is None):
        parser.error("--k and --n0 must be given together for the failure bound")
    try:
        report = markov_report(p, args.n, k=args.k, n0=args.n0)
    except ValueError as exc:
        parser.error(str(exc))
    columns = ["p", "n", "f_recurrence", "f_closed_form", "f_dp", "hit_tr", "error_bound"]
    _emit(args, columns, [report], _config_summary("markov", args))
    return 0


def _cmd_bounds(args, parser) -> int:
    epsilons = args.grid if args.grid else ([args.epsilon] if args.epsilon is not None else None)
    if not epsilons:
        parser.error("bounds needs --grid or --epsilon")
    rows = []
    for eps in epsilons:
        try:
            rep = capacity.best_lb(eps, eps_prime=args.eps_prime)
        except ValueError as exc:
            parser.error(str(exc))
        rows.append(
            {
                "epsilon": rep.epsilon,
                "shannon": rep.shannon,
                "direct_lb": rep.direct_lb,
                "repetition_lb": rep.repetition_lb,
                "repetition_lb_relaxed": rep.repetition_lb_relaxed,
                "best_lb": rep.best_lb,
                "ratio": rep.ratio,
                "rho": rep.rho,
                "eps_prime": rep.eps_prime,
            }
        )
    rows.sort(key=lambda r: r["epsilon"])
    min_ratio = min(r["ratio"] for r in rows)
    _emit(args, _BOUNDS_COLUMNS, rows, _config_summary("bounds", args))
    print(f"min ratio {_fmt(min_ratio)} over {len(rows)} epsilon values", file=sys.stderr)
    return 0 if min_ratio >= capacity.RATIO_FLOOR else 1


def _cmd_verify(args, parser) -> int:
    report = run_invariant_sweep(args.trials, args.seed, n0_max=args.n0_max)
    row = {
        "trials": report.trials,
        "violations": report.violations,
        "sim_failures": report.sim_failures,
        "passed": report.passed,
    }
    _emit(args, _VERIFY_COLUMNS, [row], _config_summary("verify", args))
    print(
        f"verify: {report.trials} runs, {report.violations} invariant violations, "
        f"{report.sim_failures} simulation failures",
        file=sys.stderr,
    )
    for msg in report.messages:
        print(f"  violation: {msg}", file=sys.stderr)
    return 0 if report.passed else 1


def _config_summary(mode: str, args) -> dict:
    skip = {"handler", "out", "format"}
    summary = {"mode": mode}
    for key, value in sorted(vars(args).items()):
        if key in skip or callable(value):
            continue
        summary[key] = value
    return summary


def _add_io_flags(sub) -> None:
    sub.add_argument("--out", help="write the report to this file instead of stdout")
    sub.add_argument("--format", choices=("csv", "json"), default="csv", help="report format")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="becsim",
        description="Erasure-channel interactive-coding simulator and bound evaluator",
    )
    subs = parser.add_subparsers(dest="mode", required=True)

    sim = subs.add_parser("simulate", help="Monte-Carlo failure rate for one configuration")
    sim.add_argument("--epsilon", type=float, required=True, help="per-bit erasure probability")
    sim.add_argument("--k", type=float, required=True, help="round multiplier; rounds = k * n0")
    sim.add_argument("--n0", type=int, required=True, help="protocol length")
    sim.add_argument("--trials", type=int, required=True, help="number of Monte-Carlo trials")
    sim.add_argument("--seed", type=int, required=True, help="master seed")
    sim.add_argument(
        "--no-monitors",
        action="store_true",
        help="use the vectorized engine instead of the monitored bit-level runner "
        "(identical results, much faster)",
    )
    _add_io_flags(sim)
    sim.set_defaults(handler=_cmd_simulate)

    sweep = subs.add_parser("sweep", help="simulate over an epsilon grid")
    sweep.add_argument("--grid", type=_parse_grid, help="epsilon grid lo:hi:step")
    sweep.add_argument("--epsilon", type=float, help="single epsilon instead of a grid")
    sweep.add_argument("--k", type=float, required=True)
    sweep.add_argument("--n0", type=int, required=True)
    sweep.add_argument("--trials", type=int, required=True)
    sweep.add_argument("--seed", type=int, required=True)
    sweep.add_argument("--no-monitors", action="store_true")
    _add_io_flags(sweep)
    sweep.set_defaults(handler=_cmd_sweep)

    markov = subs.add_parser("markov", help="reward-chain expectations, hitting time, bound")
    group = markov.add_mutually_exclusive_group(required=True)
    group.add_argument("--p", type=float, help="round-erasure probability")
    group.add_argument("--epsilon", type=float, help="per-bit erasure probability")
    markov.add_argument("--n", type=int, required=True, help="number of chain rounds")
    markov.add_argument("--k", type=float, help="round multiplier for the failure bound")
    markov.add_argument("--n0", type=int, help="protocol length for the failure bound")
    markov.add_argument("--format", choices=("csv", "json"), default="json")
    markov.add_argument("--out")
    markov.set_defaults(handler=_cmd_markov)

    bounds = subs.add_parser("bounds", help="capacity lower-bound table")
    bounds.add_argument("--grid", type=_parse_grid, help="epsilon grid lo:hi:step")
    bounds.add_argument("--epsilon", type=float, help="single epsilon instead of a grid")
    bounds.add_argument(
        "--eps-prime",
        type=float,
        default=capacity.DEFAULT_EPS_PRIME,
        help="repetition-reduction target channel",
    )
    _add_io_flags(bounds)
    bounds.set_defaults(handler=_cmd_bounds)

    verify = subs.add_parser("verify", help="randomized invariant sweep")
    verify.add_argument("--trials", type=int, default=1000)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--n0-max", type=int, default=64, dest="n0_max")
    _add_io_flags(verify)
    verify.set_defaults(handler=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args, parser)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
