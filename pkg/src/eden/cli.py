"""Command-line entry point: ``eden <subcommand> [flags]``.

Every subcommand writes one JSON document to standard output or ``--out``.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
import time
import warnings
from pathlib import Path

from . import vrf
from .errors import ConfigError, EdenError
from .fountain import FAMILIES, CodecConfig, decode, encode_symbols
from .params import (
    TWO_THIRDS,
    SecurityModel,
    feasibility,
    tail_report,
    theta_max_honest,
    theta_min_adversary,
    tau_min,
)
from .simnet.config import STRATEGIES
from .sortition import SortitionParams, compute_votes, expected_votes, to_fraction

CODEC_FRACTIONS = (0.8, 0.9, 1.0, 1.1)
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_params(args, parser) -> int:
    if to_fraction(args.h) <= TWO_THIRDS or to_fraction(args.h) > 1:
        parser.error(f"--h must lie in (2/3, 1], got {args.h}")
    if not 0 < to_fraction(args.alpha) <= 1:
        parser.error(f"--alpha must lie in (0, 1], got {args.alpha}")
    tau = args.tau if args.tau is not None else 5000
    model = SecurityModel(args.h, args.alpha, tau, args.theta, args.K)
    lo, hi = theta_min_adversary(model), theta_max_honest(model)
    doc = {
        "h": args.h,
        "alpha": args.alpha,
        "tau": tau,
        "K": args.K,
        "tau_min": tau_min(args.h, args.alpha),
        "theta_interval": [lo, hi],
    }
    if args.theta is None:
        ok = lo < hi and tau >= doc["tau_min"]
    else:
        result = feasibility(model)
        doc["theta"] = args.theta
        doc["feasibility"] = result.to_dict()
        doc["tail"] = tail_report(model).to_dict()
        ok = result.feasible
    doc["feasible"] = ok
    _emit(doc, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(args, parser) -> int:
    from .simnet import bundled_scenario, load_config, run

    config = load_config(args.config or bundled_scenario())
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.strategy is not None:
        changes["adversary_strategy"] = args.strategy
    if args.messages is not None:
        changes["n_messages"] = args.messages
    if changes:
        config = config.replace(**changes)
    if args.workers < 1:
        parser.error("--workers must be at least 1")
    report = run(config, workers=args.workers)
    text = report.to_json() + "\n"
    agg = report.aggregates
    summary = json.dumps({
        "honest_commit_rate": agg["honest_commit_rate"],
        "forged_commits": agg["forged_commits"],
        "mean_commit_latency": agg["mean_commit_latency"],
        "passed": report.passed,
    }, sort_keys=True)
    if args.out is None or args.out == "-":
        # keep stdout a single JSON document
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    else:
        Path(args.out).write_text(text)
        print(summary)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK if report.passed else EXIT_FAIL


def codec_rates(
    tau: int, theta: float, source_k: int | None, epsilon: float, trials: int,
    family: str = "gf256", seed: int = 0, message_size: int | None = None,
) -> dict:
    """Decode success rate from n random distinct symbols, n at fractions of the threshold."""
    threshold = max(1, math.ceil(to_fraction(theta) * tau))
    if source_k is None:
        source_k = math.floor(threshold / (1 + to_fraction(epsilon)))
    size = message_size or source_k * 8
    config = CodecConfig.for_threshold(tau, threshold, size, epsilon, source_k, family)
    rng = random.Random(f"eden/codec-check/{seed}")
    rates = {}
    for frac in CODEC_FRACTIONS:
        n = min(tau, math.ceil(frac * threshold))
        ok = 0
        for _ in range(trials):
            msg = rng.randbytes(size)
            ids = sorted(rng.sample(range(tau), n))
            ok += decode(encode_symbols(msg, config, ids), config, len(msg)) == msg
        rates[f"{frac:.1f}"] = {"symbols": n, "successes": ok, "rate": ok / trials}
    return {
        "tau": tau, "theta": theta, "threshold": threshold, "source_k": config.source_k,
        "symbol_size": config.symbol_size, "overhead_epsilon": epsilon, "family": family,
        "trials": trials, "rates": rates,
    }


def cmd_codec_check(args, parser) -> int:
    if args.trials < 1:
        parser.error("--trials must be at least 1")
    doc = codec_rates(args.tau, args.theta, args.k, args.epsilon, args.trials, args.family, args.seed)
    _emit(doc, args.out)
    return EXIT_OK if doc["rates"]["1.0"]["rate"] >= 0.99 else EXIT_FAIL


def cmd_sortition_bench(args, parser) -> int:
    if args.draws < 1:
        parser.error("--draws must be at least 1")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        params = SortitionParams(args.tau, args.theta, args.K)
    rng = random.Random(f"eden/sortition-bench/{args.seed}")
    xs = [rng.getrandbits(256) for _ in range(args.draws)]
    start = time.perf_counter()
    votes = [compute_votes(x, args.stake, params) for x in xs]
    elapsed = time.perf_counter() - start
    mean = sum(votes) / len(votes)
    var = sum((v - mean) ** 2 for v in votes) / len(votes)
    p = params.p
    doc = {
        "stake": args.stake, "tau": args.tau, "K": args.K, "draws": args.draws, "seed": args.seed,
        "mean": mean, "variance": var,
        "expected_mean": float(expected_votes(args.stake, params)),
        "expected_variance": float(args.stake * p * (1 - p)),
        "microseconds_per_draw": 1e6 * elapsed / args.draws,
        "draws_per_second": args.draws / elapsed if elapsed > 0 else None,
    }
    _emit(doc, args.out)
    return EXIT_OK


def cmd_keygen(args, parser) -> int:
    seed = None
    if args.seed is not None:
        try:
            seed = bytes.fromhex(args.seed)
        except ValueError:
            parser.error("--seed must be hex")
    keys = vrf.keygen(seed)
    _emit({"secret_key": keys.secret_key.hex(), "public_key": keys.public_key.hex()}, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eden", description="Stake-weighted cross-chain message relay toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="security analysis of (h, alpha, tau, theta)")
    p.add_argument("--h", type=float, required=True, help="honest fraction of stake")
    p.add_argument("--alpha", type=float, required=True, help="online fraction of stake")
    p.add_argument("--tau", type=int, help="expected votes per message (default 5000)")
    p.add_argument("--theta", type=float, help="commit threshold as a fraction of tau")
    p.add_argument("--K", type=int, default=10**9, help="total token supply")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("simulate", help="run a simulation scenario")
    p.add_argument("config", nargs="?", help="scenario file (default: bundled scenario)")
    p.add_argument("--seed", type=int)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--messages", type=int, help="override n_messages")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", help="also write per-message rows here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("codec-check", help="Monte Carlo decode success rates")
    p.add_argument("--tau", type=int, default=100)
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--k", type=int, help="source block size (default: sized from the threshold)")
    p.add_argument("--epsilon", type=float, default=0.15)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--family", choices=FAMILIES, default="gf256")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_codec_check)

    p = sub.add_parser("sortition-bench", help="vote-draw statistics and timing")
    p.add_argument("--stake", type=int, default=10**6)
    p.add_argument("--tau", type=int, default=5000)
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--K", type=int, default=10**9)
    p.add_argument("--draws", type=int, default=10**4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sortition_bench)

    p = sub.add_parser("keygen", help="generate a VRF key pair")
    p.add_argument("--seed", help="32-byte secret as hex (default: random)")
    p.set_defaults(func=cmd_keygen)

    for action in sub.choices.values():
        action.add_argument("--out", help="output file (default: standard output)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except ConfigError as exc:
        where = f" [{exc.key}]" if exc.key else ""
        print(f"eden: configuration error{where}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EdenError, OSError) as exc:
        print(f"eden: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
