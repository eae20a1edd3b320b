"""Command line: generate, analyze, simulate, game, sweep and verify.

Randomized commands need a seed: ``--seed`` or the ``GOSSIP_SEED`` variable.
Every output embeds the configuration that produced it, and files are
written atomically so a failing run leaves no partial output behind.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from . import __version__
from .conductance import EnumerationCapExceeded, analyze as analyze_graph
from .engine import ProtocolViolation
from .experiments import CRITERIA, FAMILIES, PROFILES, PROTOCOLS, build_graph, parse_value, simulate, sweep
from .graph import GraphFormatError, format_graph, load_graph
from .guessing import GuessError, new_game, STRATEGIES
from .targets import RandomP, parse_predicate


class UsageError(ValueError):
    """Bad command-line input detected after argument parsing."""


# output helpers ------------------------------------------------------------------
def dumps_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def format_csv(rows: Sequence[Dict[str, Any]], config: Dict[str, Any]) -> str:
    fields: List[str] = []
    for row in rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def emit(text: str, out: Optional[str]) -> None:
    if out:
        write_atomic(Path(out), text)
    else:
        sys.stdout.write(text)


def resolve_seed(args, required: bool = True) -> Optional[int]:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("GOSSIP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"GOSSIP_SEED must be an integer, got {env!r}") from None
    if required:
        raise UsageError("this command is randomized: pass --seed or set GOSSIP_SEED")
    return None


def int_list(text: str) -> List[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {value}")
    return value


# generate -------------------------------------------------------------------------
GENERATE_FLAGS = {
    "clique": ("n", "latency"),
    "path": ("n", "latencies"),
    "star": ("leaves", "latency"),
    "random_regular": ("n", "d", "latency"),
    "two_cliques_bridge": ("size", "bridge_latency", "latency"),
    "random_connected": ("n", "extra_p", "max_latency"),
    "gadget": ("m", "lo", "hi", "predicate", "symmetric"),
    "ring": ("s", "k", "ell"),
}
RANDOMIZED = {"random_regular", "random_connected", "gadget", "ring"}


def generate_params(args) -> Dict[str, Any]:
    params = {}
    for name in GENERATE_FLAGS[args.family]:
        value = getattr(args, name)
        if value is None or value is False and name != "symmetric":
            continue
        if name == "latencies":
            value = [int(x) for x in value.split(",")]
        params[name] = value
    if args.family == "path" and "latencies" in params and "n" not in params:
        params["n"] = len(params["latencies"]) + 1
    return params


def cmd_generate(args) -> int:
    seed = resolve_seed(args, required=args.family in RANDOMIZED) or 0
    params = generate_params(args)
    g = build_graph(args.family, params, seed)
    config = {"command": "generate", "family": args.family, "params": params, "seed": seed}
    text = f"# config: {json.dumps(config, sort_keys=True)}\n" + format_graph(g)
    emit(text, args.out)
    return 0


# analyze --------------------------------------------------------------------------
def cmd_analyze(args) -> int:
    g = load_graph(args.graph)
    seed = resolve_seed(args, required=args.approx) or 0
    report = analyze_graph(g, cap=args.cap, approx=args.approx, seed=seed, samples=args.samples)
    config = {"command": "analyze", "graph": str(args.graph), "cap": args.cap, "approx": args.approx,
              "seed": seed, "samples": args.samples}
    emit(dumps_json({"config": config, "n": g.n, "edges": g.num_edges, "report": report.to_dict()}), args.out)
    return 0


# simulate -------------------------------------------------------------------------
def cmd_simulate(args) -> int:
    g = load_graph(args.graph)
    seed = resolve_seed(args)
    trace_level = "full" if args.trace else args.trace_level
    out, res = simulate(g, args.protocol, seed, args.scenario, args.ell, args.d_guess, args.source, args.goal,
                        trace_level, args.max_rounds)
    config = {"command": "simulate", "graph": str(args.graph), "protocol": args.protocol, "seed": seed,
              "scenario": args.scenario, "ell": args.ell, "d_guess": args.d_guess, "source": args.source,
              "goal": args.goal, "max_rounds": args.max_rounds, "trace_level": trace_level}
    if args.trace:
        lines = [f"# config: {json.dumps(config, sort_keys=True)}", "# round initiator responder latency deliver_round"]
        write_atomic(Path(args.trace), "\n".join(lines + res.trace_lines()) + "\n")
    emit(dumps_json({"config": config, "result": out}), args.out)
    return 0


# game -----------------------------------------------------------------------------
def cmd_game(args) -> int:
    seed = resolve_seed(args)
    predicate = parse_predicate(args.predicate)
    strategies = ["random", "adaptive"] if args.strategy == "both" else [args.strategy]
    p = predicate.p if isinstance(predicate, RandomP) else ""
    rows = []
    for m in args.m_sweep:
        for strategy in strategies:
            for t in range(args.trials):
                trial_seed = seed * 1_000_003 + 2 * t
                game = new_game(m, predicate, trial_seed)
                rounds = STRATEGIES[strategy](game, seed=trial_seed + 1)
                rows.append({"m": m, "p": p, "strategy": strategy, "trial": t, "rounds": rounds})
    config = {"command": "game", "predicate": args.predicate, "strategy": args.strategy,
              "m_sweep": args.m_sweep, "trials": args.trials, "seed": seed}
    emit(format_csv(rows, config), args.out)
    return 0


# sweep ----------------------------------------------------------------------------
def parse_params(items: Iterable[str]) -> Dict[str, str]:
    grid = {}
    for item in items or ():
        key, sep, values = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects key=v1,v2,..., got {item!r}")
        grid[key.replace("-", "_")] = values
    return grid


def cmd_sweep(args) -> int:
    seed = resolve_seed(args)
    seeds = [seed + i for i in range(args.seeds)]
    grid = parse_params(args.param)
    options = {"scenario": args.scenario, "ell": args.ell, "d_guess": args.d_guess, "goal": args.goal,
               "max_rounds": args.max_rounds}
    rows = sweep(args.family, grid, args.protocol, seeds, args.jobs, options)
    config = {"command": "sweep", "family": args.family, "grid": grid, "protocol": args.protocol,
              "seeds": seeds, **options}
    emit(format_csv(rows, config), args.out)
    return 0


# verify ---------------------------------------------------------------------------
def cmd_verify(args) -> int:
    seed = resolve_seed(args, required=False) or 0
    numbers = sorted(CRITERIA) if not args.only else args.only
    for n in numbers:
        if n not in CRITERIA:
            raise UsageError(f"no runnable criterion {n}; choose from {sorted(CRITERIA)}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=out.parent, prefix=f".{out.name}."))
    try:
        results = []
        for n in numbers:
            res = CRITERIA[n](seed=seed, profile=args.profile)
            print(res.line(), flush=True)
            results.append(res)
            config = {"command": "verify", "criterion": n, "seed": seed, "profile": args.profile}
            (staging / f"criterion_{n:02d}.csv").write_text(format_csv(res.rows, config))
        config = {"command": "verify", "criteria": numbers, "seed": seed, "profile": args.profile,
                  "version": __version__}
        summary = {"config": config, "results": [r.to_dict() for r in results],
                   "passed": sum(r.passed for r in results), "failed": sum(not r.passed for r in results)}
        (staging / "summary.json").write_text(dumps_json(summary))
        out.mkdir(exist_ok=True)
        for item in sorted(staging.iterdir()):
            os.replace(item, out / item.name)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return 0 if all(r.passed for r in results) else 1


# parser ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latgossip", description="Gossip on graphs with edge latencies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def seed_arg(p):
        p.add_argument("--seed", type=int, default=None, help="random seed (falls back to GOSSIP_SEED)")

    p = sub.add_parser("generate", help="write a graph of a named family as an edge list")
    p.add_argument("family", choices=FAMILIES)
    for flag, typ, hlp in (("--n", positive_int, "node count"), ("--latency", positive_int, "uniform latency"),
                           ("--latencies", str, "comma-separated path latencies"),
                           ("--leaves", positive_int, "star leaves"), ("--d", positive_int, "regular degree"),
                           ("--size", positive_int, "clique size"),
                           ("--bridge-latency", positive_int, "bridge latency"),
                           ("--extra-p", float, "extra edge probability"),
                           ("--max-latency", positive_int, "largest random latency"),
                           ("--m", positive_int, "gadget side size"), ("--lo", positive_int, "fast latency"),
                           ("--hi", positive_int, "slow latency"),
                           ("--predicate", str, "singleton | random:<p> | explicit:a-b,..."),
                           ("--s", positive_int, "ring layer size"), ("--k", positive_int, "ring layer count"),
                           ("--ell", positive_int, "ring slow latency")):
        p.add_argument(flag, type=typ, default=None, help=hlp)
    p.add_argument("--symmetric", action="store_true", help="gadget: add a clique on the right side")
    seed_arg(p)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="conductance report of a graph file")
    p.add_argument("graph")
    p.add_argument("--cap", type=positive_int, default=20, help="largest n for exact enumeration")
    p.add_argument("--approx", action="store_true", help="use the sampled estimator above the cap")
    p.add_argument("--samples", type=positive_int, default=32, help="random starts of the estimator")
    seed_arg(p)
    p.add_argument("--out", help="output JSON (default stdout)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run one protocol on a graph file")
    p.add_argument("--protocol", choices=PROTOCOLS, required=True)
    p.add_argument("--graph", required=True)
    seed_arg(p)
    p.add_argument("--scenario", choices=("known", "unknown"), default="known")
    p.add_argument("--ell", type=positive_int, default=1, help="ldtg latency cap / t-sequence k")
    p.add_argument("--d-guess", type=positive_int, default=1, help="diameter guess for eid")
    p.add_argument("--source", type=int, default=0, help="push-pull broadcast source")
    p.add_argument("--goal", choices=("broadcast", "all", "local"), default="broadcast")
    p.add_argument("--max-rounds", type=positive_int, default=1_000_000)
    p.add_argument("--trace-level", choices=("off", "metrics", "full"), default="off")
    p.add_argument("--trace", help="write the exchange trace to this file")
    p.add_argument("--out", help="output JSON (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("game", help="guessing-game trials as CSV")
    p.add_argument("--predicate", default="singleton")
    p.add_argument("--strategy", choices=("random", "adaptive", "both"), default="both")
    p.add_argument("--m-sweep", type=int_list, default=[16, 32, 64, 128])
    p.add_argument("--trials", type=positive_int, default=200)
    seed_arg(p)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("sweep", help="protocol runs over a parameter grid as CSV")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--param", action="append", metavar="KEY=V1,V2",
                   help="graph parameter values; repeat per key")
    p.add_argument("--protocol", choices=PROTOCOLS, required=True)
    p.add_argument("--seeds", type=positive_int, default=1, help="trials per grid point")
    seed_arg(p)
    p.add_argument("--jobs", type=positive_int, default=1, help="parallel worker processes")
    p.add_argument("--scenario", choices=("known", "unknown"), default="known")
    p.add_argument("--ell", type=positive_int, default=1)
    p.add_argument("--d-guess", type=positive_int, default=1)
    p.add_argument("--goal", choices=("broadcast", "all", "local"), default="broadcast")
    p.add_argument("--max-rounds", type=positive_int, default=1_000_000)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance criteria and write their artifacts")
    p.add_argument("--out", default="verify-out", help="artifact directory")
    p.add_argument("--profile", choices=PROFILES, default="full", help="quick shrinks trial counts")
    p.add_argument("--only", type=int_list, default=None, help="comma-separated criterion numbers")
    seed_arg(p)
    p.set_defaults(func=cmd_verify)
    return parser


ERRORS = (UsageError, GraphFormatError, EnumerationCapExceeded, ProtocolViolation, GuessError, ValueError,
          FileNotFoundError, RuntimeError)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ERRORS as exc:
        print(f"latgossip {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
