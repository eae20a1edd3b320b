"""Experiment runners: single simulations, parameter sweeps and the acceptance criteria.

Every criterion draws its instances from a committed seeded distribution and
returns a ``CriterionResult`` with a verdict, a JSON-able summary and CSV rows.
"""
from __future__ import annotations

import itertools
import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from . import conductance as cd
from .graph import (GadgetSpec, LatencyGraph, gen_basic, gen_gadget, gen_ring_of_gadgets, make_cut,
                    max_degree, random_connected, ring_halving_side)
from .guessing import linear_fit, play, shape_fit
from .protocols.dtg import distance_violations, dtg_violations, l_dtg, run_t_sequence
from .protocols.eid import PipelineParams, eid, general_eid, path_discovery, unified_dissemination
from .protocols.pushpull import push_pull
from .protocols.spanner import spanner_construct, stretch_violations
from .targets import RandomP, Singleton, parse_predicate

# frozen constants of the round and degree bounds
PUSHPULL_C = 2.0
SPANNER_DEGREE_C = 2.0
DTG_C = 4.0
TSEQ_C = 2.0

PROFILES = ("full", "quick")


def q(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    summary: Dict[str, Any] = field(default_factory=dict)
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed, "detail": self.detail,
                "summary": self.summary}


# graph families and single runs ------------------------------------------------------
FAMILIES = ("clique", "path", "star", "random_regular", "two_cliques_bridge", "random_connected",
            "gadget", "ring")
PROTOCOLS = ("push-pull", "ldtg", "t-sequence", "eid", "general-eid", "path-discovery", "unified")


def build_graph(family: str, params: Dict[str, Any], seed: int = 0) -> LatencyGraph:
    """Graph of a named family; ``params`` holds already-parsed values."""
    p = dict(params)
    if family == "gadget":
        pred = p.pop("predicate", "singleton")
        pred = parse_predicate(pred) if isinstance(pred, str) else pred
        spec = GadgetSpec(int(p.pop("m")), int(p.pop("lo", 1)), int(p.pop("hi")), pred,
                          bool(p.pop("symmetric", False)))
        if p:
            raise ValueError(f"unknown gadget parameters {sorted(p)}")
        return gen_gadget(spec, seed).graph
    if family == "ring":
        return gen_ring_of_gadgets(int(p["s"]), int(p["k"]), int(p["ell"]), seed)
    if family in ("random_regular", "random_connected"):
        p.setdefault("seed", seed)
    return gen_basic(family, **p)


def simulate(g: LatencyGraph, protocol: str, seed: int = 0, scenario: str = "known", ell: int = 1,
             d_guess: int = 1, source: int = 0, goal: str = "broadcast", trace_level: str = "off",
             max_rounds: int = 1_000_000, pipeline: PipelineParams = PipelineParams()):
    """Run one protocol; returns ``(metrics dict, SimResult)``."""
    if scenario not in ("known", "unknown"):
        raise ValueError("scenario must be 'known' or 'unknown'")
    out: Dict[str, Any] = {"protocol": protocol, "scenario": scenario, "seed": seed}
    if protocol == "push-pull":
        res = push_pull(g, source if goal == "broadcast" else None, seed, goal, max_rounds, trace_level)
    elif protocol == "ldtg":
        res = l_dtg(g, ell, seed, trace_level).result
    elif protocol == "t-sequence":
        res = run_t_sequence(g, ell, seed, trace_level).result
    elif protocol == "eid":
        o = eid(g, d_guess, seed, pipeline, max_rounds, trace_level)
        res = o.result
        out["complete"] = o.complete
    elif protocol in ("general-eid", "path-discovery"):
        if protocol == "general-eid":
            o = general_eid(g, seed, pipeline, scenario == "known", max_rounds, trace_level)
        else:
            o = path_discovery(g, seed, max_rounds, trace_level)
        res = o.result
        out["complete"] = o.complete
        out["termination"] = o.termination_violations()
    elif protocol == "unified":
        u = unified_dissemination(g, scenario, seed, pipeline, max_rounds)
        out.update(u.to_dict())
        out["metrics"] = u.pipeline.result.metrics.to_dict() if u.winner == "spanner" else u.push_pull.metrics.to_dict()
        return out, (u.pipeline.result if u.winner == "spanner" else u.push_pull)
    else:
        raise ValueError(f"unknown protocol {protocol!r}; choose from {PROTOCOLS}")
    out["rounds"] = res.metrics.rounds_elapsed
    out["metrics"] = res.metrics.to_dict()
    return out, res


def parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def expand_grid(params: Dict[str, str]) -> List[Dict[str, Any]]:
    """Cartesian product of comma-separated parameter lists, in key order."""
    keys = sorted(params)
    values = [[parse_value(v) for v in str(params[k]).split(",") if v != ""] for k in keys]
    for k, vs in zip(keys, values):
        if not vs:
            raise ValueError(f"sweep range for {k!r} is empty")
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


def _sweep_task(task):
    family, params, protocol, seed, options = task
    try:
        g = build_graph(family, params, seed)
        out, _ = simulate(g, protocol, seed, **options)
    except Exception as exc:
        raise RuntimeError(f"sweep run failed for family={family} params={params} seed={seed}: {exc}") from exc
    row = {"family": family, **{f"param_{k}": v for k, v in sorted(params.items())},
           "protocol": protocol, "seed": seed, "n": g.n, "rounds": out.get("rounds"),
           "completed": out["metrics"]["completed"]}
    if protocol == "unified":
        row.update(winner=out["winner"], push_pull_rounds=out["push_pull_rounds"],
                   pipeline_rounds=out["pipeline_rounds"])
    return row


def sweep(family: str, grid: Dict[str, str], protocol: str, seeds: Sequence[int], jobs: int = 1,
          options: Optional[Dict[str, Any]] = None) -> List[Dict[str, Any]]:
    """One row per (parameter point, seed) in deterministic order, whatever ``jobs`` is."""
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    tasks = [(family, params, protocol, seed, dict(options or {}))
             for params in expand_grid(grid) for seed in seeds]
    if jobs == 1:
        return [_sweep_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_task, tasks))


# criterion instance distributions ------------------------------------------------------
def random_instance(rng: random.Random, n_max: int, max_latency: int = 64) -> LatencyGraph:
    n = rng.randint(2, n_max)
    extra_p = rng.choice([0.1, 0.25, 0.5, 1.0])
    return random_connected(n, extra_p, max_latency, seed=rng.randrange(2 ** 31))


def criterion_1(seed: int = 0, profile: str = "full") -> CriterionResult:
    """Multiplicity-graph route vs direct cut enumeration, exact equality."""
    count = 500 if profile == "full" else 40
    rng = random.Random(2023 + seed)
    rows, mismatches = [], 0
    for i in range(count):
        g = random_instance(rng, 10)
        direct = cd.phi_ell_many(g, g.latencies())
        bad = 0
        for ell, (value, _) in direct.items():
            mg_value, _ = cd.multigraph_conductance(cd.edge_induced_graph(g, ell))
            bad += mg_value != value
        mismatches += bad
        rows.append({"instance": i, "n": g.n, "edges": g.num_edges, "latencies": len(direct), "mismatches": bad})
    return CriterionResult(1, "conductance routes agree", mismatches == 0,
                           f"{count} instances, {sum(r['latencies'] for r in rows)} (graph, ell) pairs, "
                           f"{mismatches} mismatches", {"instances": count, "mismatches": mismatches}, rows)


def sandwich_examples() -> List[Tuple[str, LatencyGraph]]:
    return [("two-node latency 5", LatencyGraph(2, [(0, 1, 5)])),
            ("triangle 1,1,4", LatencyGraph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 4)]))]


def criterion_2(seed: int = 0, profile: str = "full") -> CriterionResult:
    """Strict two-sided relation between critical and average conductance."""
    count = 500 if profile == "full" else 40
    rng = random.Random(2024 + seed)
    rows = []
    cases = [(name, g) for name, g in sandwich_examples()]
    cases += [(f"random {i}", random_instance(rng, 12)) for i in range(count)]
    for name, g in cases:
        r = cd.check_relation(g)
        rows.append({"instance": name, "n": g.n, "edges": g.num_edges, "lower": q(r.lower),
                     "phi_avg": q(r.phi_avg), "upper": q(r.upper), "lower_holds": r.lower_holds,
                     "upper_holds": r.upper_holds})
    lower_fail = [r["instance"] for r in rows if not r["lower_holds"]]
    upper_fail = [r["instance"] for r in rows if not r["upper_holds"]]
    ok = not lower_fail and not upper_fail
    detail = (f"{len(rows)} graphs; lower bound violated on {len(lower_fail)}, "
              f"upper bound violated on {len(upper_fail)}")
    summary = {"graphs": len(rows), "lower_violations": lower_fail, "upper_violations": upper_fail,
               "examples": rows[:2]}
    return CriterionResult(2, "conductance sandwich", ok, detail, summary, rows)


def criterion_3(seed: int = 0, profile: str = "full") -> CriterionResult:
    rows, ok = [], True
    for s, k in ((3, 6), (4, 8), (5, 10)):
        for ell in (4, 16):
            g = gen_ring_of_gadgets(s, k, ell, seed)
            degrees = {g.degree(u) for u in range(g.n)}
            value = cd.phi_ell_cut(g, make_cut(g, ring_halving_side(s, k)), ell)
            half = k * s // 2
            expected = Fraction(2 * s * s, half * (3 * s - 1))
            good = degrees == {3 * s - 1} and value == expected
            ok &= good
            rows.append({"s": s, "k": k, "ell": ell, "n": g.n, "degrees": sorted(degrees),
                         "phi_cut": q(value), "expected": q(expected), "ok": good})
    return CriterionResult(3, "ring gadget analytics", ok,
                           f"{sum(r['ok'] for r in rows)}/{len(rows)} graphs regular with exact halving-cut value",
                           {"graphs": len(rows)}, rows)


def criterion_4(seed: int = 0, profile: str = "full") -> CriterionResult:
    trials = 200 if profile == "full" else 30
    rows = []
    means: Dict[Tuple[str, str], List[float]] = {}
    ms = [16, 32, 64, 128]
    for strategy in ("random", "adaptive"):
        for m in ms:
            results = [play(m, Singleton(), strategy, 10_000 * seed + 2 * t) for t in range(trials)]
            rows += [{"part": "singleton", "strategy": strategy, "m": m, "p": "", "trial": t, "rounds": r}
                     for t, r in enumerate(results)]
            means.setdefault(("singleton", strategy), []).append(statistics.mean(results))
    ps = [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)]
    for strategy in ("random", "adaptive"):
        for p in ps:
            results = [play(64, RandomP(float(p)), strategy, 10_000 * seed + 2 * t) for t in range(trials)]
            rows += [{"part": "random-p", "strategy": strategy, "m": 64, "p": q(p), "trial": t, "rounds": r}
                     for t, r in enumerate(results)]
            means.setdefault(("random-p", strategy), []).append(statistics.mean(results))
    fits = {s: linear_fit(ms, means[("singleton", s)]) for s in ("random", "adaptive")}
    pf = [float(p) for p in ps]
    rand_fit = shape_fit(pf, means[("random-p", "random")], lambda p: math.log(64) / p)
    adapt_fit = shape_fit(pf, means[("random-p", "adaptive")], lambda p: 1 / p)
    ok = all(f.r2 >= 0.9 for f in fits.values()) and rand_fit.within(4) and adapt_fit.within(4)
    detail = (f"singleton R2 random={fits['random'].r2:.4f} adaptive={fits['adaptive'].r2:.4f}; "
              f"log(m)/p worst factor {rand_fit.worst_factor:.3f}; 1/p worst factor {adapt_fit.worst_factor:.3f}")
    summary = {"trials": trials,
               "means": {f"{a}:{b}": [round(x, 6) for x in v] for (a, b), v in sorted(means.items())},
               "singleton_fits": {s: {"slope": round(f.slope, 6), "intercept": round(f.intercept, 6),
                                      "r2": round(f.r2, 6)} for s, f in sorted(fits.items())},
               "random_logm_over_p": {"c": round(rand_fit.constant, 6), "worst": round(rand_fit.worst_factor, 6)},
               "adaptive_one_over_p": {"c": round(adapt_fit.constant, 6), "worst": round(adapt_fit.worst_factor, 6)}}
    return CriterionResult(4, "guessing-game scalings", ok, detail, summary, rows)


def criterion_5(seed: int = 0, profile: str = "full") -> CriterionResult:
    n = 64
    seeds = 100 if profile == "full" else 15
    rows, points, ok = [], [], True
    for phi in (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)):
        gadget = gen_gadget(GadgetSpec(n, 1, n * n, RandomP(float(phi))), seed=1 + seed)
        g = gadget.graph
        phi_star, ell_star, _ = cd.estimate_critical(g, samples=8, seed=seed)
        rounds = [push_pull(g, 0, s).metrics.rounds_elapsed for s in range(seeds)]
        med = statistics.median(rounds)
        bound = PUSHPULL_C * ell_star / float(phi_star) * math.log(g.n)
        good = med <= bound
        ok &= good
        rows += [{"phi": q(phi), "seed": s, "rounds": r} for s, r in enumerate(rounds)]
        points.append({"phi": q(phi), "phi_star_estimate": q(phi_star), "ell_star": ell_star,
                       "median_rounds": med, "bound": round(bound, 6), "ratio": round(med / bound * PUSHPULL_C, 6),
                       "ok": good})
    detail = "; ".join(f"phi={p['phi']}: median {p['median_rounds']} <= {p['bound']:.1f}" if p["ok"]
                       else f"phi={p['phi']}: median {p['median_rounds']} > {p['bound']:.1f}" for p in points)
    return CriterionResult(5, "push-pull bound shape", ok, f"C={PUSHPULL_C}; {detail}",
                           {"C": PUSHPULL_C, "points": points, "seeds": seeds}, rows)


def criterion_6(seed: int = 0, profile: str = "full") -> CriterionResult:
    seeds = 50 if profile == "full" else 8
    n = 64
    rows = []
    failures = {"unit": 0, "weighted": 0}
    for variant, max_lat in (("unit", 1), ("weighted", 16)):
        for s in range(seeds):
            g = random_connected(n, 0.1, max_lat, seed=1000 * seed + s)
            sp = spanner_construct(g, seed=s)
            bad_stretch = len(stretch_violations(g, sp))
            bound = SPANNER_DEGREE_C * sp.n_hat ** (1 / sp.k) * math.log(n)
            deg = sp.max_out_degree()
            fail = bad_stretch > 0 or deg > bound
            failures[variant] += fail
            rows.append({"variant": variant, "seed": s, "k": sp.k, "stretch_violations": bad_stretch,
                         "max_out_degree": deg, "degree_bound": round(bound, 6),
                         "spanner_edges": len(sp.edge_set()), "graph_edges": g.num_edges})
    allowed = max(1, seeds // 50)
    ok = all(v <= allowed for v in failures.values())
    return CriterionResult(6, "spanner stretch and out-degree", ok,
                           f"C={SPANNER_DEGREE_C}; failing seeds unit={failures['unit']}/{seeds} "
                           f"weighted={failures['weighted']}/{seeds} (allowed {allowed})",
                           {"C": SPANNER_DEGREE_C, "failures": failures, "seeds": seeds}, rows)


def criterion_7(seed: int = 0, profile: str = "full") -> CriterionResult:
    count = 100 if profile == "full" else 12
    rng = random.Random(7 + seed)
    rows, bad = [], 0
    worst = {"dtg": 0.0, "t": 0.0}
    for i in range(count):
        n = rng.randint(2, 48)
        g = random_connected(n, rng.choice([0.05, 0.1, 0.2]), 16, seed=rng.randrange(2 ** 31))
        ell = rng.choice(g.latencies())
        k = rng.choice([1, 2, 4, 8, 16])
        lg2 = math.log2(n) ** 2
        d = l_dtg(g, ell, seed=i)
        d_bad = len(dtg_violations(g, ell, d.rumors))
        d_ratio = d.rounds / (ell * lg2)
        t = run_t_sequence(g, k, seed=i)
        t_bad = len(distance_violations(g, k, t.rumors))
        t_ratio = t.rounds / (k * lg2 * (math.log2(k) + 1))
        worst["dtg"] = max(worst["dtg"], d_ratio)
        worst["t"] = max(worst["t"], t_ratio)
        fail = d_bad or t_bad or d_ratio > DTG_C or t_ratio > TSEQ_C
        bad += bool(fail)
        rows.append({"instance": i, "n": n, "edges": g.num_edges, "ell": ell, "dtg_rounds": d.rounds,
                     "dtg_violations": d_bad, "dtg_ratio": round(d_ratio, 6), "k": k, "t_rounds": t.rounds,
                     "t_violations": t_bad, "t_ratio": round(t_ratio, 6)})
    return CriterionResult(7, "tree gossip and T(k) postconditions", bad == 0,
                           f"{count} graphs, {bad} failing; worst round ratios dtg={worst['dtg']:.3f} "
                           f"(C={DTG_C}) T(k)={worst['t']:.3f} (C={TSEQ_C})",
                           {"dtg_C": DTG_C, "t_C": TSEQ_C, "worst": {k: round(v, 6) for k, v in worst.items()},
                            "failing": bad}, rows)


def criterion_8(seed: int = 0, profile: str = "full") -> CriterionResult:
    graphs = 100 if profile == "full" else 10
    rng = random.Random(8 + seed)
    rows, bad = [], 0
    for i in range(graphs):
        g = random_instance(rng, 10, max_latency=16)
        runs = [("general-eid", "known" if i % 2 == 0 else "unknown"), ("path-discovery", "known")]
        for protocol, scenario in runs:
            if protocol == "general-eid":
                o = general_eid(g, seed=i, latencies_known=scenario == "known")
            else:
                o = path_discovery(g, seed=i)
            v = o.termination_violations()
            fail = v["terminated_missing_rumor"] > 0 or v["distinct_termination_rounds"] != 1 or v["unterminated"] > 0
            bad += fail
            rows.append({"instance": i, "n": g.n, "edges": g.num_edges, "protocol": protocol, "scenario": scenario,
                         "rounds": o.rounds, "iterations": "/".join(map(str, o.iterations)),
                         "missing_at_termination": v["terminated_missing_rumor"],
                         "distinct_termination_rounds": v["distinct_termination_rounds"],
                         "unterminated": v["unterminated"]})
    return CriterionResult(8, "termination agreement", bad == 0, f"{len(rows)} runs, {bad} violating",
                           {"runs": len(rows), "violations": bad}, rows)


def criterion_9(seed: int = 0, profile: str = "full") -> CriterionResult:
    s, k = 4, 8
    ells = (1, 4, 16, 64)
    rows = []
    for ell in ells:
        g = gen_ring_of_gadgets(s, k, ell, seed)
        u = unified_dissemination(g, "known", seed)
        rows.append({"s": s, "k": k, "ell": ell, "n": g.n, "push_pull_rounds": u.push_pull_rounds,
                     "pipeline_rounds": u.pipeline_rounds, "winner": u.winner})
    winners = [r["winner"] for r in rows]
    flips = winners[0] == "push-pull" and winners[-1] == "spanner"
    monotone = all(not (a == "spanner" and b == "push-pull") for a, b in zip(winners, winners[1:]))
    ok = flips and monotone
    ratios = [round(r["pipeline_rounds"] / r["push_pull_rounds"], 3) if r["pipeline_rounds"] and r["push_pull_rounds"]
              else None for r in rows]
    return CriterionResult(9, "trade-off flip on the ring", ok,
                           f"winners by ell {dict(zip(ells, winners))}; pipeline/push-pull ratios {ratios}",
                           {"s": s, "k": k, "winners": winners, "ratios": ratios}, rows)


CRITERIA: Dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9,
}
