"""Spanner-based dissemination: round-robin broadcast, EID, termination check,
guess-and-double drivers, latency discovery and the unified runner."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from ..engine import SimResult
from ..graph import LatencyGraph, all_pairs_distances
from .dtg import _run_programs, dtg_phase, t_sequence_phase
from .program import Barrier, Context, Exchange, Wait
from .pushpull import push_pull
from .spanner import OrientedSpanner, check_view, cluster_spanner, default_k, orient, view_adjacency


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


# round-robin broadcast -----------------------------------------------------------
def rr_phase(ctx: Context, out: List[int], iterations: int, name: str = "rr"):
    """Cycle through ``out`` one exchange per round for ``iterations`` rounds."""
    if out:
        for i in range(iterations):
            yield Exchange(out[i % len(out)])
    yield Barrier(name)


def rr_iterations(k: int, delta_out: int) -> int:
    return k * delta_out + k


def rr_broadcast(spanner: OrientedSpanner, k: int, g: Optional[LatencyGraph] = None, seed: int = 0,
                 trace_level: str = "off"):
    """Round-robin broadcast over the spanner's out-edges of latency <= k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    g = g or spanner.as_graph()
    outs = [[u for u, ell in spanner.out_edges[v] if ell <= k] for v in range(g.n)]
    iterations = rr_iterations(k, max((len(o) for o in outs), default=0))

    def program(ctx):
        yield from rr_phase(ctx, outs[ctx.id], iterations)

    res, proto = _run_programs(g, program, seed, spanner.n_hat, trace_level=trace_level)
    return res, [st.rumors for st in proto.states]


def spanner_distance_violations(spanner: OrientedSpanner, k: int, rumors: List[int]):
    dist = all_pairs_distances(spanner.as_graph())
    bad = []
    for u in range(spanner.n):
        for v in range(u + 1, spanner.n):
            d = dist[u][v]
            if d is not None and d <= k and not (rumors[u] >> v & 1 and rumors[v] >> u & 1):
                bad.append((u, v))
    return bad


# EID -------------------------------------------------------------------------------
@dataclass(frozen=True)
class PipelineParams:
    """Knobs of the spanner pipeline.

    ``rr_factor`` multiplies the diameter guess to get the broadcast reach;
    ``None`` means the spanner stretch bound 2k-1.
    """

    n_hat: Optional[int] = None
    spanner_k: Optional[int] = None
    rr_factor: Optional[int] = None

    def resolve(self, n: int) -> "PipelineParams":
        n_hat = self.n_hat or max(2, n * n)
        k = self.spanner_k or default_k(n_hat)
        return PipelineParams(n_hat, k, self.rr_factor or 2 * k - 1)


def _local_out_edges(ctx: Context, d_guess: int) -> List[tuple]:
    """Run the clustering on the collected view; returns this node's out-edges."""
    sh = ctx.shared
    p: PipelineParams = sh.params["pipeline"]
    known = frozenset(_bits(ctx.state.rumors))
    key = ("spanner", known, d_guess)
    if key not in sh.cache:
        known_lat = sh.params.get("known_lat")
        adj = view_adjacency(ctx.g, known, d_guess)
        if known_lat is not None:
            # unknown-latency runs: a node only reports edges whose latency it has learned
            adj = {}
            for x in known:
                adj.setdefault(x, {})
                for y, ell in known_lat(x).items():
                    if ell <= d_guess:
                        adj[x][y] = ell
                        adj.setdefault(y, {})[x] = ell
        sh.cache[key] = (adj, cluster_spanner(adj, p.n_hat, p.spanner_k, sh.seed))
    adj, chosen = sh.cache[key]
    missing = check_view(adj, set(known), ctx.id, p.spanner_k + 1)
    if missing is not None:
        sh.log.append(("insufficient_view", ctx.id, missing))
    return [(u, adj[ctx.id][u]) for u in orient(chosen, ctx.id)]


def eid_phase(ctx: Context, d_guess: int):
    """Collect neighborhoods, build the local spanner, then round-robin broadcast."""
    sh = ctx.shared
    p: PipelineParams = sh.params["pipeline"]
    for _ in range(p.spanner_k + 1):
        yield from dtg_phase(ctx, d_guess, name="collect")
    out = _local_out_edges(ctx, d_guess)
    sh.out_lists[ctx.id] = tuple(out)
    yield Barrier("spanner")
    reach = p.rr_factor * d_guess
    targets = [u for u, ell in out if ell <= reach]
    iterations = rr_iterations(reach, sh.max_out_degree())
    ctx.state.log["rr"] = (targets, iterations)
    yield from rr_phase(ctx, targets, iterations)


def _rr_again(ctx: Context):
    targets, iterations = ctx.state.log["rr"]
    yield from rr_phase(ctx, targets, iterations, name="check-rr")


# termination check ------------------------------------------------------------------
def termination_check_phase(ctx: Context, k: int, broadcast: Callable[[Context], Any],
                            dtg_ell: Optional[int] = None, rule: str = "closure"):
    """Verify dissemination; returns True when this node ends in status ``failed``.

    Rumor sets are frozen during the check. A DTG pass over every edge that
    may have carried rumors (``dtg_ell``, default ``k``) swaps rumor-set
    tokens between direct neighbors; the flag is set when a graph neighbor's
    rumor is missing or such a neighbor holds a different set. Tokens, their
    origins and flags are gathered with ``broadcast``; a second broadcast
    spreads the failed bit.

    With ``rule="closure"`` a node also fails unless it heard a token from
    every origin in its own rumor set; ``rule="tokens"`` compares tokens and
    flags only.
    """
    st = ctx.state
    st.checking = True
    token = st.rumors
    st.heard = frozenset({token})
    st.heard_from = 1 << ctx.id
    st.heard_flag = False
    yield from dtg_phase(ctx, dtg_ell or k, name="check-dtg")
    nbr_mask = sum(1 << u for u in ctx.neighbors)
    st.flag = (token & nbr_mask) != nbr_mask or any(h != token for h in st.heard)
    st.heard_flag = st.heard_flag or st.flag
    yield from broadcast(ctx)
    failed = st.heard_flag or any(h != token for h in st.heard)
    if rule == "closure":
        failed = failed or (st.heard_from & token) != token
    st.failed_bit = failed
    yield from broadcast(ctx)
    failed = st.failed_bit
    st.status = "failed" if failed else "default"
    st.checking = False
    st.heard = frozenset()
    st.heard_from = 0
    st.heard_flag = False
    st.failed_bit = False
    return failed


# latency discovery ---------------------------------------------------------------------
def discover_phase(ctx: Context, d_guess: int, delta_guess: int):
    """Probe up to ``delta_guess`` not-yet-probed neighbors one per round, then wait ``d_guess``."""
    st = ctx.state
    # probes only measure latency; they carry no rumors
    st.quiet = True
    todo = [u for u in ctx.neighbors if u not in st.probed][:delta_guess]
    for u in todo:
        st.probed.add(u)
        yield Exchange(u)
    yield Wait(delta_guess - len(todo) + d_guess)
    yield Barrier("discover", drain=False)
    st.quiet = False


# drivers -----------------------------------------------------------------------------
@dataclass
class DriverOutcome:
    result: SimResult
    rumors: List[int]
    terminated_rounds: List[Optional[int]]
    statuses: List[str]
    iterations: List[int] = field(default_factory=list)
    notes: List[Any] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return self.result.metrics.rounds_elapsed

    @property
    def complete(self) -> bool:
        full = (1 << len(self.rumors)) - 1
        return all(r == full for r in self.rumors)

    def termination_violations(self) -> Dict[str, int]:
        full = (1 << len(self.rumors)) - 1
        premature = sum(1 for r, t in zip(self.rumors, self.terminated_rounds) if t is not None and r != full)
        distinct = {t for t in self.terminated_rounds}
        return {"terminated_missing_rumor": premature,
                "distinct_termination_rounds": len(distinct),
                "unterminated": sum(1 for t in self.terminated_rounds if t is None)}


def _known_lat_lookup(res_holder):
    def lookup(x):
        return res_holder["views"][x].known_latencies
    return lookup


def _drive(g: LatencyGraph, program, seed: int, params: PipelineParams, latencies_known: bool,
           max_rounds: int, trace_level: str, initial_rumors=None) -> DriverOutcome:
    p = params.resolve(g.n)
    holder: Dict[str, Any] = {}
    extra = {"pipeline": p}
    if not latencies_known:
        extra["known_lat"] = _known_lat_lookup(holder)

    def wrapped(ctx):
        holder.setdefault("views", {})[ctx.id] = ctx.view
        return (yield from program(ctx))

    res, proto = _run_programs(g, wrapped, seed, p.n_hat, latencies_known, max_rounds, trace_level, extra,
                               initial_rumors)
    iterations = proto.shared.params.get("iterations", [])
    res.metrics.extra["iterations"] = list(iterations)
    res.metrics.extra["pipeline"] = {"n_hat": p.n_hat, "spanner_k": p.spanner_k, "rr_factor": p.rr_factor}
    if proto.shared.log:
        res.metrics.extra["notes"] = [list(x) for x in proto.shared.log[:20]]
    return DriverOutcome(res, [st.rumors for st in proto.states], [st.terminated_round for st in proto.states],
                         [st.status for st in proto.states], list(iterations), list(proto.shared.log))


def _record_iteration(ctx: Context, k: int, failed: bool) -> None:
    if ctx.id == 0:
        ctx.shared.params.setdefault("iterations", []).append(k)


def eid(g: LatencyGraph, d_guess: int, seed: int = 0, params: PipelineParams = PipelineParams(),
        max_rounds: int = 10_000_000, trace_level: str = "off") -> DriverOutcome:
    """Single EID pass with a fixed diameter guess (no termination check)."""

    def program(ctx):
        yield from eid_phase(ctx, d_guess)

    return _drive(g, program, seed, params, True, max_rounds, trace_level)


def general_eid(g: LatencyGraph, seed: int = 0, params: PipelineParams = PipelineParams(),
                latencies_known: bool = True, max_rounds: int = 10_000_000,
                trace_level: str = "off", rule: str = "closure") -> DriverOutcome:
    """Guess-and-double over EID; unknown latencies add a discovery pass per guess."""

    def program(ctx):
        k = 1
        while True:
            if not latencies_known:
                yield from discover_phase(ctx, k, k)
            yield from eid_phase(ctx, k)
            reach = ctx.shared.params["pipeline"].rr_factor * k
            failed = yield from termination_check_phase(ctx, k, _rr_again, reach, rule)
            _record_iteration(ctx, k, failed)
            if not failed:
                return
            k *= 2

    return _drive(g, program, seed, params, latencies_known, max_rounds, trace_level)


def path_discovery(g: LatencyGraph, seed: int = 0, max_rounds: int = 10_000_000,
                   trace_level: str = "off", rule: str = "closure") -> DriverOutcome:
    """Guess-and-double over the T(k) schedule with the termination check."""

    def program(ctx):
        k = 1
        while True:
            yield from t_sequence_phase(ctx, k)
            failed = yield from termination_check_phase(ctx, k, lambda c: t_sequence_phase(c, k), k, rule)
            _record_iteration(ctx, k, failed)
            if not failed:
                return
            k *= 2

    return _drive(g, program, seed, PipelineParams(), True, max_rounds, trace_level)


def termination_check(g: LatencyGraph, k: int, rumors: List[int], seed: int = 0,
                      broadcast: str = "t") -> DriverOutcome:
    """Run only the check on preset rumor sets; ``broadcast`` is ``t`` (T(k)) or ``rr``."""
    if broadcast not in ("t", "rr"):
        raise ValueError("broadcast must be 't' or 'rr'")

    full = (1 << g.n) - 1

    def program(ctx):
        if broadcast == "t":
            yield from termination_check_phase(ctx, k, lambda c: t_sequence_phase(c, k))
            return
        # preset rumor sets can be partial; the spanner is built from the full view
        saved = ctx.state.rumors
        ctx.state.rumors = full
        out = _local_out_edges(ctx, k)
        ctx.state.rumors = saved
        ctx.shared.out_lists[ctx.id] = tuple(out)
        yield Barrier("spanner")
        reach = ctx.shared.params["pipeline"].rr_factor * k
        ctx.state.log["rr"] = ([u for u, ell in out if ell <= reach],
                               rr_iterations(reach, ctx.shared.max_out_degree()))
        yield from termination_check_phase(ctx, k, _rr_again, reach)

    return _drive(g, program, seed, PipelineParams(), True, 10_000_000, "off", rumors)


def discover_latencies(g: LatencyGraph, d_guess: int, delta_guess: int, seed: int = 0):
    """Per-node map of learned latencies that are at most ``d_guess``."""
    holder = {}

    def program(ctx):
        holder[ctx.id] = ctx.view
        yield from discover_phase(ctx, d_guess, delta_guess)

    res, _ = _run_programs(g, program, seed, None, latencies_known=False)
    known = [{u: ell for u, ell in sorted(holder[v].known_latencies.items()) if ell <= d_guess}
             for v in range(g.n)]
    return res, known


# unified ---------------------------------------------------------------------------------
@dataclass
class UnifiedOutcome:
    push_pull_rounds: Optional[int]
    pipeline_rounds: Optional[int]
    winner: str
    push_pull: SimResult
    pipeline: DriverOutcome

    @property
    def rounds(self) -> Optional[int]:
        vals = [r for r in (self.push_pull_rounds, self.pipeline_rounds) if r is not None]
        return min(vals) if vals else None

    def to_dict(self) -> dict:
        return {"push_pull_rounds": self.push_pull_rounds, "pipeline_rounds": self.pipeline_rounds,
                "winner": self.winner, "rounds": self.rounds,
                "pipeline_iterations": self.pipeline.iterations}


def unified_dissemination(g: LatencyGraph, scenario: str = "known", seed: int = 0,
                          params: PipelineParams = PipelineParams(), max_rounds: int = 10_000_000) -> UnifiedOutcome:
    """All-to-all dissemination by push-pull and by the spanner pipeline, run independently."""
    if scenario not in ("known", "unknown"):
        raise ValueError("scenario must be 'known' or 'unknown'")
    pp = push_pull(g, None, seed, goal="all", max_rounds=max_rounds)
    pipe = general_eid(g, seed, params, latencies_known=(scenario == "known"), max_rounds=max_rounds)
    pp_rounds = pp.metrics.rounds_elapsed if pp.metrics.completed else None
    pipe_rounds = pipe.rounds if pipe.result.metrics.completed and pipe.complete else None
    if pp_rounds is None and pipe_rounds is None:
        winner = "none"
    elif pipe_rounds is None or (pp_rounds is not None and pp_rounds <= pipe_rounds):
        winner = "push-pull"
    else:
        winner = "spanner"
    return UnifiedOutcome(pp_rounds, pipe_rounds, winner, pp, pipe)
