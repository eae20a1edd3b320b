"""Deterministic tree gossip restricted to edges of latency <= ell, and the T(k) schedule."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from ..engine import SimConfig, SimResult, run
from ..graph import LatencyGraph, all_pairs_distances
from .program import Barrier, Context, Exchange, ProgramProtocol, Shared, Wait


def _lowest_bit(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _step(target: int, ell: int):
    # one tree-gossip step lasts exactly ell rounds
    yield Exchange(target)
    if ell > 1:
        yield Wait(ell - 1)


def dtg_program(ctx: Context, ell: int):
    """One ell-DTG invocation at this node.

    Each iteration links the smallest-id neighbor not yet in the invocation
    set, then runs push (newest link first) and pull (oldest first) with a
    fresh working set, then pull and push with another fresh working set.
    """
    st = ctx.state
    me = 1 << ctx.id
    targets = ctx.neighbor_mask(ell)
    st.dtg_set = me
    st.work = None
    links: List[int] = []
    while targets & ~st.dtg_set:
        links.append(_lowest_bit(targets & ~st.dtg_set))
        st.work = me
        for u in reversed(links):
            yield from _step(u, ell)
        for u in links:
            yield from _step(u, ell)
        first = st.work
        st.work = me
        for u in links:
            yield from _step(u, ell)
        for u in reversed(links):
            yield from _step(u, ell)
        st.dtg_set |= first | st.work
        st.work = None
    st.log.setdefault("dtg_links", []).append(len(links))


def dtg_phase(ctx: Context, ell: int, name: str = "dtg"):
    yield from dtg_program(ctx, ell)
    yield Barrier(f"{name}:{ell}")
    covered = ctx.state.dtg_set
    ctx.state.dtg_set = 0
    return covered


def t_sequence(k: int) -> List[int]:
    """DTG parameters of T(k): T(1) = [1], T(k) = T(k/2) + [k] + T(k/2)."""
    if k < 1 or k & (k - 1):
        raise ValueError(f"T(k) needs k to be a power of two, got {k}")
    if k == 1:
        return [1]
    half = t_sequence(k // 2)
    return half + [k] + half


def t_sequence_phase(ctx: Context, k: int):
    for ell in t_sequence(k):
        yield from dtg_phase(ctx, ell, name="t")


@dataclass
class GossipOutcome:
    result: SimResult
    rumors: List[int]

    @property
    def rounds(self) -> int:
        return self.result.metrics.rounds_elapsed

    def has(self, holder: int, origin: int) -> bool:
        return bool(self.rumors[holder] >> origin & 1)


def _run_programs(g: LatencyGraph, program, seed: int, n_hat: Optional[int], latencies_known: bool = True,
                  max_rounds: int = 10_000_000, trace_level: str = "off", params=None,
                  initial_rumors=None) -> Tuple[SimResult, ProgramProtocol]:
    shared = Shared(n_hat=n_hat or g.n * g.n, seed=seed, params=dict(params or {}))
    proto = ProgramProtocol(g, program, shared, initial_rumors)
    cfg = SimConfig(seed=seed, max_rounds=max_rounds, trace_level=trace_level, latencies_known=latencies_known)
    return run(g, proto, cfg), proto


def l_dtg(g: LatencyGraph, ell: int, seed: int = 0, trace_level: str = "off") -> GossipOutcome:
    if ell < 1:
        raise ValueError("ell must be >= 1")

    def program(ctx):
        yield from dtg_program(ctx, ell)

    res, proto = _run_programs(g, program, seed, None, trace_level=trace_level)
    return GossipOutcome(res, [st.rumors for st in proto.states])


def run_t_sequence(g: LatencyGraph, k: int, seed: int = 0, trace_level: str = "off") -> GossipOutcome:
    t_sequence(k)

    def program(ctx):
        yield from t_sequence_phase(ctx, k)

    res, proto = _run_programs(g, program, seed, None, trace_level=trace_level)
    return GossipOutcome(res, [st.rumors for st in proto.states])


def dtg_violations(g: LatencyGraph, ell: int, rumors: List[int]) -> List[Tuple[int, int]]:
    """Pairs of <=ell neighbors that did not mutually receive each other's rumor."""
    bad = []
    for u, v, lat in g.edges:
        if lat <= ell and not (rumors[u] >> v & 1 and rumors[v] >> u & 1):
            bad.append((u, v))
    return bad


def distance_violations(g: LatencyGraph, k: int, rumors: List[int],
                        dist: Optional[List[List[Optional[int]]]] = None) -> List[Tuple[int, int]]:
    """Pairs at weighted distance <= k lacking mutual rumor containment."""
    dist = dist or all_pairs_distances(g)
    bad = []
    for u in range(g.n):
        for v in range(u + 1, g.n):
            d = dist[u][v]
            if d is not None and d <= k and not (rumors[u] >> v & 1 and rumors[v] >> u & 1):
                bad.append((u, v))
    return bad
