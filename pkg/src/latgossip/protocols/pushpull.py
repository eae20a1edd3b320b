"""Uniform push-pull gossip: every round each node calls a random neighbor."""
from __future__ import annotations

from typing import Optional

from ..engine import Protocol, SimConfig, SimResult, run
from ..graph import LatencyGraph

GOALS = ("broadcast", "all", "local")


class PushPull(Protocol):
    """Rumor sets are bitmasks; every node starts with its own rumor.

    ``goal`` selects the completion test: ``broadcast`` (everyone holds the
    source rumor), ``all`` (everyone holds every rumor) or ``local`` (everyone
    holds the rumors of all its neighbors).
    """

    def __init__(self, g: LatencyGraph, source: Optional[int] = 0, goal: str = "broadcast"):
        if goal not in GOALS:
            raise ValueError(f"goal must be one of {GOALS}")
        if goal == "broadcast" and source is None:
            raise ValueError("broadcast needs a source")
        self.g = g
        self.source = source
        self.goal = goal
        self.full = (1 << g.n) - 1
        self.nbr_masks = [sum(1 << v for v in g.neighbors(u)) for u in range(g.n)]
        self._done = 0

    def init_node(self, view):
        view.state = 1 << view.id

    def on_round(self, view):
        if not view.neighbors:
            return None
        return view.neighbors[view.rng.randrange(len(view.neighbors))]

    def snapshot(self, view, initiating):
        return view.state

    def on_deliver(self, view, peer, payload, latency, initiated):
        view.state |= payload

    def is_done(self, view):
        s = view.state
        if self.goal == "broadcast":
            return bool(s >> self.source & 1)
        if self.goal == "all":
            return s == self.full
        m = self.nbr_masks[view.id]
        return s & m == m


def push_pull(g: LatencyGraph, source: Optional[int] = 0, seed: int = 0, goal: str = "broadcast",
              max_rounds: int = 1_000_000, trace_level: str = "off") -> SimResult:
    cfg = SimConfig(seed=seed, max_rounds=max_rounds, trace_level=trace_level, latencies_known=False)
    return run(g, PushPull(g, source, goal), cfg)
