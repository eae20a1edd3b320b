"""Synchronous round simulator with non-blocking latency-delayed exchanges.

Each round ``r`` runs three steps:

1. every exchange whose ``deliver_round == r`` completes; both endpoints merge
   the snapshot the other side had at ``start_round``;
2. every node's hook may initiate at most one exchange with a neighbor;
3. the clock advances.

The run stops when the protocol reports completion (checked after step 1, and
once before round 1) or when ``max_rounds`` is reached.
"""
from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

from .graph import LatencyGraph, latency_class

TRACE_LEVELS = ("off", "metrics", "full")


class ProtocolViolation(RuntimeError):
    """A hook broke the communication model."""


class LatencyHidden(ProtocolViolation):
    def __init__(self, node: int, neighbor: int):
        super().__init__(f"node {node} read the undisclosed latency of edge ({node},{neighbor})")


@dataclass(frozen=True)
class ExchangeEvent:
    initiator: int
    responder: int
    latency: int
    start_round: int
    deliver_round: int
    payload_out: Any = None
    payload_in: Any = None
    epoch: int = 0

    def trace_line(self) -> str:
        return f"{self.start_round} {self.initiator} {self.responder} {self.latency} {self.deliver_round}"


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    max_rounds: int = 100_000
    trace_level: str = "off"
    latencies_known: bool = True

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.trace_level not in TRACE_LEVELS:
            raise ValueError(f"trace_level must be one of {TRACE_LEVELS}")


@dataclass
class Metrics:
    rounds_elapsed: int = 0
    exchanges_initiated: int = 0
    activations_by_class: Dict[int, int] = field(default_factory=dict)
    completion_round: Dict[int, int] = field(default_factory=dict)
    completed: bool = False
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rounds_elapsed": self.rounds_elapsed,
            "exchanges_initiated": self.exchanges_initiated,
            "activations_by_class": {str(k): v for k, v in sorted(self.activations_by_class.items())},
            "completion_round": {str(k): v for k, v in sorted(self.completion_round.items())},
            "completed": self.completed,
            "extra": self.extra,
        }


class NodeView:
    """What a node may see: its id, neighbor ids, known latencies, own state and rng."""

    __slots__ = ("id", "neighbors", "round", "state", "rng", "_adj", "_known", "_reveal_all")

    def __init__(self, node: int, g: LatencyGraph, rng: random.Random, reveal_all: bool):
        self.id = node
        self._adj = dict(g.adjacency(node))
        self.neighbors = tuple(sorted(self._adj))
        self.round = 0
        self.state: Any = None
        self.rng = rng
        self._reveal_all = reveal_all
        self._known: Dict[int, int] = dict(self._adj) if reveal_all else {}

    def latency(self, neighbor: int) -> int:
        if neighbor not in self._adj:
            raise ProtocolViolation(f"node {self.id} has no neighbor {neighbor}")
        if neighbor not in self._known:
            raise LatencyHidden(self.id, neighbor)
        return self._known[neighbor]

    def known_latency(self, neighbor: int) -> Optional[int]:
        return self._known.get(neighbor)

    @property
    def known_latencies(self) -> Dict[int, int]:
        return dict(self._known)

    def _learn(self, neighbor: int) -> None:
        self._known[neighbor] = self._adj[neighbor]


class Protocol:
    """Hook contract. Subclasses override what they need.

    ``on_round`` returns a neighbor id to initiate with, or ``None``.
    ``snapshot`` is taken for both endpoints when an exchange starts.
    """

    def init_node(self, view: NodeView) -> None:
        view.state = None

    def on_round(self, view: NodeView) -> Optional[int]:
        return None

    def start(self, sim: "Simulation") -> None:
        """Called once after every node was initialized, before round 1."""

    def snapshot(self, view: NodeView, initiating: bool) -> Any:
        return None

    def on_deliver(self, view: NodeView, peer: int, payload: Any, latency: int, initiated: bool) -> None:
        pass

    def is_done(self, view: NodeView) -> bool:
        return False

    def finished(self, views: Sequence[NodeView]) -> bool:
        return all(self.is_done(v) for v in views)

    def polled_nodes(self, round_no: int, views: Sequence[NodeView]) -> Iterable[int]:
        return range(len(views))

    def after_round(self, sim: "Simulation") -> None:
        pass

    def summary(self, sim: "Simulation") -> Dict[str, Any]:
        return {}


class Simulation:
    def __init__(self, g: LatencyGraph, protocol: Protocol, cfg: SimConfig):
        self.g = g
        self.protocol = protocol
        self.cfg = cfg
        self.round = 0
        self.epoch = 0
        self.views = [
            NodeView(u, g, random.Random(f"{cfg.seed}:node:{u}"), cfg.latencies_known) for u in range(g.n)
        ]
        self.pending: Dict[int, List[ExchangeEvent]] = defaultdict(list)
        self.in_flight = 0
        self.in_flight_epoch: Dict[int, int] = defaultdict(int)
        self.metrics = Metrics()
        self.trace: List[ExchangeEvent] = []

    def pending_in_epoch(self, epoch: Optional[int] = None) -> int:
        return self.in_flight_epoch[self.epoch if epoch is None else epoch]

    def _deliver(self, r: int) -> None:
        batch = self.pending.pop(r, ())
        proto = self.protocol
        for ev in batch:
            a, b = self.views[ev.initiator], self.views[ev.responder]
            if not self.cfg.latencies_known:
                a._learn(ev.responder)
                b._learn(ev.initiator)
            proto.on_deliver(a, ev.responder, ev.payload_in, ev.latency, True)
            proto.on_deliver(b, ev.initiator, ev.payload_out, ev.latency, False)
            self.in_flight -= 1
            self.in_flight_epoch[ev.epoch] -= 1

    def _record_completion(self, r: int) -> None:
        done = self.metrics.completion_round
        for v in self.views:
            if v.id not in done and self.protocol.is_done(v):
                done[v.id] = r

    def run(self) -> "SimResult":
        proto, g, m = self.protocol, self.g, self.metrics
        for v in self.views:
            proto.init_node(v)
        proto.start(self)
        self._record_completion(0)
        if proto.finished(self.views):
            m.completed = True
            return self._result()
        full = self.cfg.trace_level == "full"
        per_round = [] if self.cfg.trace_level != "off" else None
        for r in range(1, self.cfg.max_rounds + 1):
            self.round = r
            for v in self.views:
                v.round = r
            self._deliver(r)
            self._record_completion(r)
            m.rounds_elapsed = r
            if proto.finished(self.views):
                m.completed = True
                break
            initiated = set()
            for u in proto.polled_nodes(r, self.views):
                view = self.views[u]
                target = proto.on_round(view)
                if target is None:
                    continue
                if u in initiated:
                    raise ProtocolViolation(f"node {u} initiated twice in round {r}")
                initiated.add(u)
                if isinstance(target, (list, tuple, set)):
                    raise ProtocolViolation(f"node {u} attempted {len(target)} initiations in round {r}")
                if not g.has_edge(u, target):
                    raise ProtocolViolation(f"node {u} initiated toward non-neighbor {target} in round {r}")
                ell = g.latency(u, target)
                ev = ExchangeEvent(u, target, ell, r, r + ell,
                                   proto.snapshot(view, True), proto.snapshot(self.views[target], False),
                                   self.epoch)
                self.pending[r + ell].append(ev)
                self.in_flight += 1
                self.in_flight_epoch[self.epoch] += 1
                m.exchanges_initiated += 1
                c = latency_class(ell)
                m.activations_by_class[c] = m.activations_by_class.get(c, 0) + 1
                if full:
                    self.trace.append(ev)
            if per_round is not None:
                per_round.append(m.exchanges_initiated)
            proto.after_round(self)
            if proto.finished(self.views):
                self._record_completion(r)
                m.completed = True
                break
        if per_round is not None:
            m.extra["cumulative_initiations"] = per_round
        return self._result()

    def _result(self) -> "SimResult":
        self.metrics.extra.update(self.protocol.summary(self))
        return SimResult(self.metrics, [v.state for v in self.views], self.trace, self.views)


@dataclass
class SimResult:
    metrics: Metrics
    states: List[Any]
    trace: List[ExchangeEvent]
    views: List[NodeView] = field(repr=False)

    def trace_lines(self) -> List[str]:
        return [ev.trace_line() for ev in self.trace]


def run(g: LatencyGraph, protocol: Protocol, cfg: Optional[SimConfig] = None) -> SimResult:
    return Simulation(g, protocol, cfg or SimConfig()).run()
