"""Per-node generator programs driven by the round engine.

A node program is a generator that yields instructions:

* ``Exchange(u)``: initiate with neighbor ``u`` this round, resume next round;
* ``Wait(t)``: stay idle for ``t`` rounds;
* ``Barrier(name)``: pause until every still-running node reached a barrier
  (and, with ``drain=True``, no exchange of the current phase is in flight).

Barriers model phases whose lengths are globally known in a synchronous
system; the measured round counts are the actual phase lengths. When a
barrier releases, every program is stepped to its next instruction at once,
so per-phase initialisation is visible to all peers from the first round of
the new phase. Returning from the program terminates the node.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, Generator, List, NamedTuple, Optional

from ..engine import NodeView, Protocol, Simulation
from ..graph import LatencyGraph


class Exchange(NamedTuple):
    target: int


class Wait(NamedTuple):
    rounds: int


class Barrier(NamedTuple):
    name: str
    drain: bool = True


Program = Generator[Any, None, Any]


@dataclass
class RumorState:
    """Rumor bookkeeping of one node; rumor sets are bitmasks over node ids."""

    node: int
    rumors: int
    flag: bool = False
    status: str = "default"
    terminated_round: Optional[int] = None
    phase: int = 0
    # tree-gossip sets of the running invocation
    dtg_set: int = 0
    work: Optional[int] = None
    # termination-check payload
    checking: bool = False
    quiet: bool = False
    heard: FrozenSet[int] = frozenset()
    heard_from: int = 0
    heard_flag: bool = False
    failed_bit: bool = False
    probed: set = field(default_factory=set)
    log: Dict[str, Any] = field(default_factory=dict)

    def payload(self, initiating: bool):
        if initiating and self.work is not None:
            dtg = self.work
        else:
            dtg = self.dtg_set | (self.work or 0)
        rumors = 0 if self.checking or self.quiet else self.rumors
        return (rumors, self.phase, dtg, self.heard, self.heard_from, self.heard_flag, self.failed_bit)

    def absorb(self, payload, initiated: bool) -> None:
        rumors, phase, dtg, heard, heard_from, heard_flag, failed_bit = payload
        if not self.checking:
            self.rumors |= rumors
        if phase != self.phase:
            return
        if dtg:
            if initiated and self.work is not None:
                self.work |= dtg
            else:
                self.dtg_set |= dtg
        if heard and not heard <= self.heard:
            self.heard = self.heard | heard
        self.heard_from |= heard_from
        self.heard_flag = self.heard_flag or heard_flag
        self.failed_bit = self.failed_bit or failed_bit


class Context:
    """Handle given to a node program: its view, state and the shared run parameters."""

    __slots__ = ("view", "state", "shared", "g")

    def __init__(self, view: NodeView, state: RumorState, shared: "Shared", g: LatencyGraph):
        self.view = view
        self.state = state
        self.shared = shared
        self.g = g

    @property
    def id(self) -> int:
        return self.view.id

    @property
    def neighbors(self):
        return self.view.neighbors

    def neighbor_mask(self, max_latency: int) -> int:
        """Neighbors whose latency is known to this node and at most ``max_latency``."""
        mask = 0
        for u in self.view.neighbors:
            ell = self.view.known_latency(u)
            if ell is not None and ell <= max_latency:
                mask |= 1 << u
        return mask


@dataclass
class Shared:
    """Run-wide parameters every node is assumed to know, plus result slots."""

    n_hat: int
    seed: int = 0
    params: Dict[str, Any] = field(default_factory=dict)
    out_lists: Dict[int, tuple] = field(default_factory=dict)
    cache: Dict[Any, Any] = field(default_factory=dict)
    log: List[Any] = field(default_factory=list)

    def max_out_degree(self) -> int:
        return max((len(v) for v in self.out_lists.values()), default=0)


class ProgramProtocol(Protocol):
    def __init__(self, g: LatencyGraph, program: Callable[[Context], Program], shared: Shared,
                 initial_rumors: Optional[List[int]] = None):
        self.g = g
        self.program = program
        self.shared = shared
        self.initial_rumors = initial_rumors
        self.gens: List[Optional[Program]] = [None] * g.n
        self.states: List[Optional[RumorState]] = [None] * g.n
        self.held: Dict[int, Any] = {}
        self.at_barrier: Dict[int, Barrier] = {}
        self.buckets: Dict[int, List[int]] = defaultdict(list)
        self.terminated = 0
        self.phases: List[tuple] = []
        self._phase_start = 1

    # engine hooks -----------------------------------------------------------
    def init_node(self, view: NodeView) -> None:
        u = view.id
        rumors = 1 << u if self.initial_rumors is None else self.initial_rumors[u] | (1 << u)
        st = RumorState(u, rumors)
        view.state = st
        self.states[u] = st
        self.gens[u] = self.program(Context(view, st, self.shared, self.g))

    def start(self, sim: Simulation) -> None:
        for u in range(self.g.n):
            self._prime(u, 0)
        self._try_release(sim, 0)

    def polled_nodes(self, round_no, views):
        return sorted(self.buckets.pop(round_no, ()))

    def on_round(self, view: NodeView):
        u, r = view.id, view.round
        instr = self.held.pop(u) if u in self.held else self._advance(u, r)
        while True:
            if instr is None:
                return None
            if isinstance(instr, Exchange):
                self.buckets[r + 1].append(u)
                return instr.target
            if isinstance(instr, Wait):
                if instr.rounds <= 0:
                    instr = self._advance(u, r)
                    continue
                self.buckets[r + instr.rounds].append(u)
                return None
            if isinstance(instr, Barrier):
                self.at_barrier[u] = instr
                return None
            raise TypeError(f"node {u} yielded unknown instruction {instr!r}")

    def snapshot(self, view, initiating):
        return view.state.payload(initiating)

    def on_deliver(self, view, peer, payload, latency, initiated):
        view.state.absorb(payload, initiated)

    def is_done(self, view):
        return view.state.terminated_round is not None

    def finished(self, views):
        return self.terminated == self.g.n

    def after_round(self, sim: Simulation) -> None:
        self._try_release(sim, sim.round)

    def summary(self, sim):
        return {
            "phases": [list(p) for p in self.phases],
            "termination_rounds": sorted({st.terminated_round for st in self.states
                                          if st.terminated_round is not None}),
        }

    # scheduling ---------------------------------------------------------------
    def _advance(self, u: int, r: int):
        try:
            return next(self.gens[u])
        except StopIteration:
            self.states[u].terminated_round = r
            self.terminated += 1
            return None

    def _prime(self, u: int, r: int) -> None:
        """Step a program between rounds: its next instruction runs in round r+1."""
        instr = self._advance(u, r)
        while isinstance(instr, Wait) and instr.rounds <= 0:
            instr = self._advance(u, r)
        if instr is None:
            return
        if isinstance(instr, Exchange):
            self.held[u] = instr
            self.buckets[r + 1].append(u)
        elif isinstance(instr, Wait):
            self.buckets[r + 1 + instr.rounds].append(u)
        elif isinstance(instr, Barrier):
            self.at_barrier[u] = instr
        else:
            raise TypeError(f"node {u} yielded unknown instruction {instr!r}")

    def _try_release(self, sim: Simulation, r: int) -> None:
        while True:
            active = self.g.n - self.terminated
            if active == 0 or len(self.at_barrier) != active:
                return
            drain = any(b.drain for b in self.at_barrier.values())
            if drain and sim.pending_in_epoch() > 0:
                return
            names = sorted({b.name for b in self.at_barrier.values()})
            self.phases.append(("/".join(names), self._phase_start, r))
            self._phase_start = r + 1
            sim.epoch += 1
            released = sorted(self.at_barrier)
            self.at_barrier.clear()
            for u in released:
                self.states[u].phase += 1
            for u in released:
                self._prime(u, r)
