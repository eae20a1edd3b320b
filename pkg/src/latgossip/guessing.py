"""Guessing game on A x B, two strategies, the gossip-to-guessing mirror and fit helpers.

Pairs are index pairs ``(a, b)`` with ``0 <= a, b < m``. When a round's
guesses hit target pairs, every target pair sharing a B-component with a hit
is removed. The game halts once the target set is empty.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .engine import SimResult
from .graph import Gadget
from .targets import Explicit, Pair, Predicate, RandomP, Singleton, draw_target


class GuessError(ValueError):
    """A guess set broke the rules of the game."""


@dataclass
class RoundRecord:
    round: int
    guesses: FrozenSet[Pair]
    revealed: FrozenSet[Pair]
    removed: int


@dataclass
class GuessingGame:
    m: int
    target: FrozenSet[Pair]
    round: int = 0
    history: List[RoundRecord] = field(default_factory=list)
    initial_target: FrozenSet[Pair] = frozenset()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        self.target = frozenset(self.target)
        if not self.initial_target:
            self.initial_target = self.target
        self._columns: Dict[int, Set[int]] = {}
        for a, b in self.target:
            if not (0 <= a < self.m and 0 <= b < self.m):
                raise GuessError(f"target pair {(a, b)} outside the {self.m}x{self.m} universe")
            self._columns.setdefault(b, set()).add(a)

    @property
    def halted(self) -> bool:
        return not self._columns

    def target_b(self) -> FrozenSet[int]:
        return frozenset(self._columns)

    def submit(self, guesses: Iterable[Pair]) -> FrozenSet[Pair]:
        """Play one round; returns the revealed hits."""
        if self.halted:
            raise GuessError("game already halted")
        xs = frozenset((int(a), int(b)) for a, b in guesses)
        if len(xs) > 2 * self.m:
            raise GuessError(f"{len(xs)} guesses exceed the per-round limit 2m = {2 * self.m}")
        for a, b in xs:
            if not (0 <= a < self.m and 0 <= b < self.m):
                raise GuessError(f"guess {(a, b)} outside the {self.m}x{self.m} universe")
        cols = self._columns
        revealed = frozenset((a, b) for a, b in xs if a in cols.get(b, ()))
        removed = 0
        for b in {b for _, b in revealed}:
            removed += len(cols.pop(b))
        self.round += 1
        if removed:
            self.target = frozenset((a, b) for b, col in cols.items() for a in col)
        self.history.append(RoundRecord(self.round, xs, revealed, removed))
        return revealed


@dataclass(frozen=True)
class SubmitResult:
    revealed: FrozenSet[Pair]
    game: GuessingGame
    halted: bool


def new_game(m: int, predicate: Predicate, seed: int = 0) -> GuessingGame:
    if m < 1:
        raise ValueError("m must be >= 1")
    if isinstance(predicate, RandomP) and predicate.p <= 0:
        raise ValueError(f"RandomP probability must lie in (0, 1], got {predicate.p}")
    return GuessingGame(m, draw_target(predicate, m, random.Random(seed)))


def submit(game: GuessingGame, guesses: Iterable[Pair]) -> SubmitResult:
    revealed = game.submit(guesses)
    return SubmitResult(revealed, game, game.halted)


def next_target(target: FrozenSet[Pair], guesses: Iterable[Pair]) -> FrozenSet[Pair]:
    """Reference form of the update: drop every target pair whose B-component was hit."""
    hits_b = {b for a, b in guesses if (a, b) in target}
    return frozenset((a, b) for a, b in target if b not in hits_b)


# strategies ---------------------------------------------------------------------
def strategy_random_per_endpoint(game: GuessingGame, seed: int = 0, max_rounds: int = 1_000_000) -> int:
    """Each a guesses a uniform b and each b a uniform a, every round."""
    rng = random.Random(seed)
    m = game.m
    while not game.halted:
        if game.round >= max_rounds:
            raise RuntimeError(f"random strategy did not halt within {max_rounds} rounds")
        xs = {(a, rng.randrange(m)) for a in range(m)}
        xs.update((rng.randrange(m), b) for b in range(m))
        game.submit(xs)
    return game.round


def strategy_adaptive_exhaustive(game: GuessingGame) -> int:
    """Never repeat a guess; spread 2m guesses over B-components not yet hit.

    Guesses go round-robin over the open components (increasing b), each
    component trying its a values in increasing order. A component is closed
    once hit or once all m of its pairs were tried.
    """
    m = game.m
    tried = [0] * m
    open_b = list(range(m))
    while not game.halted:
        if not open_b:
            raise RuntimeError("adaptive strategy exhausted A x B without halting")
        xs = []
        budget = 2 * m
        while budget and open_b:
            progressed = False
            for b in open_b:
                if budget and tried[b] < m:
                    xs.append((tried[b], b))
                    tried[b] += 1
                    budget -= 1
                    progressed = True
            if not progressed:
                break
        hit_b = {b for _, b in game.submit(xs)}
        open_b = [b for b in open_b if b not in hit_b and tried[b] < m]
    return game.round


STRATEGIES: Dict[str, Callable[..., int]] = {
    "random": strategy_random_per_endpoint,
    "adaptive": lambda game, seed=0: strategy_adaptive_exhaustive(game),
}


def play(m: int, predicate: Predicate, strategy: str, seed: int) -> int:
    """One trial; the target and the strategy draw from separate streams of ``seed``."""
    game = new_game(m, predicate, seed)
    return STRATEGIES[strategy](game, seed=seed + 1)


# gossip mirrored as guessing ----------------------------------------------------------
@dataclass
class MirrorReport:
    completion_round: Optional[int]
    halting_round: Optional[int]
    guesses: int
    max_guesses_per_round: int
    premise_met: bool
    transcript: List[Tuple[int, List[Pair], List[Pair]]]

    @property
    def sound(self) -> bool:
        """Completion before any slow edge could deliver implies the game halted no later."""
        if not self.premise_met:
            return True
        return self.halting_round is not None and self.halting_round <= self.completion_round

    def to_dict(self) -> dict:
        return {"completion_round": self.completion_round, "halting_round": self.halting_round,
                "guesses": self.guesses, "max_guesses_per_round": self.max_guesses_per_round,
                "premise_met": self.premise_met, "sound": self.sound}


def gossip_as_guessing(gadget: Gadget, algorithm: Callable[[Gadget, int], SimResult], seed: int = 0) -> MirrorReport:
    """Run ``algorithm`` on the gadget and replay its cross-edge initiations as guesses.

    ``algorithm(gadget, seed)`` must return a full-trace result. Round r's
    guesses are the cross edges initiated in round r, as ``(a, b)`` with a on
    the left and b the right node's index.
    """
    res = algorithm(gadget, seed)
    m = gadget.spec.m
    per_round: Dict[int, Set[Pair]] = {}
    for ev in res.trace:
        u, v = sorted((ev.initiator, ev.responder))
        if gadget.is_cross(u, v):
            per_round.setdefault(ev.start_round, set()).add((u, v - m))
    game = GuessingGame(m, gadget.target)
    halting = 0 if game.halted else None
    transcript = []
    last = max(per_round, default=0)
    for r in range(1, last + 1):
        if game.halted:
            break
        xs = per_round.get(r, set())
        revealed = game.submit(xs)
        transcript.append((r, sorted(xs), sorted(revealed)))
        if game.halted:
            halting = r
    completion = res.metrics.rounds_elapsed if res.metrics.completed else None
    premise = completion is not None and completion < gadget.spec.hi
    return MirrorReport(completion, halting, sum(len(x) for x in per_round.values()),
                        max((len(x) for x in per_round.values()), default=0), premise, transcript)


# fit helpers ---------------------------------------------------------------------
@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> LinearFit:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - float((resid ** 2).sum()) / ss_tot
    return LinearFit(float(slope), float(intercept), r2)


@dataclass(frozen=True)
class ShapeFit:
    """Best constant c for y ~ c * f(x) (geometric mean of ratios) and the worst deviation factor."""

    constant: float
    worst_factor: float

    def within(self, factor: float) -> bool:
        return self.worst_factor <= factor


def shape_fit(xs: Sequence[float], ys: Sequence[float], shape: Callable[[float], float]) -> ShapeFit:
    ratios = [y / shape(x) for x, y in zip(xs, ys)]
    if any(r <= 0 for r in ratios):
        raise ValueError("shape fit needs positive values")
    c = math.exp(sum(math.log(r) for r in ratios) / len(ratios))
    worst = max(max(r / c, c / r) for r in ratios)
    return ShapeFit(c, worst)
