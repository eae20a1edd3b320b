"""Target-set rules shared by the gadget generator and the guessing game."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import FrozenSet, Tuple, Union

Pair = Tuple[int, int]


@dataclass(frozen=True)
class Singleton:
    """One pair drawn uniformly from A x B."""


@dataclass(frozen=True)
class RandomP:
    """Each pair is included independently with probability ``p``."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"RandomP probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class Explicit:
    pairs: FrozenSet[Pair] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset((int(a), int(b)) for a, b in self.pairs))


Predicate = Union[Singleton, RandomP, Explicit]


def draw_target(predicate: Predicate, m: int, rng: random.Random) -> FrozenSet[Pair]:
    """Realize a target set over index pairs ``(a, b)`` with ``0 <= a, b < m``."""
    if isinstance(predicate, Singleton):
        return frozenset({(rng.randrange(m), rng.randrange(m))})
    if isinstance(predicate, RandomP):
        p = predicate.p
        return frozenset((a, b) for a in range(m) for b in range(m) if rng.random() < p)
    if isinstance(predicate, Explicit):
        for a, b in predicate.pairs:
            if not (0 <= a < m and 0 <= b < m):
                raise ValueError(f"explicit pair {(a, b)} outside {m}x{m} universe")
        return predicate.pairs
    raise TypeError(f"unknown predicate {predicate!r}")


def parse_predicate(text: str) -> Predicate:
    """Parse ``singleton``, ``random:<p>`` or ``explicit:a-b,a-b``."""
    text = text.strip().lower()
    if text == "singleton":
        return Singleton()
    if text.startswith("random"):
        _, _, p = text.partition(":")
        if not p:
            raise ValueError("random predicate needs a probability, e.g. random:0.25")
        if "/" in p:
            num, den = p.split("/")
            return RandomP(float(num) / float(den))
        return RandomP(float(p))
    if text.startswith("explicit"):
        _, _, body = text.partition(":")
        pairs = []
        for item in filter(None, body.split(",")):
            a, b = item.split("-")
            pairs.append((int(a), int(b)))
        return Explicit(frozenset(pairs))
    raise ValueError(f"unknown predicate {text!r}")
