"""Weight-ell, critical and average conductance by exact cut enumeration.

Cuts are enumerated as bitmasks over nodes ``0..n-2`` (node ``n-1`` always sits
on the complement side), so each unordered proper cut appears exactly once.
All minima are taken with integer cross-multiplication and reported as
``Fraction``; ties go to the smallest bitmask.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .graph import Cut, LatencyGraph, latency_class, make_cut, side_from_mask

DEFAULT_CAP = 20
_CHUNK = 1 << 14
_INT64_SAFE = 1 << 62


class EnumerationCapExceeded(ValueError):
    def __init__(self, n: int, cap: int):
        super().__init__(
            f"exact cut enumeration refused for n={n} > cap={cap}; "
            "use estimate_conductance (sampled upper bound) or analyze(..., approx=True)"
        )


def _validate(g: LatencyGraph, cap: int) -> None:
    if g.n < 2:
        raise ValueError("conductance needs at least two nodes")
    if g.n > cap:
        raise EnumerationCapExceeded(g.n, cap)
    isolated = [u for u in range(g.n) if g.degree(u) == 0]
    if isolated:
        raise ValueError(f"node {isolated[0]} is isolated; volume-based conductance is undefined")


def _cut_chunks(g: LatencyGraph, chunk: int = _CHUNK):
    """Yield ``(masks, min_volume, crossing)`` blocks over all proper cuts."""
    n = g.n
    deg = np.array([g.degree(u) for u in range(n)], dtype=np.int64)
    total_vol = int(deg.sum())
    eu = np.array([e[0] for e in g.edges], dtype=np.int64)
    ev = np.array([e[1] for e in g.edges], dtype=np.int64)
    bits = np.arange(n, dtype=np.int64)
    top = 1 << (n - 1)
    for start in range(1, top, chunk):
        masks = np.arange(start, min(start + chunk, top), dtype=np.int64)
        member = ((masks[:, None] >> bits) & 1).astype(bool)
        vol_u = member.astype(np.int64) @ deg
        min_vol = np.minimum(vol_u, total_vol - vol_u)
        crossing = member[:, eu] != member[:, ev]
        yield masks, min_vol, crossing


class _ExactArgMin:
    """Running exact argmin of num/den over chunks presented in ascending mask order."""

    def __init__(self):
        self.num: Optional[int] = None
        self.den: Optional[int] = None
        self.mask: Optional[int] = None

    def update(self, nums: np.ndarray, dens: np.ndarray, masks: np.ndarray) -> None:
        best = 0
        while True:
            diff = nums * dens[best] - nums[best] * dens
            neg = np.flatnonzero(diff < 0)
            if neg.size == 0:
                break
            best = int(neg[np.argmin(diff[neg])])
        i = int(np.flatnonzero(diff == 0)[0])
        num, den, mask = int(nums[i]), int(dens[i]), int(masks[i])
        if self.num is None or num * self.den < self.num * den:
            self.num, self.den, self.mask = num, den, mask

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den)


def phi_ell_cut(g: LatencyGraph, cut: Cut, ell: int) -> Fraction:
    fast = sum(1 for x in cut.cut_latencies if x <= ell)
    return Fraction(fast, cut.min_volume)


def avg_cut_value(g: LatencyGraph, cut: Cut) -> Fraction:
    total = sum(Fraction(k, 2 ** i) for i, k in cut.class_counts.items())
    return total / cut.min_volume


def phi_ell_many(g: LatencyGraph, ells: Iterable[int], cap: int = DEFAULT_CAP) -> Dict[int, Tuple[Fraction, Cut]]:
    """Exact weight-ell conductance for several thresholds in one enumeration pass."""
    _validate(g, cap)
    ells = sorted(set(int(x) for x in ells))
    lat = np.array([e[2] for e in g.edges], dtype=np.int64)
    selectors = np.stack([(lat <= ell) for ell in ells], axis=1).astype(np.int64)
    trackers = [_ExactArgMin() for _ in ells]
    for masks, min_vol, crossing in _cut_chunks(g):
        counts = crossing.astype(np.int64) @ selectors
        for j, tr in enumerate(trackers):
            tr.update(counts[:, j], min_vol, masks)
    return {ell: (tr.value, make_cut(g, side_from_mask(tr.mask))) for ell, tr in zip(ells, trackers)}


def phi_ell_exact(g: LatencyGraph, ell: int, cap: int = DEFAULT_CAP) -> Tuple[Fraction, Cut]:
    return phi_ell_many(g, [ell], cap)[int(ell)]


def critical_conductance(g: LatencyGraph, cap: int = DEFAULT_CAP) -> Tuple[Fraction, int]:
    phi_star, ell_star, _ = _critical_from(phi_ell_many(g, g.latencies(), cap))
    return phi_star, ell_star


def _critical_from(table: Dict[int, Tuple[Fraction, Cut]]):
    best = None
    for ell in sorted(table):
        phi, cut = table[ell]
        if best is None or phi / ell > best[0] / best[1]:
            best = (phi, ell, cut)
    return best


def avg_conductance(g: LatencyGraph, cap: int = DEFAULT_CAP) -> Tuple[Fraction, Cut]:
    _validate(g, cap)
    classes = [latency_class(e[2]) for e in g.edges]
    top = max(classes)
    w = [1 << (top - c) for c in classes]
    # fall back to Python ints when cross products could overflow int64
    dtype = np.int64 if sum(w) * 2 * g.num_edges < _INT64_SAFE else object
    weights = np.array(w, dtype=dtype)
    tracker = _ExactArgMin()
    for masks, min_vol, crossing in _cut_chunks(g):
        nums = crossing.astype(dtype) @ weights
        tracker.update(nums, min_vol.astype(dtype), masks)
    value = Fraction(tracker.num, tracker.den * (1 << top))
    return value, make_cut(g, side_from_mask(tracker.mask))


def count_nonempty_classes(g: LatencyGraph) -> int:
    return len({latency_class(ell) for _, _, ell in g.edges})


# edge-multiplicity graph ------------------------------------------------------------
@dataclass(frozen=True)
class Multigraph:
    """Vertex set ``0..n-1``, unit-multiplicity edges and per-node self-loop counts."""

    n: int
    edges: Tuple[Tuple[int, int], ...]
    loops: Tuple[int, ...]

    def volume(self, u: int) -> int:
        return sum(1 for a, b in self.edges if u in (a, b)) + self.loops[u]


def edge_induced_graph(g: LatencyGraph, ell: int) -> Multigraph:
    kept = tuple((u, v) for u, v, lat in g.edges if lat <= ell)
    fast_deg = [0] * g.n
    for u, v in kept:
        fast_deg[u] += 1
        fast_deg[v] += 1
    loops = tuple(g.degree(u) - fast_deg[u] for u in range(g.n))
    return Multigraph(g.n, kept, loops)


def multigraph_conductance(mg: Multigraph, cap: int = DEFAULT_CAP) -> Tuple[Fraction, int]:
    """Classical conductance of a multigraph with self-loops counted once in volume.

    Uses a multiplicity-matrix formulation (cut = x^T M (1-x)), independent of
    the edge-list path used by ``phi_ell_many``. Returns the value and argmin mask.
    """
    n = mg.n
    if n < 2:
        raise ValueError("conductance needs at least two nodes")
    if n > cap:
        raise EnumerationCapExceeded(n, cap)
    mult = np.zeros((n, n), dtype=np.int64)
    for u, v in mg.edges:
        mult[u, v] += 1
        mult[v, u] += 1
    vol = mult.sum(axis=1) + np.array(mg.loops, dtype=np.int64)
    if (vol == 0).any():
        raise ValueError("zero-volume node in multigraph")
    total = int(vol.sum())
    bits = np.arange(n, dtype=np.int64)
    best: Optional[Tuple[Fraction, int]] = None
    top = 1 << (n - 1)
    for start in range(1, top, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, top), dtype=np.int64)
        x = ((masks[:, None] >> bits) & 1).astype(np.int64)
        cut = ((x @ mult) * (1 - x)).sum(axis=1)
        vu = x @ vol
        for mask, c, v in zip(masks.tolist(), cut.tolist(), vu.tolist()):
            val = Fraction(c, min(v, total - v))
            if best is None or val < best[0]:
                best = (val, mask)
    return best


# relation check -------------------------------------------------------------------
@dataclass(frozen=True)
class RelationReport:
    phi_star: Fraction
    ell_star: int
    phi_avg: Fraction
    num_classes: int
    lower: Fraction
    upper: Fraction
    lower_holds: bool
    upper_holds: bool

    @property
    def passed(self) -> bool:
        return self.lower_holds and self.upper_holds

    @property
    def boundary_hits(self) -> List[str]:
        hits = []
        if self.lower == self.phi_avg:
            hits.append("lower")
        if self.upper == self.phi_avg:
            hits.append("upper")
        return hits


def relation_from(phi_star: Fraction, ell_star: int, phi_avg: Fraction, num_classes: int) -> RelationReport:
    lower = phi_star / (2 * ell_star)
    upper = num_classes * phi_star / ell_star
    return RelationReport(phi_star, ell_star, phi_avg, num_classes, lower, upper,
                          lower < phi_avg, phi_avg < upper)


def check_relation(g: LatencyGraph, cap: int = DEFAULT_CAP) -> RelationReport:
    phi_star, ell_star = critical_conductance(g, cap)
    phi_avg, _ = avg_conductance(g, cap)
    return relation_from(phi_star, ell_star, phi_avg, count_nonempty_classes(g))


# sampled estimator ------------------------------------------------------------------
@dataclass(frozen=True)
class Estimate:
    """Upper bound on phi_ell(G) from the best cut found by sampling plus local search."""

    ell: int
    value: Fraction
    side: Tuple[int, ...]
    approximate: bool = True


def _local_search(g: LatencyGraph, ell: int, side: set, rng: random.Random) -> Tuple[Fraction, set]:
    n = g.n
    total = 2 * g.num_edges
    in_side = [False] * n
    for v in side:
        in_side[v] = True
    vol = sum(g.degree(v) for v in side)
    cut = sum(1 for u, v, lat in g.edges if lat <= ell and in_side[u] != in_side[v])

    def value(c, vu):
        return Fraction(c, min(vu, total - vu))

    cur = value(cut, vol)
    order = list(range(n))
    improved = True
    while improved:
        improved = False
        rng.shuffle(order)
        for x in order:
            size = len(side)
            if (in_side[x] and size == 1) or (not in_side[x] and size == n - 1):
                continue
            delta = 0
            for y, lat in g.adjacency(x):
                if lat <= ell:
                    delta += 1 if in_side[y] == in_side[x] else -1
            new_vol = vol - g.degree(x) if in_side[x] else vol + g.degree(x)
            cand = value(cut + delta, new_vol)
            if cand < cur:
                cur, cut, vol = cand, cut + delta, new_vol
                in_side[x] = not in_side[x]
                if in_side[x]:
                    side.add(x)
                else:
                    side.discard(x)
                improved = True
    return cur, side


def estimate_phi_ell(g: LatencyGraph, ell: int, samples: int = 32, seed: int = 0) -> Estimate:
    """Sampled upper bound on phi_ell(G); labeled approximate, never a certificate."""
    if g.n < 2:
        raise ValueError("conductance needs at least two nodes")
    rng = random.Random(f"estimate:{seed}:{ell}")
    starts: List[set] = [{v} for v in range(g.n)]
    nodes = list(range(g.n))
    for _ in range(samples):
        rng.shuffle(nodes)
        starts.append(set(nodes[: g.n // 2]))
    best: Optional[Tuple[Fraction, Tuple[int, ...]]] = None
    for start in starts:
        val, side = _local_search(g, ell, set(start), rng)
        key = tuple(sorted(side))
        if best is None or val < best[0] or (val == best[0] and key < best[1]):
            best = (val, key)
    return Estimate(ell, best[0], best[1])


def estimate_critical(g: LatencyGraph, samples: int = 32, seed: int = 0) -> Tuple[Fraction, int, Dict[int, Estimate]]:
    table = {ell: estimate_phi_ell(g, ell, samples, seed) for ell in g.latencies()}
    best = None
    for ell in sorted(table):
        phi = table[ell].value
        if best is None or phi / ell > best[0] / best[1]:
            best = (phi, ell)
    return best[0], best[1], table


# full report --------------------------------------------------------------------------
@dataclass
class ConductanceReport:
    phi_ell: Dict[int, Fraction]
    phi_star: Fraction
    ell_star: int
    phi_avg: Optional[Fraction]
    num_classes_L: int
    witnesses: Dict[str, Tuple[int, ...]]
    relation: Optional[RelationReport]
    exact: bool = True
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def q(x):
            return None if x is None else f"{x.numerator}/{x.denominator}"

        out = {
            "exact": self.exact,
            "ell_range": "inclusive of realized latencies 1..max",
            "phi_ell": {str(k): q(v) for k, v in sorted(self.phi_ell.items())},
            "phi_star": q(self.phi_star),
            "ell_star": self.ell_star,
            "phi_avg": q(self.phi_avg),
            "L": self.num_classes_L,
            "witnesses": {k: list(v) for k, v in sorted(self.witnesses.items())},
            "notes": list(self.notes),
        }
        if self.relation is not None:
            r = self.relation
            out["relation"] = {
                "lower": q(r.lower), "phi_avg": q(r.phi_avg), "upper": q(r.upper),
                "lower_holds": r.lower_holds, "upper_holds": r.upper_holds,
                "passed": r.passed, "boundary_hits": r.boundary_hits,
            }
        return out


def analyze(g: LatencyGraph, cap: int = DEFAULT_CAP, approx: bool = False, seed: int = 0,
            samples: int = 32) -> ConductanceReport:
    """Full conductance report; exact when ``n <= cap``, otherwise needs ``approx=True``."""
    if g.n <= cap:
        table = phi_ell_many(g, g.latencies(), cap)
        phi_star, ell_star, star_cut = _critical_from(table)
        phi_avg, avg_cut = avg_conductance(g, cap)
        L = count_nonempty_classes(g)
        witnesses = {f"phi_{ell}": tuple(sorted(cut.side)) for ell, (_, cut) in table.items()}
        witnesses["phi_star"] = tuple(sorted(star_cut.side))
        witnesses["phi_avg"] = tuple(sorted(avg_cut.side))
        notes = []
        rel = relation_from(phi_star, ell_star, phi_avg, L)
        if rel.boundary_hits:
            notes.append("relation bound attained with equality: " + ",".join(rel.boundary_hits))
        return ConductanceReport({k: v for k, (v, _) in table.items()}, phi_star, ell_star, phi_avg, L,
                                 witnesses, rel, True, notes)
    if not approx:
        raise EnumerationCapExceeded(g.n, cap)
    phi_star, ell_star, table = estimate_critical(g, samples, seed)
    witnesses = {f"phi_{ell}": est.side for ell, est in table.items()}
    return ConductanceReport({ell: est.value for ell, est in table.items()}, phi_star, ell_star, None,
                             count_nonempty_classes(g), witnesses, None, False,
                             ["approximate: values are sampled upper bounds on phi_ell; phi_avg not estimated"])
