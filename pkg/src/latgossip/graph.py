"""Latency graphs: representation, cuts, shortest paths, generators and file I/O."""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from .targets import Pair, Predicate, draw_target

Edge = Tuple[int, int, int]


class GraphFormatError(ValueError):
    """Raised for malformed edge-list input."""


class DisconnectedGraphError(ValueError):
    def __init__(self, u: int, v: int):
        super().__init__(f"graph is disconnected: node {v} is unreachable from node {u}")
        self.pair = (u, v)


class LatencyGraph:
    """Undirected simple graph on nodes ``0..n-1`` with integer latencies >= 1.

    Adjacency lists are sorted by neighbor id so every traversal is
    deterministic.
    """

    __slots__ = ("n", "_lat", "_adj", "_edges")

    def __init__(self, n: int, edges: Iterable[Tuple[int, int, int]] = ()):
        if n < 1:
            raise ValueError("a latency graph needs at least one node")
        self.n = int(n)
        lat: Dict[Tuple[int, int], int] = {}
        for u, v, ell in edges:
            u, v = int(u), int(v)
            if ell != int(ell):
                raise ValueError(f"latency of edge ({u},{v}) is not an integer: {ell!r}")
            ell = int(ell)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) references a node outside 0..{n - 1}")
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if ell < 1:
                raise ValueError(f"edge ({u},{v}) has latency {ell} < 1")
            key = (u, v) if u < v else (v, u)
            if key in lat:
                raise ValueError(f"duplicate edge {key}")
            lat[key] = ell
        self._lat = lat
        adj: List[List[Tuple[int, int]]] = [[] for _ in range(n)]
        for (u, v), ell in lat.items():
            adj[u].append((v, ell))
            adj[v].append((u, ell))
        self._adj = tuple(tuple(sorted(a)) for a in adj)
        self._edges = tuple(sorted((u, v, ell) for (u, v), ell in lat.items()))

    # basic accessors -----------------------------------------------------
    @property
    def edges(self) -> Tuple[Edge, ...]:
        """Edges as ``(u, v, latency)`` with ``u < v``, sorted."""
        return self._edges

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def adjacency(self, u: int) -> Tuple[Tuple[int, int], ...]:
        return self._adj[u]

    def neighbors(self, u: int) -> Tuple[int, ...]:
        return tuple(v for v, _ in self._adj[u])

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    def latency(self, u: int, v: int) -> int:
        key = (u, v) if u < v else (v, u)
        try:
            return self._lat[key]
        except KeyError:
            raise KeyError(f"no edge between {u} and {v}") from None

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._lat

    def latencies(self) -> List[int]:
        """Sorted distinct edge latencies."""
        return sorted({ell for _, _, ell in self._edges})

    @property
    def max_latency(self) -> int:
        return max((ell for _, _, ell in self._edges), default=0)

    def restricted(self, max_latency: int) -> "LatencyGraph":
        """Spanning subgraph keeping only edges with latency <= ``max_latency``."""
        return LatencyGraph(self.n, [e for e in self._edges if e[2] <= max_latency])

    def __eq__(self, other):
        return isinstance(other, LatencyGraph) and self.n == other.n and self._edges == other._edges

    def __hash__(self):
        return hash((self.n, self._edges))

    def __repr__(self):
        return f"LatencyGraph(n={self.n}, m={self.num_edges})"


def latency_class(ell: int) -> int:
    """Index i of the class (2^(i-1), 2^i] holding latency ``ell``; 1 and 2 share class 1."""
    if ell < 1:
        raise ValueError(f"latency must be >= 1, got {ell}")
    return max(1, (ell - 1).bit_length())


def max_degree(g: LatencyGraph) -> int:
    return max(g.degree(u) for u in range(g.n))


def is_connected(g: LatencyGraph) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v, _ in g.adjacency(u):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == g.n


# cuts ----------------------------------------------------------------------
@dataclass(frozen=True)
class Cut:
    side: FrozenSet[int]
    volume_u: int
    volume_rest: int
    class_counts: Dict[int, int] = field(hash=False)
    cut_latencies: Tuple[int, ...] = field(default=(), hash=False)

    @property
    def min_volume(self) -> int:
        return min(self.volume_u, self.volume_rest)

    @property
    def size(self) -> int:
        return len(self.cut_latencies)

    def bitmask(self) -> int:
        return sum(1 << v for v in self.side)


def make_cut(g: LatencyGraph, side: Iterable[int]) -> Cut:
    side = frozenset(int(v) for v in side)
    if not side or len(side) >= g.n:
        raise ValueError("cut side must be a nonempty proper subset of the nodes")
    if any(not 0 <= v < g.n for v in side):
        raise ValueError("cut side references unknown nodes")
    vol_u = sum(g.degree(v) for v in side)
    vol_rest = 2 * g.num_edges - vol_u
    counts: Dict[int, int] = {}
    crossing = []
    for u, v, ell in g.edges:
        if (u in side) != (v in side):
            c = latency_class(ell)
            counts[c] = counts.get(c, 0) + 1
            crossing.append(ell)
    return Cut(side, vol_u, vol_rest, dict(sorted(counts.items())), tuple(sorted(crossing)))


def side_from_mask(mask: int) -> FrozenSet[int]:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


# shortest paths --------------------------------------------------------------
def dijkstra(g: LatencyGraph, source: int, max_latency: Optional[int] = None) -> List[Optional[int]]:
    """Latency-weighted distances from ``source``; ``None`` marks unreachable nodes.

    If ``max_latency`` is given, only edges with latency <= it are used.
    """
    dist: List[Optional[int]] = [None] * g.n
    dist[source] = 0
    heap = [(0, source)]
    done = [False] * g.n
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, ell in g.adjacency(u):
            if max_latency is not None and ell > max_latency:
                continue
            nd = d + ell
            if dist[v] is None or nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def all_pairs_distances(g: LatencyGraph, max_latency: Optional[int] = None) -> List[List[Optional[int]]]:
    return [dijkstra(g, s, max_latency) for s in range(g.n)]


def weighted_diameter(g: LatencyGraph) -> int:
    best = 0
    for s in range(g.n):
        dist = dijkstra(g, s)
        for t, d in enumerate(dist):
            if d is None:
                raise DisconnectedGraphError(s, t)
            best = max(best, d)
    return best


def hop_distances(g: LatencyGraph, source: int, max_latency: Optional[int] = None) -> List[Optional[int]]:
    """Unweighted BFS depth from ``source``."""
    dist: List[Optional[int]] = [None] * g.n
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v, ell in g.adjacency(u):
                if max_latency is not None and ell > max_latency:
                    continue
                if dist[v] is None:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


# generators --------------------------------------------------------------------
def clique(n: int, latency: int = 1) -> LatencyGraph:
    return LatencyGraph(n, [(u, v, latency) for u in range(n) for v in range(u + 1, n)])


def path(n: int, latencies: Optional[Sequence[int]] = None) -> LatencyGraph:
    if latencies is None:
        latencies = [1] * (n - 1)
    if len(latencies) != n - 1:
        raise ValueError(f"path on {n} nodes needs {n - 1} latencies, got {len(latencies)}")
    return LatencyGraph(n, [(i, i + 1, ell) for i, ell in enumerate(latencies)])


def star(leaves: int, latencies=1) -> LatencyGraph:
    """Center 0 joined to leaves ``1..leaves``."""
    if isinstance(latencies, int):
        latencies = [latencies] * leaves
    if len(latencies) != leaves:
        raise ValueError("one latency per leaf expected")
    return LatencyGraph(leaves + 1, [(0, i + 1, ell) for i, ell in enumerate(latencies)])


def random_regular(n: int, d: int, latency: int = 1, seed: int = 0, max_tries: int = 10_000) -> LatencyGraph:
    """Uniform simple d-regular graph via the pairing model with rejection."""
    if n * d % 2:
        raise ValueError(f"no {d}-regular graph on {n} nodes: n*d is odd")
    if d >= n:
        raise ValueError(f"degree {d} impossible on {n} nodes")
    rng = random.Random(seed)
    points = [u for u in range(n) for _ in range(d)]
    for _ in range(max_tries):
        rng.shuffle(points)
        pairs = set()
        ok = True
        for i in range(0, len(points), 2):
            u, v = points[i], points[i + 1]
            key = (u, v) if u < v else (v, u)
            if u == v or key in pairs:
                ok = False
                break
            pairs.add(key)
        if ok:
            return LatencyGraph(n, [(u, v, latency) for u, v in sorted(pairs)])
    raise RuntimeError(f"pairing model failed to produce a simple graph in {max_tries} tries")


def two_cliques_bridge(size: int, bridge_latency: int = 1, latency: int = 1) -> LatencyGraph:
    """Two ``size``-cliques joined by one edge between node ``size-1`` and node ``size``."""
    edges = [(u, v, latency) for u in range(size) for v in range(u + 1, size)]
    edges += [(size + u, size + v, latency) for u in range(size) for v in range(u + 1, size)]
    edges.append((size - 1, size, bridge_latency))
    return LatencyGraph(2 * size, edges)


def random_connected(n: int, extra_p: float = 0.3, max_latency: int = 64, seed: int = 0,
                     latency_sampler=None) -> LatencyGraph:
    """Random spanning tree plus independent extra edges, latencies uniform in [1, max_latency]."""
    rng = random.Random(seed)
    sample = latency_sampler or (lambda r: r.randint(1, max_latency))
    order = list(range(n))
    rng.shuffle(order)
    edges = {}
    for i in range(1, n):
        u, v = order[i], order[rng.randrange(i)]
        edges[(min(u, v), max(u, v))] = None
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra_p:
                edges[(u, v)] = None
    return LatencyGraph(n, [(u, v, sample(rng)) for u, v in sorted(edges)])


@dataclass(frozen=True)
class GadgetSpec:
    m: int
    lo: int
    hi: int
    predicate: Predicate
    symmetric: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("gadget side size must be >= 1")
        if not 1 <= self.lo < self.hi:
            raise ValueError(f"gadget latencies need 1 <= lo < hi, got lo={self.lo}, hi={self.hi}")


@dataclass(frozen=True)
class Gadget:
    """Generated gadget: left side is ``0..m-1``, right side is ``m..2m-1``."""

    graph: LatencyGraph
    spec: GadgetSpec
    target: FrozenSet[Pair]

    @property
    def left(self) -> range:
        return range(self.spec.m)

    @property
    def right(self) -> range:
        return range(self.spec.m, 2 * self.spec.m)

    def is_cross(self, u: int, v: int) -> bool:
        m = self.spec.m
        return (u < m) != (v < m)


def gen_gadget(spec: GadgetSpec, seed: int = 0) -> Gadget:
    m = spec.m
    target = draw_target(spec.predicate, m, random.Random(seed))
    edges = [(u, v, 1) for u in range(m) for v in range(u + 1, m)]
    if spec.symmetric:
        edges += [(m + u, m + v, 1) for u in range(m) for v in range(u + 1, m)]
    for a in range(m):
        for b in range(m):
            edges.append((a, m + b, spec.lo if (a, b) in target else spec.hi))
    return Gadget(LatencyGraph(2 * m, edges), spec, target)


def gen_ring_of_gadgets(s: int, k: int, ell: int, seed: int = 0) -> LatencyGraph:
    """``k`` latency-1 cliques of ``s`` nodes, consecutive ones joined by latency-``ell`` bicliques.

    Each consecutive pair of layers keeps one uniformly chosen cross edge at latency 1.
    Layer ``i`` holds nodes ``i*s .. i*s+s-1``.
    """
    if s < 2:
        raise ValueError("layer size must be >= 2")
    if k < 3 or k % 2:
        raise ValueError(f"layer count must be even and >= 3, got {k}")
    if ell < 1:
        raise ValueError("slow latency must be >= 1")
    rng = random.Random(seed)
    edges = []
    for layer in range(k):
        base = layer * s
        edges += [(base + u, base + v, 1) for u in range(s) for v in range(u + 1, s)]
    for layer in range(k):
        a0, b0 = layer * s, ((layer + 1) % k) * s
        fast = (rng.randrange(s), rng.randrange(s))
        for i in range(s):
            for j in range(s):
                edges.append((a0 + i, b0 + j, 1 if (i, j) == fast else ell))
    return LatencyGraph(k * s, edges)


def ring_halving_side(s: int, k: int) -> FrozenSet[int]:
    """First ``k/2`` consecutive layers: the cut that avoids intra-layer edges."""
    return frozenset(range(k // 2 * s))


def gen_basic(kind: str, **params) -> LatencyGraph:
    kinds = {
        "clique": clique,
        "path": path,
        "star": star,
        "random_regular": random_regular,
        "two_cliques_bridge": two_cliques_bridge,
        "random_connected": random_connected,
    }
    if kind not in kinds:
        raise ValueError(f"unknown graph family {kind!r}; choose from {sorted(kinds)}")
    return kinds[kind](**params)


# file I/O ------------------------------------------------------------------------
def format_graph(g: LatencyGraph) -> str:
    lines = [f"n {g.n}"]
    lines += [f"{u} {v} {ell}" for u, v, ell in g.edges]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> LatencyGraph:
    n = None
    edges = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise GraphFormatError(f"line {lineno}: expected header 'n <count>', got {raw!r}")
            try:
                n = int(parts[1])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: node count is not an integer") from None
            if n < 1:
                raise GraphFormatError(f"line {lineno}: node count must be >= 1")
            continue
        if len(parts) != 3:
            raise GraphFormatError(f"line {lineno}: expected 'u v latency', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: node ids must be integers") from None
        try:
            ell = int(parts[2])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: latency {parts[2]!r} is not an integer") from None
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop at node {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"line {lineno}: node id out of range 0..{n - 1}")
        if ell < 1:
            raise GraphFormatError(f"line {lineno}: latency must be >= 1")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(f"line {lineno}: duplicate edge {key}")
        seen.add(key)
        edges.append((u, v, ell))
    if n is None:
        raise GraphFormatError("missing header 'n <count>'")
    return LatencyGraph(n, edges)


def save_graph(g: LatencyGraph, dest) -> None:
    Path(dest).write_text(format_graph(g))


def load_graph(src) -> LatencyGraph:
    return parse_graph(Path(src).read_text())


def iter_edges_between(g: LatencyGraph, side: FrozenSet[int]) -> Iterator[Edge]:
    for e in g.edges:
        if (e[0] in side) != (e[1] in side):
            yield e
