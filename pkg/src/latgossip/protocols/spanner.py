"""Clustering spanner with outgoing-edge orientation, simulated locally per node.

Every node runs the k-iteration clustering on the part of the graph it has
collected. Cluster sampling bits are a pure function of (seed, center,
iteration), so nodes whose views cover the relevant neighborhood agree on
all clusters. Edge weights are made distinct by ordering on
``(latency, min endpoint, max endpoint)``.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from ..graph import LatencyGraph, all_pairs_distances

Adjacency = Mapping[int, Mapping[int, int]]


class InsufficientView(RuntimeError):
    def __init__(self, node: int, missing: int, radius: int):
        super().__init__(f"node {node} lacks the adjacency of node {missing} within {radius} hops")
        self.node = node
        self.missing = missing


def sample_bit(seed: int, center: int, iteration: int) -> float:
    """Uniform value in [0, 1) shared by every node simulating this cluster."""
    digest = hashlib.blake2b(f"{seed}:{center}:{iteration}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0 ** 64


def default_k(n_hat: int) -> int:
    return max(1, math.ceil(math.log2(n_hat)))


def _weight(adj: Adjacency, u: int, v: int):
    return (adj[u][v], min(u, v), max(u, v))


def cluster_spanner(adj: Adjacency, n_hat: int, k: int, seed: int) -> Dict[int, Set[int]]:
    """Outgoing spanner edges chosen by every node of ``adj``.

    An edge picked by both endpoints appears in both sets here; orientation is
    settled by ``orient``.
    """
    if k < 1:
        raise ValueError("spanner parameter k must be >= 1")
    nodes = sorted(adj)
    prob = n_hat ** (-1.0 / k)
    cluster: Dict[int, Optional[int]] = {v: v for v in nodes}
    alive: Dict[int, Set[int]] = {v: set(adj[v]) for v in nodes}
    chosen: Dict[int, Set[int]] = {v: set() for v in nodes}

    def lightest_per_cluster(v):
        best: Dict[int, Tuple[tuple, int]] = {}
        for u in alive[v]:
            c = cluster[u]
            if c is None or c == cluster[v]:
                continue
            w = _weight(adj, v, u)
            if c not in best or w < best[c][0]:
                best[c] = (w, u)
        return best

    for it in range(1, k):
        centers = {c for c in cluster.values() if c is not None}
        sampled = {c for c in centers if sample_bit(seed, c, it) < prob}
        new_cluster: Dict[int, Optional[int]] = {}
        drops: List[Tuple[int, int]] = []
        for v in nodes:
            c = cluster[v]
            if c is None or c in sampled:
                new_cluster[v] = c
                continue
            best = lightest_per_cluster(v)
            hot = [cc for cc in best if cc in sampled]
            if not hot:
                # rule 1: no sampled neighbor cluster, keep one edge per neighbor cluster and leave
                for cc, (_, u) in best.items():
                    chosen[v].add(u)
                drops += [(v, u) for u in alive[v]]
                new_cluster[v] = None
                continue
            # rule 2: join the nearest sampled cluster, keep edges to strictly lighter clusters
            star = min(hot, key=lambda cc: best[cc][0])
            w_star, u_star = best[star]
            chosen[v].add(u_star)
            new_cluster[v] = star
            lighter = {cc for cc, (w, _) in best.items() if w < w_star}
            for cc in lighter:
                chosen[v].add(best[cc][1])
            gone = lighter | {star}
            drops += [(v, u) for u in alive[v] if cluster[u] in gone]
        for v, u in drops:
            alive[v].discard(u)
            alive[u].discard(v)
        cluster = new_cluster
        for v in nodes:
            cv = cluster[v]
            if cv is None:
                continue
            for u in [u for u in alive[v] if cluster[u] == cv]:
                alive[v].discard(u)
                alive[u].discard(v)
    for v in nodes:
        if cluster[v] is None:
            continue
        for _, (_, u) in lightest_per_cluster(v).items():
            chosen[v].add(u)
    return chosen


def orient(chosen: Mapping[int, Set[int]], v: int) -> List[int]:
    """Out-neighbors of ``v``: an edge chosen by both endpoints belongs to the smaller id."""
    return sorted(u for u in chosen.get(v, ()) if not (u < v and v in chosen.get(u, ())))


@dataclass(frozen=True)
class OrientedSpanner:
    n: int
    out_edges: Tuple[Tuple[Tuple[int, int], ...], ...]
    k: int
    n_hat: int

    def max_out_degree(self) -> int:
        return max((len(o) for o in self.out_edges), default=0)

    def edge_set(self) -> Set[Tuple[int, int]]:
        return {(min(u, v), max(u, v)) for u in range(self.n) for v, _ in self.out_edges[u]}

    def as_graph(self) -> LatencyGraph:
        lat = {}
        for u in range(self.n):
            for v, ell in self.out_edges[u]:
                lat[(min(u, v), max(u, v))] = ell
        return LatencyGraph(self.n, [(u, v, ell) for (u, v), ell in sorted(lat.items())])


def view_adjacency(g: LatencyGraph, known: Iterable[int], max_latency: Optional[int] = None) -> Dict[int, Dict[int, int]]:
    """Adjacency assembled from the adjacency lists of the ``known`` nodes."""
    adj: Dict[int, Dict[int, int]] = {}
    for x in known:
        adj.setdefault(x, {})
        for y, ell in g.adjacency(x):
            if max_latency is not None and ell > max_latency:
                continue
            adj[x][y] = ell
            adj.setdefault(y, {})[x] = ell
    return adj


def check_view(adj: Adjacency, known: Set[int], v: int, radius: int) -> Optional[int]:
    """First node within ``radius`` hops of ``v`` whose adjacency is unknown, if any."""
    depth = {v: 0}
    frontier = [v]
    while frontier:
        nxt = []
        for x in frontier:
            if x not in known:
                return x
            if depth[x] == radius:
                continue
            for y in sorted(adj.get(x, ())):
                if y not in depth:
                    depth[y] = depth[x] + 1
                    nxt.append(y)
        frontier = nxt
    return None


def spanner_construct(g: LatencyGraph, n_hat: Optional[int] = None, k: Optional[int] = None, seed: int = 0,
                      views: Optional[Mapping[int, Set[int]]] = None, max_latency: Optional[int] = None,
                      strict: bool = True) -> OrientedSpanner:
    """Oriented spanner where node v decides its out-edges from its own view.

    ``views[v]`` is the set of nodes whose adjacency lists v has collected;
    ``None`` means every node sees the whole graph.
    """
    n_hat = n_hat or g.n * g.n
    k = k or default_k(n_hat)
    cache: Dict[frozenset, Dict[int, Set[int]]] = {}
    outs = []
    for v in range(g.n):
        known = frozenset(range(g.n)) if views is None else frozenset(views[v])
        adj = view_adjacency(g, known, max_latency)
        if views is not None and strict:
            missing = check_view(adj, set(known), v, k + 1)
            if missing is not None:
                raise InsufficientView(v, missing, k + 1)
        if known not in cache:
            cache[known] = cluster_spanner(adj, n_hat, k, seed)
        chosen = cache[known]
        outs.append(tuple((u, adj[v][u]) for u in orient(chosen, v)))
    return OrientedSpanner(g.n, tuple(outs), k, n_hat)


def stretch_violations(g: LatencyGraph, sp: OrientedSpanner, max_latency: Optional[int] = None) -> List[Tuple[int, int]]:
    """Pairs whose spanner distance exceeds (2k-1) times their distance in g."""
    base = g if max_latency is None else g.restricted(max_latency)
    dg = all_pairs_distances(base)
    ds = all_pairs_distances(sp.as_graph())
    bound = 2 * sp.k - 1
    bad = []
    for u in range(g.n):
        for v in range(u + 1, g.n):
            if dg[u][v] is None:
                continue
            if ds[u][v] is None or ds[u][v] > bound * dg[u][v]:
                bad.append((u, v))
    return bad
