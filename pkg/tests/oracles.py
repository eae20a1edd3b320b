"""Brute-force reference computations used as independent test oracles."""
from fractions import Fraction
from itertools import combinations

INF = float("inf")


def edge_class(ell):
    i = 1
    while 2 ** i < ell:
        i += 1
    return i


def proper_subsets(n):
    for r in range(1, n):
        for side in combinations(range(n), r):
            yield set(side)


def cut_stats(n, edges, side):
    deg = [0] * n
    for u, v, _ in edges:
        deg[u] += 1
        deg[v] += 1
    vol = sum(deg[u] for u in side)
    rest = sum(deg) - vol
    crossing = [ell for u, v, ell in edges if (u in side) != (v in side)]
    return min(vol, rest), crossing


def phi_ell(n, edges, ell):
    best = None
    for side in proper_subsets(n):
        vol, crossing = cut_stats(n, edges, side)
        val = Fraction(sum(1 for x in crossing if x <= ell), vol)
        best = val if best is None or val < best else best
    return best


def phi_avg(n, edges):
    best = None
    for side in proper_subsets(n):
        vol, crossing = cut_stats(n, edges, side)
        val = sum((Fraction(1, 2 ** edge_class(x)) for x in crossing), Fraction(0)) / vol
        best = val if best is None or val < best else best
    return best


def critical(n, edges):
    best = None
    for ell in sorted({x for _, _, x in edges}):
        val = phi_ell(n, edges, ell)
        if best is None or val / ell > best[0] / best[1]:
            best = (val, ell)
    return best


def floyd(n, edges, max_latency=None):
    d = [[0 if i == j else INF for j in range(n)] for i in range(n)]
    for u, v, ell in edges:
        if max_latency is None or ell <= max_latency:
            d[u][v] = min(d[u][v], ell)
            d[v][u] = min(d[v][u], ell)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


def guess_update(target, guesses):
    """Hit-based target update by set comprehension: a pair survives unless some guess hit its column."""
    hit_columns = {b for (a, b) in guesses if (a, b) in target}
    return {(a, b) for (a, b) in target if b not in hit_columns}
