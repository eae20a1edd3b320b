from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from latgossip.conductance import phi_ell_cut
from latgossip.graph import (DisconnectedGraphError, GadgetSpec, GraphFormatError, LatencyGraph, clique,
                             gen_basic, gen_gadget, gen_ring_of_gadgets, is_connected, latency_class, load_graph,
                             make_cut, max_degree, parse_graph, path, ring_halving_side, save_graph, star,
                             weighted_diameter)
from latgossip.targets import RandomP, Singleton

from oracles import edge_class, floyd
from strategies import connected_graphs

TRIANGLE = LatencyGraph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 4)])


def test_diameter_examples():
    assert weighted_diameter(path(3, [2, 3])) == 5
    assert weighted_diameter(clique(4)) == 1
    assert weighted_diameter(TRIANGLE) == 2


def test_diameter_disconnected_names_pair():
    with pytest.raises(DisconnectedGraphError) as err:
        weighted_diameter(LatencyGraph(3, [(0, 1, 1)]))
    assert 2 in err.value.pair


@given(connected_graphs(max_n=8))
def test_diameter_matches_floyd(g):
    d = floyd(g.n, g.edges)
    assert weighted_diameter(g) == max(max(row) for row in d)


def test_max_degree_examples():
    assert max_degree(star(5)) == 5
    assert max_degree(gen_ring_of_gadgets(4, 8, 3, seed=0)) == 11
    assert max_degree(LatencyGraph(2, [(0, 1, 1)])) == 1


def test_cut_examples():
    c = make_cut(LatencyGraph(2, [(0, 1, 5)]), {0})
    assert (c.volume_u, c.volume_rest, dict(c.class_counts)) == (1, 1, {3: 1})
    c = make_cut(TRIANGLE, {0})
    assert (c.volume_u, c.volume_rest, dict(c.class_counts)) == (2, 4, {1: 1, 2: 1})
    c = make_cut(clique(4), {0, 1})
    assert (c.volume_u, c.volume_rest, dict(c.class_counts)) == (6, 6, {1: 4})


def test_cut_rejects_trivial_sides():
    with pytest.raises(ValueError):
        make_cut(clique(3), set())
    with pytest.raises(ValueError):
        make_cut(clique(3), {0, 1, 2})


@given(connected_graphs(max_n=8), st.data())
def test_cut_counts_match_edge_scan(g, data):
    side = data.draw(st.sets(st.integers(0, g.n - 1), min_size=1, max_size=g.n - 1))
    c = make_cut(g, side)
    crossing = [ell for u, v, ell in g.edges if (u in side) != (v in side)]
    assert sum(c.class_counts.values()) == len(crossing)
    for cls, count in c.class_counts.items():
        assert count == sum(1 for ell in crossing if edge_class(ell) == cls)
    assert c.volume_u == sum(g.degree(u) for u in side)


def test_latency_class_boundaries():
    assert [latency_class(x) for x in (1, 2, 3, 4, 5, 8, 9)] == [1, 1, 2, 2, 3, 3, 4]


@given(st.integers(1, 5000), st.integers(1, 5000))
def test_latency_class_monotone_and_total(a, b):
    lo, hi = sorted((a, b))
    assert 1 <= latency_class(lo) <= latency_class(hi)
    c = latency_class(hi)
    assert hi <= 2 ** c and (c == 1 or hi > 2 ** (c - 1))


@given(connected_graphs(max_n=8))
def test_adjacency_symmetric(g):
    for u in range(g.n):
        for v, ell in g.adjacency(u):
            assert (u, ell) in g.adjacency(v)
            assert ell >= 1 and v != u


def test_gadget_examples():
    gd = gen_gadget(GadgetSpec(2, 1, 9, Singleton()), seed=5)
    cross = [ell for u, v, ell in gd.graph.edges if gd.is_cross(u, v)]
    assert sorted(cross) == [1, 9, 9, 9]
    gd = gen_gadget(GadgetSpec(3, 1, 9, RandomP(1.0)), seed=0)
    assert [ell for u, v, ell in gd.graph.edges if gd.is_cross(u, v)] == [1] * 9
    gd = gen_gadget(GadgetSpec(3, 1, 9, RandomP(0.0), symmetric=True), seed=0)
    g = gd.graph
    assert all(ell == 9 for u, v, ell in g.edges if gd.is_cross(u, v))
    assert not is_connected(g.restricted(1))
    assert g.restricted(1).num_edges == 6


def test_gadget_spec_validation():
    with pytest.raises(ValueError):
        GadgetSpec(2, 5, 5, Singleton())
    with pytest.raises(ValueError):
        RandomP(1.5)


@pytest.mark.parametrize("s,k", [(2, 4), (3, 6), (4, 8), (5, 10)])
def test_ring_regular(s, k):
    g = gen_ring_of_gadgets(s, k, 7, seed=s)
    assert g.n == s * k
    assert {g.degree(u) for u in range(g.n)} == {3 * s - 1}
    assert is_connected(g)


def test_ring_one_fast_edge_per_layer_pair():
    s, k = 2, 4
    g = gen_ring_of_gadgets(s, k, 9, seed=3)
    for i in range(k):
        j = (i + 1) % k
        lat = [g.latency(a, b) for a in range(i * s, i * s + s) for b in range(j * s, j * s + s)]
        assert sorted(lat) == [1, 9, 9, 9]


def test_ring_halving_cut_value():
    g = gen_ring_of_gadgets(4, 8, 16, seed=0)
    assert phi_ell_cut(g, make_cut(g, ring_halving_side(4, 8)), 16) == Fraction(2, 11)


def test_ring_rejects_odd_k():
    with pytest.raises(ValueError):
        gen_ring_of_gadgets(3, 5, 4)


def test_basic_families():
    assert gen_basic("clique", n=4) == clique(4)
    p = gen_basic("path", n=3, latencies=[2, 3])
    assert p.edges == ((0, 1, 2), (1, 2, 3))
    g = gen_basic("random_regular", n=16, d=4, seed=2)
    assert all(g.degree(u) == 4 for u in range(16))
    with pytest.raises(ValueError):
        gen_basic("random_regular", n=5, d=3)
    with pytest.raises(ValueError):
        gen_basic("hypercube", n=3)


def test_io_round_trip(tmp_path):
    f = tmp_path / "k4.txt"
    save_graph(clique(4), f)
    assert load_graph(f) == clique(4)
    assert parse_graph("n 2\n# comment\n0 1 5\n").edges == ((0, 1, 5),)


@pytest.mark.parametrize("text,fragment", [
    ("n 2\n0 0 1\n", "self-loop"),
    ("n 2\n0 1 x\n", "not an integer"),
    ("n 2\n0 1 1\n1 0 2\n", "duplicate"),
    ("0 1 1\n", "header"),
    ("n 2\n0 1\n", "expected"),
    ("n 2\n0 5 1\n", "out of range"),
])
def test_io_errors(text, fragment):
    with pytest.raises(GraphFormatError, match=fragment):
        parse_graph(text)


def test_constructor_rejects_bad_edges():
    for edges in ([(0, 0, 1)], [(0, 1, 0)], [(0, 1, 1), (1, 0, 1)], [(0, 1, 1.5)]):
        with pytest.raises(ValueError):
            LatencyGraph(2, edges)
