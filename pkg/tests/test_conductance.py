from fractions import Fraction

import pytest
from hypothesis import given

from latgossip import conductance as cd
from latgossip.graph import LatencyGraph, clique, gen_ring_of_gadgets

import oracles
from strategies import connected_graphs

TRIANGLE = LatencyGraph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 4)])
EDGE5 = LatencyGraph(2, [(0, 1, 5)])


def test_triangle_values():
    table = cd.phi_ell_many(TRIANGLE, [1, 4])
    assert table[1][0] == Fraction(1, 2)
    assert table[4][0] == 1
    assert cd.critical_conductance(TRIANGLE) == (Fraction(1, 2), 1)
    assert cd.avg_conductance(TRIANGLE)[0] == Fraction(3, 8)


def test_worked_relations():
    r = cd.check_relation(EDGE5)
    assert (r.lower, r.phi_avg, r.upper) == (Fraction(1, 10), Fraction(1, 8), Fraction(1, 5))
    assert r.passed
    r = cd.check_relation(TRIANGLE)
    assert (r.lower, r.phi_avg, r.upper) == (Fraction(1, 4), Fraction(3, 8), Fraction(1))
    assert r.passed


def test_unit_clique_meets_lower_bound():
    r = cd.check_relation(clique(4))
    assert r.phi_star == Fraction(2, 3) and r.ell_star == 1
    assert r.phi_avg == r.lower == Fraction(1, 3)
    assert not r.lower_holds and r.boundary_hits == ["lower"]


def test_power_of_two_edge_meets_upper_bound():
    r = cd.check_relation(LatencyGraph(2, [(0, 1, 8)]))
    assert r.phi_avg == r.upper == Fraction(1, 8)


def test_upper_bound_counterexample():
    # heavy path ends, light middle: the average measure exceeds the upper side
    g = LatencyGraph(4, [(0, 3, 47), (1, 3, 7), (1, 2, 35)])
    r = cd.check_relation(g)
    assert r.upper == Fraction(2, 141) and r.phi_avg == Fraction(1, 64)
    assert not r.upper_holds
    phi_star, ell_star = oracles.critical(g.n, g.edges)
    assert (phi_star, ell_star) == (r.phi_star, r.ell_star)
    assert oracles.phi_avg(g.n, g.edges) == r.phi_avg


@given(connected_graphs(max_n=7, max_latency=20))
def test_phi_ell_matches_brute_force(g):
    table = cd.phi_ell_many(g, g.latencies())
    for ell, (value, cut) in table.items():
        assert value == oracles.phi_ell(g.n, g.edges, ell)
        assert cd.phi_ell_cut(g, cut, ell) == value


@given(connected_graphs(max_n=7, max_latency=40))
def test_avg_and_critical_match_brute_force(g):
    value, cut = cd.avg_conductance(g)
    assert value == oracles.phi_avg(g.n, g.edges)
    assert cd.avg_cut_value(g, cut) == value
    assert cd.critical_conductance(g) == oracles.critical(g.n, g.edges)


@given(connected_graphs(max_n=8, max_latency=30))
def test_multiplicity_route_agrees(g):
    for ell in g.latencies():
        mg = cd.edge_induced_graph(g, ell)
        assert sum(mg.volume(u) for u in range(g.n)) == 2 * g.num_edges
        assert cd.multigraph_conductance(mg)[0] == cd.phi_ell_exact(g, ell)[0]


@given(connected_graphs(max_n=7))
def test_values_in_unit_interval(g):
    rep = cd.analyze(g)
    for v in list(rep.phi_ell.values()) + [rep.phi_star, rep.phi_avg]:
        assert 0 <= v <= 1


@given(connected_graphs(max_n=7))
def test_phi_ell_monotone_in_ell(g):
    values = [v for _, (v, _) in sorted(cd.phi_ell_many(g, range(1, g.max_latency + 1)).items())]
    assert values == sorted(values)


@given(connected_graphs(min_n=3, max_n=8))
def test_estimator_is_upper_bound(g):
    for ell in g.latencies():
        est = cd.estimate_phi_ell(g, ell, samples=4, seed=1)
        assert est.approximate
        assert est.value >= cd.phi_ell_exact(g, ell)[0]


def test_cap_requires_approx():
    g = gen_ring_of_gadgets(3, 8, 4)
    with pytest.raises(cd.EnumerationCapExceeded):
        cd.analyze(g, cap=20)
    rep = cd.analyze(g, cap=20, approx=True, samples=4)
    assert not rep.exact and rep.to_dict()["exact"] is False


def test_report_dict_uses_fractions_as_text():
    d = cd.analyze(TRIANGLE).to_dict()
    assert d["phi_star"] == "1/2" and d["phi_avg"] == "3/8" and d["ell_star"] == 1
    assert d["relation"]["passed"] is True
    assert d["L"] == 2
