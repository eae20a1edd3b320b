import pytest
from hypothesis import given, settings, strategies as st

from latgossip.graph import GadgetSpec, LatencyGraph, clique, gen_gadget, gen_ring_of_gadgets, path, random_connected, star
from latgossip.protocols.eid import (discover_latencies, eid, general_eid, path_discovery, rr_broadcast,
                                     spanner_distance_violations, termination_check, unified_dissemination)
from latgossip.protocols.spanner import OrientedSpanner, spanner_construct
from latgossip.targets import RandomP

from strategies import connected_graphs

TRIANGLE = LatencyGraph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 4)])


def first_mutual_round(n, trace, a, b):
    """Replay a full trace and return the round where a and b first hold each other's rumor."""
    state = [1 << u for u in range(n)]
    for ev in sorted(trace, key=lambda e: (e.deliver_round, e.start_round, e.initiator)):
        state[ev.initiator] |= ev.payload_in[0]
        state[ev.responder] |= ev.payload_out[0]
        if state[a] >> b & 1 and state[b] >> a & 1:
            return ev.deliver_round
    return None


def test_rr_path_example():
    sp = OrientedSpanner(3, (((1, 2),), ((2, 3),), ()), k=1, n_hat=9)
    res, rumors = rr_broadcast(sp, 5, trace_level="full")
    assert rumors[0] >> 2 & 1 and rumors[2] & 1
    assert first_mutual_round(3, res.trace, 0, 2) <= 5 * 1 + 5


def test_rr_single_node():
    res, rumors = rr_broadcast(OrientedSpanner(1, ((),), 1, 2), 3)
    assert res.metrics.exchanges_initiated == 0 and rumors == [1]


@settings(max_examples=25)
@given(connected_graphs(min_n=2, max_n=12, max_latency=6), st.integers(1, 12))
def test_rr_reaches_spanner_distance(g, k):
    sp = spanner_construct(g, n_hat=g.n ** 2 + 1, k=2, seed=k)
    _, rumors = rr_broadcast(sp, k, g)
    assert spanner_distance_violations(sp, k, rumors) == []


def test_eid_examples():
    assert eid(clique(6), 1).complete
    assert eid(TRIANGLE, 2).complete
    short = eid(path(3, [5, 5]), 4)
    assert not short.complete
    check = termination_check(path(3, [5, 5]), 4, short.rumors)
    assert set(check.statuses) == {"failed"}


def test_check_passes_complete_sets():
    g = path(3, [5, 5])
    full = (1 << 3) - 1
    for mode in ("t", "rr"):
        out = termination_check(g, 16, [full] * 3, broadcast=mode)
        assert out.statuses == ["default"] * 3
        assert len(set(out.terminated_rounds)) == 1


@pytest.mark.parametrize("mode", ["t", "rr"])
def test_check_one_missing_rumor_fails_everyone(mode):
    full = (1 << 3) - 1
    out = termination_check(path(3, [5, 5]), 16, [0b011, full, full], broadcast=mode)
    assert out.statuses == ["failed"] * 3


def test_check_unreached_neighbor_flags():
    # tokens agree across the fast edge; node 1's slow neighbor is missing from its set
    g = path(3, [1, 50])
    out = termination_check(g, 1, [0b011, 0b011, 0b100])
    assert out.statuses == ["failed"] * 3


def test_check_rejects_unknown_broadcast():
    with pytest.raises(ValueError):
        termination_check(path(2, [1]), 1, [1, 2], broadcast="flood")


def test_general_eid_doubles_past_diameter():
    out = general_eid(LatencyGraph(2, [(0, 1, 5)]))
    assert out.iterations == [1, 2, 4, 8]
    assert out.complete and len(set(out.terminated_rounds)) == 1
    assert general_eid(clique(5)).iterations == [1]


def test_path_discovery_doubles_past_diameter():
    out = path_discovery(LatencyGraph(2, [(0, 1, 6)]))
    assert out.iterations == [1, 2, 4, 8]
    assert out.complete


def test_single_node_terminates_immediately():
    for out in (general_eid(LatencyGraph(1)), path_discovery(LatencyGraph(1))):
        assert out.rounds == 0 and out.terminated_rounds == [0]


@settings(max_examples=15)
@given(connected_graphs(min_n=2, max_n=8, max_latency=10), st.integers(0, 50), st.booleans())
def test_termination_agreement(g, seed, known):
    for out in (general_eid(g, seed=seed, latencies_known=known), path_discovery(g, seed=seed)):
        v = out.termination_violations()
        assert v == {"terminated_missing_rumor": 0, "distinct_termination_rounds": 1, "unterminated": 0}
        assert out.complete


def test_discovery_star_example():
    g = star(5, [1, 2, 3, 1, 2])
    res, known = discover_latencies(g, 3, 5)
    assert known[0] == {1: 1, 2: 2, 3: 3, 4: 1, 5: 2}
    centre = [ev for ev in res.trace if ev.initiator == 0] if res.trace else None
    assert res.metrics.rounds_elapsed <= 5 + 3 + 1
    assert centre is None or max(ev.deliver_round for ev in centre) <= 8


def test_discovery_keeps_slow_edges_unknown():
    _, known = discover_latencies(star(3, [1, 2, 9]), 3, 3)
    assert 3 not in known[0] and known[3] == {}


def test_discovery_probe_budget():
    g = clique(6)
    _, known = discover_latencies(g, 2, 2)
    assert any(len(k) < 5 for k in known)
    _, known = discover_latencies(g, 2, 5)
    assert all(len(k) == 5 for k in known)


def test_unknown_scenario_completes_on_dense_graph():
    out = general_eid(clique(6), latencies_known=False)
    assert out.complete and len(set(out.terminated_rounds)) == 1


@pytest.mark.parametrize("seed", range(3))
def test_unified_completes(seed):
    g = random_connected(9, 0.3, 7, seed=seed)
    for scenario in ("known", "unknown"):
        u = unified_dissemination(g, scenario, seed)
        assert u.push_pull_rounds is not None and u.pipeline_rounds is not None
        assert u.rounds == min(u.push_pull_rounds, u.pipeline_rounds)


def test_unified_high_degree_gadget_prefers_push_pull():
    g = gen_gadget(GadgetSpec(12, 1, 40, RandomP(0.5), symmetric=True), seed=1).graph
    assert unified_dissemination(g, "known", 0).winner == "push-pull"


@pytest.mark.xfail(strict=True, reason="pipeline constants exceed push-pull on every desk-scale ring; "
                                       "see the decisions ledger")
def test_unified_ring_prefers_pipeline():
    g = gen_ring_of_gadgets(4, 8, 64, seed=0)
    assert unified_dissemination(g, "known", 0).winner == "spanner"
