import itertools

import pytest
from hypothesis import given, strategies as st

from latgossip import guessing as gs
from latgossip.engine import SimConfig, run
from latgossip.graph import GadgetSpec, gen_gadget
from latgossip.protocols.pushpull import PushPull, push_pull
from latgossip.targets import Explicit, RandomP, Singleton

import oracles


def game_of(m, pairs):
    return gs.new_game(m, Explicit(frozenset(pairs)))


def test_single_hit_halts():
    res = gs.submit(game_of(2, {(0, 0)}), {(0, 0)})
    assert res.revealed == {(0, 0)} and res.halted


def test_shared_column_removed_together():
    res = gs.submit(game_of(2, {(0, 0), (1, 0)}), {(0, 0)})
    assert res.revealed == {(0, 0)} and res.halted


def test_other_column_survives():
    res = gs.submit(game_of(2, {(0, 0), (0, 1)}), {(0, 0)})
    assert res.game.target == {(0, 1)} and not res.halted


def test_miss_in_hit_free_column_keeps_target():
    # a guess in the right column that misses reveals nothing and removes nothing
    res = gs.submit(game_of(2, {(0, 0)}), {(1, 0)})
    assert res.revealed == frozenset() and res.game.target == {(0, 0)}


@pytest.mark.parametrize("guesses,msg", [
    ({(a, b) for a in range(3) for b in range(3)}, "exceed"),
    ({(0, 3)}, "outside"),
    ({(-1, 0)}, "outside"),
])
def test_submit_errors(guesses, msg):
    with pytest.raises(gs.GuessError, match=msg):
        game_of(3, {(0, 0)}).submit(guesses)


def test_halted_game_rejects_rounds():
    game = game_of(1, {(0, 0)})
    game.submit({(0, 0)})
    with pytest.raises(gs.GuessError, match="halted"):
        game.submit(set())


def test_new_game_rejects_bad_probability():
    with pytest.raises(ValueError):
        gs.new_game(4, RandomP(0.0))
    for p in (-0.1, 1.5):
        with pytest.raises(ValueError):
            RandomP(p)


def test_new_game_rejects_empty_side():
    with pytest.raises(ValueError):
        gs.new_game(0, Singleton())


@pytest.mark.parametrize("m", [1, 2, 3])
def test_update_matches_brute_force_exhaustively(m):
    universe = [(a, b) for a in range(m) for b in range(m)]
    subsets = [frozenset(c) for r in range(len(universe) + 1) for c in itertools.combinations(universe, r)]
    guess_sets = [x for x in subsets if len(x) <= 2 * m]
    for target in subsets:
        if not target:
            continue
        for xs in guess_sets:
            game = gs.GuessingGame(m, target)
            revealed = game.submit(xs)
            expected = oracles.guess_update(target, xs)
            assert game.target == expected
            assert revealed == xs & target
            assert game.halted == (not expected)
            assert gs.next_target(target, xs) == expected


@given(st.integers(1, 6), st.integers(0, 10_000), st.sampled_from(["random", "adaptive"]),
       st.floats(0.05, 1.0))
def test_targets_shrink_and_halt_iff_empty(m, seed, strategy, p):
    game = gs.new_game(m, RandomP(p), seed)
    gs.STRATEGIES[strategy](game, seed=seed + 1)
    sizes = [len(game.initial_target)]
    target = set(game.initial_target)
    for rec in game.history:
        nxt = oracles.guess_update(target, rec.guesses)
        assert nxt <= target
        assert rec.removed == len(target) - len(nxt)
        target = nxt
        sizes.append(len(target))
    assert target == set(game.target) == set()
    assert all(s > 0 for s in sizes[:-1]) and sizes[-1] == 0


@pytest.mark.parametrize("a,b", [(a, b) for a in range(8) for b in range(8)])
def test_adaptive_singleton_worst_case(a, b):
    game = game_of(8, {(a, b)})
    assert gs.strategy_adaptive_exhaustive(game) <= 4


def test_adaptive_full_target_one_round():
    for m in (1, 4, 9):
        full = {(a, b) for a in range(m) for b in range(m)}
        assert gs.strategy_adaptive_exhaustive(game_of(m, full)) == 1


@pytest.mark.parametrize("seed", range(5))
def test_random_strategy_m1(seed):
    assert gs.play(1, Singleton(), "random", seed) == 1


def test_empty_explicit_target_halted_at_start():
    game = game_of(3, set())
    assert game.halted and game.round == 0
    assert gs.strategy_adaptive_exhaustive(game) == 0


def test_play_is_reproducible():
    assert [gs.play(16, RandomP(0.1), "random", s) for s in range(5)] == \
           [gs.play(16, RandomP(0.1), "random", s) for s in range(5)]


def _push_pull_local(gadget, seed):
    return push_pull(gadget.graph, None, seed, goal="local", trace_level="full")


@pytest.mark.parametrize("seed", range(20))
def test_mirror_sound_on_symmetric_gadget(seed):
    gadget = gen_gadget(GadgetSpec(32, 1, 32, Singleton(), symmetric=True), seed=seed)
    rep = gs.gossip_as_guessing(gadget, _push_pull_local, seed)
    assert rep.sound
    assert rep.max_guesses_per_round <= 2 * 32
    if rep.premise_met:
        assert rep.completion_round >= rep.halting_round


class SideLocal(PushPull):
    """Push-pull that only ever calls neighbors on its own side of the gadget."""

    def __init__(self, gadget):
        super().__init__(gadget.graph, None, "local")
        self.m = gadget.spec.m

    def on_round(self, view):
        side = view.id // self.m
        return side * self.m + (view.id + 1) % self.m


def test_mirror_without_cross_activations():
    gadget = gen_gadget(GadgetSpec(4, 1, 8, Singleton(), symmetric=True), seed=0)

    def algorithm(gd, seed):
        return run(gd.graph, SideLocal(gd), SimConfig(seed=seed, max_rounds=30, trace_level="full"))

    rep = gs.gossip_as_guessing(gadget, algorithm)
    assert rep.completion_round is None and rep.guesses == 0
    assert rep.halting_round is None and rep.transcript == []


def test_transcript_aligns_with_cross_initiations():
    gadget = gen_gadget(GadgetSpec(8, 1, 16, RandomP(0.3), symmetric=True), seed=3)
    res = _push_pull_local(gadget, 2)
    rep = gs.gossip_as_guessing(gadget, lambda gd, s: res, 2)
    for r, guesses, revealed in rep.transcript:
        cross = sorted({tuple(sorted((ev.initiator, ev.responder))) for ev in res.trace
                        if ev.start_round == r and gadget.is_cross(ev.initiator, ev.responder)})
        assert guesses == [(u, v - 8) for u, v in cross]
        # a revealed guess is exactly a fast cross edge started that round
        for a, b in revealed:
            assert gadget.graph.latency(a, b + 8) == 1


def test_fits():
    fit = gs.linear_fit([1, 2, 3, 4], [3, 5, 7, 9])
    assert fit.slope == pytest.approx(2) and fit.intercept == pytest.approx(1) and fit.r2 == pytest.approx(1)
    shape = gs.shape_fit([1, 2, 4], [2, 4, 8], lambda x: x)
    assert shape.constant == pytest.approx(2) and shape.within(1.0001)
    with pytest.raises(ValueError):
        gs.shape_fit([1], [0], lambda x: x)
