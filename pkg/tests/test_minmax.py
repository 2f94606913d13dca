import random

from hypothesis import given, strategies as st

from coalconv.game_core import all_coalitions, mask_of
from coalconv.library import BOB, gdiv3, prisoners_dilemma, roommates_game, table_game
from coalconv.minmax import (best_response_set, coalitional_minmax, efficient_alternatives,
                             efficient_coalitional_minmax, individual_minmax)

from conftest import random_table_game, table_games


def test_individual_minmax_examples():
    for i in range(3):
        assert individual_minmax(roommates_game(), i).value == 1
        assert individual_minmax(gdiv3(), i).value == 0
    for i in range(2):
        assert individual_minmax(prisoners_dilemma(), i).value == 1


def test_coalitional_minmax_simple_game():
    g = gdiv3()
    assert coalitional_minmax(g, mask_of([0, 1])).value == 1
    assert coalitional_minmax(g, mask_of([1, 2])).value == 0
    for C in all_coalitions(3):
        winning = C in g.rule.winning
        assert coalitional_minmax(g, C).value == (1 if winning else 0)


def test_singleton_coalition_matches_individual():
    g = roommates_game()
    for i in range(3):
        assert coalitional_minmax(g, 1 << i) == individual_minmax(g, i)


def test_efficient_sets():
    assert efficient_alternatives(gdiv3()) == list(range(gdiv3().m))
    pd = prisoners_dilemma()
    assert efficient_alternatives(pd) == [pd.labels.index("CC")]
    one = table_game([(1, 2)], {})
    assert efficient_alternatives(one) == [0]


def test_efficient_minmax_pd():
    assert efficient_coalitional_minmax(prisoners_dilemma(), 1).value == 3


def test_best_response_examples():
    g = roommates_game()
    ab = g.labels.index("AB|C")
    assert best_response_set(g, 1 << BOB, ab) == [ab]
    d = gdiv3()
    assert best_response_set(d, mask_of([1, 2]), 5) == [5]
    assert best_response_set(g, 7, ab) == efficient_alternatives(g) == [0, 1, 2]


@given(table_games())
def test_efficient_minmax_dominates_and_is_attained(g):
    for C in all_coalitions(g.n):
        r = coalitional_minmax(g, C)
        assert efficient_coalitional_minmax(g, C).value >= r.value
        # re-evaluating the inner max at the reported minimizer reproduces the value
        assert max(g.total(b, C) for b in g.effectivity(C, r.minimizer)) == r.value
        assert g.total(r.maximizer, C) == r.value


@given(st.integers(0, 2**32 - 1))
def test_enlarging_effectivity_weakly_raises_minmax(seed):
    rng = random.Random(seed)
    g = random_table_game(rng)
    moves = {k: tuple(v) for k, v in g.rule.table.items()}
    bigger = {k: tuple(sorted(set(v) | {rng.randrange(g.m)})) for k, v in moves.items()}
    h = table_game(g.payoffs, bigger, g.labels, mode=g.mode)
    for C in all_coalitions(g.n):
        assert coalitional_minmax(h, C).value >= coalitional_minmax(g, C).value
