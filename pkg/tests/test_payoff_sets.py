from fractions import Fraction as F

import pytest
from hypothesis import assume, given, strategies as st

from coalconv.game_core import TransferMode, all_coalitions, mask_of, members
from coalconv.library import gdiv3, pair_grab_game, roommates_game, table_game
from coalconv.minmax import coalitional_minmax, individual_minmaxes
from coalconv.payoff_sets import (CharacteristicFunction, CharMode, PayoffSetDescriptor, SetKind,
                                  beta_core_membership, characteristic_from_game,
                                  feasible_membership_ntu, hull_weights, s_rational_membership,
                                  set_constraints, set_slack, stage_core, strict_balanced_emptiness,
                                  tu_feasible_ir_membership)

from conftest import coalition_sum, table_games
from oracles import oracle_strict_core

P12, P13, P23 = mask_of([0, 1]), mask_of([0, 2]), mask_of([1, 2])


def test_room_core_is_empty():
    assert stage_core(roommates_game()) == []


@pytest.mark.parametrize("r", [4, 8, 16])
def test_div3_grid_core(r):
    g = gdiv3(r)
    core = [g.v(a) for a in stage_core(g)]
    assert (1, 0, 0) in core
    # on a finite grid a pair cannot strictly improve both members when a_2, a_3 <= 1/r
    assert all(u[1] <= F(1, r) and u[2] <= F(1, r) for u in core)


def test_single_alternative_is_its_own_core():
    assert stage_core(table_game([(1, 2, 3)], {})) == [0]


def test_ntu_feasibility_examples():
    g = roommates_game()
    for a in range(g.m):
        assert feasible_membership_ntu(g, g.v(a))
    assert feasible_membership_ntu(g, (2, 2, 2), strict_ir=True)
    assert not feasible_membership_ntu(g, (4, 0, 0))
    w = hull_weights(g, (2, 2, 2))
    assert sum(w) == 1 and all(x >= 0 for x in w)
    assert tuple(sum(l * g.v(a)[i] for a, l in enumerate(w)) for i in range(3)) == (2, 2, 2)


def test_tu_feasibility_examples():
    g = gdiv3(mode=TransferMode.TU_PUBLIC)
    u = (F(-1, 5), F(3, 5), F(3, 5))
    assert tu_feasible_ir_membership(g, u)
    assert not tu_feasible_ir_membership(g, u, strict_ir=True)
    assert tu_feasible_ir_membership(g, g.v(3))
    assert not tu_feasible_ir_membership(g, (1, 1, 0))


def test_beta_core_examples():
    g = gdiv3()
    assert beta_core_membership(g, (1, 0, 0), efficient=True)
    assert not beta_core_membership(g, (0, F(1, 2), F(1, 2)), efficient=True)
    # {2,3} sits exactly at its bound of 0
    assert not beta_core_membership(g, (1, 0, 0), efficient=True, strict=True)


def test_s_rational_examples():
    g = gdiv3()
    assert s_rational_membership(g, [], (F(1, 5), F(3, 10), F(1, 2)))
    assert not s_rational_membership(g, [], (F(1, 5), F(3, 10), F(2, 5)))
    r = s_rational_membership(g, [P12], (F(3, 5), F(3, 10), F(1, 10)))
    assert not r and r.failing == (P12,)
    pg = pair_grab_game()
    everyone = [C for C in all_coalitions(3) if C != 7]
    assert beta_core_membership(pg, (2, 2, 2), strict=True)
    assert s_rational_membership(pg, everyone, (2, 2, 2), strict=True)


def test_characteristic_function_examples():
    phi = characteristic_from_game(gdiv3(), CharMode.BETA)
    assert (phi(P12), phi(P13), phi(P23), phi(7)) == (1, 1, 0, 1)
    assert all(phi(1 << i) == 0 for i in range(3))
    const = characteristic_from_game(table_game([(1, 2, 3)], {}))
    assert all(const(C) == sum(F(i + 1) for i in members(C)) for C in all_coalitions(3))
    g = roommates_game()
    mixed = characteristic_from_game(g, CharMode.S_MIXED, [])
    ind = individual_minmaxes(g)
    assert all(mixed(C) == sum(ind[i] for i in members(C)) for C in all_coalitions(3) if C != 7)


def _phi(vals):
    return CharacteristicFunction.from_mapping(3, vals)


def test_majority_game_strict_core_empty():
    b = strict_balanced_emptiness(_phi({1: 0, 2: 0, 4: 0, 3: 1, 5: 1, 6: 1, 7: 1}))
    assert not b.nonempty
    assert b.optimum == F(3, 2)
    assert b.weights == {3: F(1, 2), 5: F(1, 2), 6: F(1, 2)}


def test_div3_strict_core_empty_but_weak_core_not():
    phi = characteristic_from_game(gdiv3(), CharMode.BETA)
    b = strict_balanced_emptiness(phi)
    assert not b.nonempty and b.optimum == 1
    assert beta_core_membership(gdiv3(), (1, 0, 0), efficient=False)


def test_large_grand_value_is_nonempty():
    b = strict_balanced_emptiness(_phi({1: 0, 2: 0, 4: 0, 3: 1, 5: 1, 6: 1, 7: 11}))
    assert b.nonempty


quarter = st.sampled_from([F(k, 8) for k in range(9)])


@given(st.tuples(*[quarter] * 7))
def test_balancedness_matches_grid_oracle(vals):
    phi = dict(zip(range(1, 8), vals))
    want = oracle_strict_core(phi, margin=F(1, 64), step=F(1, 32))
    assume(want is not None)
    b = strict_balanced_emptiness(_phi(phi))
    assert b.nonempty == want
    if not b.nonempty:
        lam = b.weights
        assert all(sum(w for C, w in lam.items() if (C >> i) & 1) == 1 for i in range(3))
        assert sum(w * phi[C] for C, w in lam.items()) == b.optimum >= phi[7]


@given(table_games(mode=TransferMode.TU_SECRET), st.lists(st.fractions(-1, 7, max_denominator=4),
                                                          min_size=3, max_size=3))
def test_strict_membership_implies_weak(g, u):
    for eff in (True, False):
        if beta_core_membership(g, u, efficient=eff, strict=True):
            assert beta_core_membership(g, u, efficient=eff)
    if beta_core_membership(g, u, efficient=True, strict=True):
        assert beta_core_membership(g, u, efficient=False, strict=True)
    S = [3, 5]
    if s_rational_membership(g, S, u, strict=True):
        assert s_rational_membership(g, S, u)


@given(table_games(mode=TransferMode.TU_SECRET))
def test_slack_points_satisfy_their_constraints(g):
    for kind in ("fir", "beta", "ebeta", "srational"):
        res = set_slack(g, kind, [3])
        if res.slack is None:
            continue
        lower, lo, hi = set_constraints(g, kind, [3])
        u = res.point
        assert lo <= sum(u) <= hi
        assert all(coalition_sum(u, C) >= b + res.slack for C, b in lower)


def test_core_alternatives_survive_beta_blocking():
    g = gdiv3(8)
    for a in stage_core(g):
        u = g.v(a)
        for C in all_coalitions(3):
            if C in g.rule.winning:
                assert coalition_sum(u, C) >= coalitional_minmax(g, C).value - F(1, 8)


def test_descriptor_dispatch():
    g = gdiv3()
    assert PayoffSetDescriptor(SetKind.CORE_STAGE).contains(g, (1, 0, 0))
    assert PayoffSetDescriptor("u_delta", delta=F(1, 2)).contains(g, (0, F(1, 2), F(1, 2)))
    assert not PayoffSetDescriptor("efficient_beta_core").contains(g, (0, F(1, 2), F(1, 2)))
    assert PayoffSetDescriptor("feasible_ir_ntu", strict=True).contains(roommates_game(), (2, 2, 2))
    assert not PayoffSetDescriptor("s_rational", S=frozenset([P12])).contains(g, (F(3, 5), F(3, 10), F(1, 10)))
    with pytest.raises(ValueError):
        PayoffSetDescriptor("u_delta")
    with pytest.raises(ValueError):
        PayoffSetDescriptor("s_rational")
