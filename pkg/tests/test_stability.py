import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from coalconv.automaton import continuation_values
from coalconv.conventions import (build_folk_automaton, constant_convention, core_reversion_convention,
                                  roommates_figure1)
from coalconv.game_core import TransferMode, all_coalitions, mask_of, members
from coalconv.library import BOB, CAROL, gdiv3, pair_grab_game, roommates_game
from coalconv.minmax import individual_minmaxes
from coalconv.payoff_sets import stage_core
from coalconv.stability import (coalition_value_guarantee_check, min_delta_certify, verify, verify_ntu,
                                verify_tupm, verify_tupt, witness_gains)

from conftest import random_table_game

BC = mask_of([BOB, CAROL])
TOL = 2.0 ** -30


@pytest.mark.parametrize("delta,stable", [(0.3, False), (0.45, False), (0.5, True), (F(1, 2), True),
                                          (0.6, True), (0.9, True)])
def test_figure1_threshold(delta, stable):
    g = roommates_game()
    aut = roommates_figure1(g)
    res = verify_ntu(aut, g, delta)
    assert res.stable == stable
    if not stable:
        assert res.witness.coalition == BC
        assert aut.states[res.witness.state].label == "AB|C"


def test_constant_core_convention_always_stable():
    g = gdiv3()
    for a in stage_core(g):
        aut = constant_convention(g, a)
        assert all(verify(aut, g, d).stable for d in (0.0, 0.2, 0.5, 0.99))


def _div3_path_core(g):
    return g.payoffs.index((0, F(1, 2), F(1, 2))), g.payoffs.index((1, 0, 0))


def test_guarded_public_transfer_core_reversion():
    g = gdiv3(mode=TransferMode.TU_PUBLIC)
    path, core = _div3_path_core(g)
    aut = core_reversion_convention(g, path, core, guard_player=0)
    res = verify_tupm(aut, g, 0.4)
    assert not res.stable and res.witness.coalition == mask_of([0, 1])
    assert verify_tupm(aut, g, 0.6).stable
    assert verify_tupm(aut, g, 0.8).stable


def test_unguarded_public_transfer_core_reversion_is_bribed():
    # player 1 pays player 2 to move to (1,0,0) together; see the decisions ledger
    g = gdiv3(mode=TransferMode.TU_PUBLIC)
    path, core = _div3_path_core(g)
    aut = core_reversion_convention(g, path, core)
    res = verify_tupm(aut, g, 0.6)
    assert not res.stable and res.witness.coalition == mask_of([0, 1])
    assert res.witness.transfers[0][1] > 0


def test_secret_transfers_break_any_half_half_path():
    g = gdiv3(mode=TransferMode.TU_SECRET)
    path, core = _div3_path_core(g)
    for aut in (constant_convention(g, path), core_reversion_convention(g, path, core)):
        for d in (0.3, 0.6, 0.9):
            res = verify_tupt(aut, g, d)
            assert not res.stable and res.witness.coalition == mask_of([0, 1])


def test_built_tupt_passes_guarantee():
    g = pair_grab_game()
    aut, _ = build_folk_automaton(g, (2, 2, 2), 0.97, "tupt")
    assert verify_tupt(aut, g, 0.97).stable
    assert coalition_value_guarantee_check(aut, g, 0.97) is None


def test_guarantee_flags_coalition_below_minmax():
    g = gdiv3(mode=TransferMode.TU_SECRET)
    path, _ = _div3_path_core(g)
    v = coalition_value_guarantee_check(constant_convention(g, path), g, 0.9)
    assert v is not None and v.coalition in (mask_of([0, 1]), mask_of([0, 2]))


def test_witness_gains_reproduce():
    g = roommates_game()
    aut = roommates_figure1(g)
    for d in (0.3, 0.45):
        res = verify(aut, g, d)
        gains = witness_gains(aut, g, d, res.witness)
        assert all(x > 0 for x in gains)
        assert min(gains) >= res.witness.slack - TOL
    gp = gdiv3(mode=TransferMode.TU_PUBLIC)
    path, core = _div3_path_core(gp)
    aut = core_reversion_convention(gp, path, core, guard_player=0)
    res = verify(aut, gp, 0.4)
    assert all(x > 0 for x in witness_gains(aut, gp, 0.4, res.witness))


def test_stable_ntu_values_individually_rational():
    g = roommates_game()
    aut, _ = build_folk_automaton(g, (2, 2, 2), 0.95)
    mm = individual_minmaxes(g)
    V = continuation_values(aut, g, 0.95)
    assert all(V[s][i] >= mm[i] - TOL for s in range(len(V)) for i in range(3))


def _scaled(g, k):
    return g.with_payoffs([tuple(k * x for x in p) for p in g.payoffs])


@settings(max_examples=15)
@given(st.fractions(F(1, 7), 10, max_denominator=7), st.sampled_from([0.3, 0.45, 0.5, 0.7]))
def test_verdicts_invariant_under_positive_scaling(k, delta):
    g = roommates_game()
    aut = roommates_figure1(g)
    a, b = verify(aut, g, delta), verify(aut, _scaled(g, k), delta)
    assert a.stable == b.stable
    if not a.stable:
        assert a.witness.coalition == b.witness.coalition
    d3 = gdiv3()
    path, core = _div3_path_core(d3)
    s3 = _scaled(d3, k)
    x = verify(core_reversion_convention(d3, path, core), d3, delta)
    y = verify(core_reversion_convention(s3, path, core), s3, delta)
    assert x.stable == y.stable
    if not x.stable:
        assert x.witness.coalition == y.witness.coalition


def test_rebuilt_automaton_verdict_invariant_under_scaling():
    g = roommates_game()
    s = _scaled(g, F(3, 2))
    aut, _ = build_folk_automaton(s, (3, 3, 3), 0.95)
    assert verify(aut, s, 0.95).stable


def test_secret_stable_implies_public_stable():
    g = pair_grab_game()
    aut, _ = build_folk_automaton(g, (2, 2, 2), 0.97, "tupt")
    assert verify_tupt(aut, g, 0.97).stable
    assert verify_tupm(aut, g.with_mode(TransferMode.TU_PUBLIC), 0.97).stable


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.2, 0.5, 0.8]))
def test_constant_conventions_secret_implies_public(seed, delta):
    g = random_table_game(random.Random(seed), mode=TransferMode.TU_SECRET)
    for a in range(g.m):
        aut = constant_convention(g, a)
        if verify_tupt(aut, g, delta).stable:
            assert verify_tupm(aut, g.with_mode(TransferMode.TU_PUBLIC), delta).stable


def test_min_delta_table_for_core_reversion():
    g = gdiv3()
    path, core = _div3_path_core(g)
    cert = min_delta_certify(lambda d: core_reversion_convention(g, path, core), g, None,
                             [0.3, 0.45, 0.5, 0.6, 0.9])
    assert [p for _, p, _ in cert.table] == [False, False, True, True, True]
    assert cert.threshold == 0.5 and cert.monotone


def test_min_delta_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        min_delta_certify("ntu", roommates_game(), (2, 2, 2), [0.9, 0.5])
