"""Acceptance criteria 1-7. Run with `pytest tests/test_acceptance.py -s` to see one line per criterion."""
import json
import random
import re
import time
import warnings
from fractions import Fraction as F

import numpy as np
import pytest

from coalconv.automaton import continuation_values
from coalconv.conventions import build_folk_automaton, constant_convention, core_reversion_convention, \
    roommates_figure1
from coalconv.game_core import TransferMode, all_coalitions, experienced_payoff, mask_of
from coalconv.io import game_from_doc
from coalconv.library import BOB, CAROL, gdiv3, pair_grab_game, roommates_game
from coalconv.minmax import coalitional_minmax, efficient_coalitional_minmax
from coalconv.payoff_sets import CharacteristicFunction, strict_balanced_emptiness
from coalconv.set_iteration import b_ntu, initial_cover, iterate_fixed_point, random_subset
from coalconv.simple_games import SimpleGame, u_delta_membership
from coalconv.simulate import Directive, DeviationScript, run
from coalconv.stability import check_measurability, coalition_value_guarantee_check, verify, verify_tupt

from conftest import GAMES, random_table_game
from oracles import oracle_strict_core

TOL = 2.0 ** -30
LINES = {}


def record(k, ok, detail):
    prev = LINES.get(k)
    if prev is not None:
        ok = ok and prev[0]
        detail = f"{prev[1]}; {detail}"
    LINES[k] = (ok, detail)


@pytest.fixture(scope="module", autouse=True)
def report_lines():
    yield
    print()
    for k in sorted(LINES):
        ok, detail = LINES[k]
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'} ({detail})")


# -- 1 ---------------------------------------------------------------------------------

def test_criterion_1_figure1():
    g = roommates_game()
    t0 = time.perf_counter()
    aut = roommates_figure1(g)
    verdicts = {d: verify(aut, g, d) for d in (0.3, 0.45, 0.5, F(1, 2), 0.6, 0.9)}
    elapsed = time.perf_counter() - t0
    ok = all(verdicts[d].stable for d in (0.5, F(1, 2), 0.6, 0.9))
    for d in (0.3, 0.45):
        w = verdicts[d].witness
        ok &= (not verdicts[d].stable and w.coalition == mask_of([BOB, CAROL])
               and aut.states[w.state].label == "AB|C")
    ok &= elapsed < 1.0
    record(1, ok, f"stable from 0.5, Bob-Carol witness below, {elapsed:.2f}s")
    assert ok


# -- 2 ---------------------------------------------------------------------------------

DIV3 = SimpleGame.from_minimal(3, [[0, 1], [0, 2]])


def test_criterion_2_core_reversion_and_triangle():
    g = gdiv3()
    path, core = g.payoffs.index((0, F(1, 2), F(1, 2))), g.payoffs.index((1, 0, 0))
    aut = core_reversion_convention(g, path, core)
    hi, lo = verify(aut, g, F(1, 2)), verify(aut, g, F(49, 100))
    ok = hi.stable and not lo.stable and lo.witness.coalition in (mask_of([0, 1]), mask_of([0, 2]))
    ok &= u_delta_membership(DIV3, (0, F(1, 2), F(1, 2)), F(1, 2))
    ok &= not u_delta_membership(DIV3, (0, F(1, 2), F(1, 2)), F(49, 100))
    tri = [(1, 0, 0), (F(2, 5), F(3, 5), 0), (F(2, 5), 0, F(3, 5))]
    ok &= all(u_delta_membership(DIV3, u, F(3, 5)) for u in tri)
    # just outside each vertex
    ok &= not u_delta_membership(DIV3, (F(39, 100), F(61, 100), 0), F(3, 5))
    record(2, ok, "STABLE at 1/2, UNSTABLE at 49/100, U(0.6) vertices exact")
    assert ok


# -- 3 ---------------------------------------------------------------------------------

R3 = 32


@pytest.fixture(scope="module")
def div32():
    return gdiv3(R3)


def _plane_cells(E):
    idx = E.member_indices()
    return {tuple(int(x) for x in k) for k in idx if sum(int(x) for x in k) == R3}


def _lattice():
    return [(i, j, R3 - i - j) for i in range(R3 + 1) for j in range(R3 + 1 - i)]


def _within_one(A, B):
    return all(any(max(abs(x - y) for x, y in zip(a, b)) <= 1 for b in B) for a in A)


@pytest.mark.parametrize("delta", [
    pytest.param(0.3, marks=pytest.mark.xfail(strict=True, reason=(
        "below the single-veto threshold 1/2 the closed form is not established; "
        "the grid fixed point is a strict subset (see decisions ledger)"))),
    0.6, 0.9])
def test_criterion_3_set_iteration_matches_closed_form(div32, delta):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = iterate_fixed_point(div32, delta, R3)
    elapsed = time.perf_counter() - t0
    got = _plane_cells(res.fixed_point)
    want = {p for p in _lattice() if u_delta_membership(DIV3, tuple(F(x, R3) for x in p), F(delta))}
    ok = _within_one(got, want) and _within_one(want, got) and elapsed < 60
    note = "" if ok else " (below the veto threshold 1/2; see decisions ledger)"
    record(3, ok, f"delta={delta}: {len(got)} vs {len(want)} plane cells, {elapsed:.1f}s{note}")
    assert ok


# -- 4 ---------------------------------------------------------------------------------

def test_criterion_4_secret_transfer_guarantee():
    rng = random.Random(2024)
    stable = checked = 0
    ok = True
    for _ in range(20):
        g = random_table_game(rng, m=rng.randint(2, 6), mode=TransferMode.TU_SECRET)
        for a in range(g.m):
            aut = constant_convention(g, a)
            for d in (0.5, 0.9):
                checked += 1
                if verify_tupt(aut, g, d).stable:
                    stable += 1
                    ok &= coalition_value_guarantee_check(aut, g, d) is None
    built = pair_grab_game()
    aut, _ = build_folk_automaton(built, (2, 2, 2), 0.97, "tupt")
    ok &= verify_tupt(aut, built, 0.97).stable and coalition_value_guarantee_check(aut, built, 0.97) is None
    # a convention paying a winning pair less than it can secure alone
    d3 = gdiv3(mode=TransferMode.TU_SECRET)
    low = constant_convention(d3, d3.payoffs.index((0, F(1, 2), F(1, 2))))
    bad = coalition_value_guarantee_check(low, d3, 0.9)
    ok &= bad is not None and not verify_tupt(low, d3, 0.9).stable
    ok &= stable > 0
    record(4, ok, f"{stable}/{checked} random stable conventions meet the guarantee; below-minmax one UNSTABLE")
    assert ok


# -- 5 ---------------------------------------------------------------------------------

def _load(name):
    return game_from_doc(json.loads((GAMES / name).read_text()))[0]


def _v_of(label, params):
    m = re.match(r"wp?\((.*?)(?:,\d+)?\)$", label)
    key = m.group(1)
    if key == "0":
        return params.target
    if key.startswith("{"):
        return params.punishments.get(mask_of(int(i) - 1 for i in key[1:-1].split(",")), params.target)
    return params.punishments[int(key) - 1]


CASES5 = [("roommates.json", "ntu", (2, 2, 2)), ("pd_tu.json", "tupm", (F(12, 5), F(7, 5))),
          ("pair_grab.json", "tupt", (2, 2, 2)), ("pair_grab_partial.json", "some", (2, 2, 2))]


@pytest.mark.parametrize("name,regime,target", CASES5, ids=[c[1] for c in CASES5])
def test_criterion_5_folk_builds(name, regime, target):
    g = _load(name)
    kw = {"S": sorted(g.secret_coalitions)} if regime == "some" else {}
    t0 = time.perf_counter()
    aut, params = build_folk_automaton(g, target, 0.97, regime, **kw)
    stable = verify(aut, g, 0.97).stable
    V = continuation_values(aut, g, 0.97)
    hit = max(abs(float(x) - float(t)) for x, t in zip(V[aut.initial], target))
    # stationary builds have eps = 0; their cycle values must then match exactly up to TOL
    worst = 0.0
    for s, st in enumerate(aut.states):
        if st.label.startswith("w("):
            vd = _v_of(st.label, params)
            worst = max(worst, max(abs(float(a) - float(b)) for a, b in zip(V[s], vd)))
    close = worst < params.eps if params.eps else worst <= TOL
    ok = stable and hit <= TOL and close
    record(5, ok, f"{regime}: {len(aut.states)} states, |V-target|={hit:.1e}, {time.perf_counter() - t0:.1f}s")
    assert ok


# -- 6 ---------------------------------------------------------------------------------

def test_criterion_6_bondareva_shapley_vs_grid():
    rng = np.random.default_rng(6)
    agree = ambiguous = disagree = 0
    logged = []
    for _ in range(2000):
        vals = {}
        for C in range(1, 8):
            k = bin(C).count("1")
            hi = {1: 8, 2: 16, 3: 16}[k]
            lo = 8 if C == 7 else 0
            vals[C] = F(int(rng.integers(lo, hi + 1)), 8)
        exact = strict_balanced_emptiness(CharacteristicFunction.from_mapping(3, vals)).nonempty
        oracle = oracle_strict_core(vals)
        if oracle is None:
            ambiguous += 1
            if len(logged) < 5:
                logged.append({C: str(v) for C, v in vals.items()})
        elif oracle == exact:
            agree += 1
        else:
            disagree += 1
    ok = disagree == 0 and agree > 1500
    record(6, ok, f"{agree} agree, {disagree} disagree, {ambiguous} within the grid margin")
    if logged:
        print(f"\nambiguous characteristic functions (first {len(logged)}): {logged}")
    assert ok


# -- 7 ---------------------------------------------------------------------------------

def test_criterion_7_properties():
    t0 = time.perf_counter()
    failures = []
    rng = np.random.default_rng(7)
    g = gdiv3(6)
    for k in range(20):
        d = (0.3, 0.6, 0.9)[k % 3]
        big = random_subset(initial_cover(g, 6), 0.7, rng)
        small = random_subset(big, 0.6, rng)
        if not b_ntu(g, d, small).issubset(b_ntu(g, d, big)):
            failures.append("b_ntu monotonicity")
    prng = random.Random(7)
    for _ in range(20):
        h = random_table_game(prng)
        for C in all_coalitions(3):
            if efficient_coalitional_minmax(h, C).value < coalitional_minmax(h, C).value:
                failures.append("efficient minmax below minmax")
    grab = pair_grab_game()
    aut, _ = build_folk_automaton(grab, (2, 2, 2), 0.97, "tupt")
    for seed in range(20):
        r2 = random.Random(seed)
        t = r2.randrange(5)
        C = r2.randrange(1, 8)
        rows = tuple(tuple(F(r2.randint(0, 6), 3) if i != j else F(0) for j in range(3)) for i in range(3))
        here = aut.states[run(aut, grab, 0.97, H=t + 1).states[t]].alternative
        a = r2.choice(grab.effectivity(C, here))
        rep = run(aut, grab, 0.97, DeviationScript((Directive(t, C, a, rows),)), H=10)
        if any(sum(experienced_payoff(grab, b, T)) != grab.total(b) for b, _, T in rep.outcomes):
            failures.append("transfer conservation")
    if check_measurability(aut, list(all_coalitions(3))):
        failures.append("measurability")
    room = roommates_game()
    fig = roommates_figure1(room)
    for k in (F(1, 3), F(5, 2), F(7)):
        s = room.with_payoffs([tuple(k * x for x in p) for p in room.payoffs])
        for d in (0.3, 0.45, 0.5, 0.9):
            if verify(fig, room, d).stable != verify(fig, s, d).stable:
                failures.append("scaling invariance")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 300
    record(7, ok, f"{len(failures)} property failures, {elapsed:.1f}s")
    assert ok, failures
