from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from coalconv.lp import INFEASIBLE, UNBOUNDED, check_point, solve_lp


def test_small_lp_exact():
    # max x + y  s.t. x + 2y <= 4, 3x + y <= 6
    res = solve_lp([1, 1], [[1, 2], [3, 1]], [4, 6])
    assert res.ok
    assert res.value == Fraction(14, 5)
    assert res.x == [Fraction(8, 5), Fraction(6, 5)]


def test_infeasible_and_unbounded():
    assert solve_lp([1], [[1]], [-1]).status == INFEASIBLE
    assert solve_lp([1], [[-1]], [0]).status == UNBOUNDED


def test_free_variables_and_equalities():
    res = solve_lp([1, 0], A_eq=[[1, 1]], b_eq=[Fraction(1, 3)], bounds=[(None, 2), (None, None)],
                   maximize=False, A_ub=[[-1, 0]], b_ub=[5])
    assert res.ok and res.value == -5


def test_degenerate_problem_terminates():
    # classic cycling example for Dantzig's rule; Bland's rule must finish
    c = [Fraction(3, 4), -150, Fraction(1, 50), -6]
    A = [[Fraction(1, 4), -60, Fraction(-1, 25), 9], [Fraction(1, 2), -90, Fraction(-1, 50), 3], [0, 0, 1, 0]]
    res = solve_lp(c, A, [0, 0, 1])
    assert res.ok and res.value == Fraction(1, 20)


@given(st.integers(1, 4), st.integers(1, 5), st.data())
def test_matches_highs_on_random_bounded_lps(nv, nc, data):
    ints = st.integers(-5, 5)
    A = [[data.draw(ints) for _ in range(nv)] for _ in range(nc)]
    b = [data.draw(st.integers(0, 10)) for _ in range(nc)]
    c = [data.draw(ints) for _ in range(nv)]
    bounds = [(0, 7)] * nv
    ours = solve_lp(c, A, b, bounds=bounds)
    ref = linprog(-np.array(c, float), A_ub=np.array(A, float), b_ub=np.array(b, float), bounds=bounds,
                  method="highs")
    assert ours.ok == (ref.status == 0)
    if ours.ok:
        assert float(ours.value) == pytest.approx(-ref.fun, abs=1e-7)
        assert check_point(ours.x, A, b, bounds=bounds)


def test_float_mode_agrees():
    res = solve_lp([1, 1], [[1, 2], [3, 1]], [4, 6], exact=False)
    assert res.value == pytest.approx(2.8)
