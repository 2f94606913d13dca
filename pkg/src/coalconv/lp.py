"""Dense two-phase simplex with Bland's rule.

Works over Fraction (exact, the default) or float. The float mode exists for
the stability verifier, whose coefficients already carry binary64 discount
factors; every decision made on set membership uses the exact mode.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    value: object = None
    x: list | None = None

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, rows, rhs, basis, eps, zero):
        self.rows = rows      # list of coefficient lists
        self.rhs = rhs
        self.basis = basis
        self.eps = eps
        self.zero = zero

    def pivot(self, r, c):
        row = self.rows[r]
        p = row[c]
        row[:] = [x / p for x in row]
        self.rhs[r] = self.rhs[r] / p
        for k, other in enumerate(self.rows):
            if k == r:
                continue
            f = other[c]
            if f == 0:
                continue
            other[:] = [x - f * y for x, y in zip(other, row)]
            self.rhs[k] = self.rhs[k] - f * self.rhs[r]
            if self.eps:
                other[c] = self.zero
        self.basis[r] = c

    def run(self, cost, allowed):
        """Maximize cost.x over the current basis; returns False if unbounded."""
        eps = self.eps
        ncols = len(cost)
        while True:
            # reduced costs: cost_j - sum_r cost_B[r] * rows[r][j]
            cb = [cost[b] for b in self.basis]
            enter = None
            for j in range(ncols):
                if not allowed[j] or j in self.basis:
                    continue
                red = cost[j] - sum(cb[r] * self.rows[r][j] for r in range(len(self.rows)))
                if red > eps:
                    enter = j
                    break
            if enter is None:
                return True
            leave = None
            best = None
            for r, row in enumerate(self.rows):
                a = row[enter]
                if a > eps:
                    ratio = self.rhs[r] / a
                    if (best is None or ratio < best - eps
                            or (abs(ratio - best) <= eps and self.basis[r] < self.basis[leave])):
                        best, leave = ratio, r
            if leave is None:
                return False
            self.pivot(leave, enter)


def solve_lp(c: Sequence, A_ub: Sequence[Sequence] = (), b_ub: Sequence = (),
             A_eq: Sequence[Sequence] = (), b_eq: Sequence = (),
             bounds: Sequence[tuple] | None = None, *, maximize: bool = True,
             exact: bool = True, eps: float = 1e-11) -> LPResult:
    """Optimize c.x subject to A_ub x <= b_ub, A_eq x = b_eq and per-variable bounds.

    bounds[k] = (lo, hi) with None meaning unbounded on that side; default (0, None).
    """
    conv = Fraction if exact else float
    zero, one = conv(0), conv(1)
    tol = 0 if exact else eps
    nv = len(c)
    if bounds is None:
        bounds = [(0, None)] * nv

    # column map: original var -> list of (column, sign); plus offsets
    cols: list[list[tuple[int, int]]] = []
    offset = []
    extra_ub: list[tuple[dict, object]] = []
    ncol = 0
    for k, (lo, hi) in enumerate(bounds):
        if lo is None:
            cols.append([(ncol, 1), (ncol + 1, -1)])
            ncol += 2
            offset.append(zero)
            if hi is not None:
                extra_ub.append(({k: one}, conv(hi)))
        else:
            cols.append([(ncol, 1)])
            ncol += 1
            offset.append(conv(lo))
            if hi is not None:
                extra_ub.append(({k: one}, conv(hi)))

    def expand(coeffs):
        row = [zero] * ncol
        shift = zero
        for k, a in enumerate(coeffs):
            a = conv(a)
            if a == 0:
                continue
            for col, s in cols[k]:
                row[col] += a if s > 0 else -a
            shift += a * offset[k]
        return row, shift

    le_rows, le_rhs = [], []
    for coeffs, b in zip(A_ub, b_ub):
        row, shift = expand(coeffs)
        le_rows.append(row)
        le_rhs.append(conv(b) - shift)
    for d, b in extra_ub:
        coeffs = [d.get(k, zero) for k in range(nv)]
        row, shift = expand(coeffs)
        le_rows.append(row)
        le_rhs.append(b - shift)
    eq_rows, eq_rhs = [], []
    for coeffs, b in zip(A_eq, b_eq):
        row, shift = expand(coeffs)
        eq_rows.append(row)
        eq_rhs.append(conv(b) - shift)

    m_le, m_eq = len(le_rows), len(eq_rows)
    n_slack = m_le
    # artificials for eq rows and for le rows with negative rhs
    need_art = [r for r in range(m_le) if le_rhs[r] < 0]
    n_art = len(need_art) + m_eq
    total = ncol + n_slack + n_art
    rows, rhs, basis = [], [], []
    art_cols = []
    art_k = ncol + n_slack
    for r in range(m_le):
        row = le_rows[r] + [zero] * (n_slack + n_art)
        row[ncol + r] = one
        b = le_rhs[r]
        if b < 0:
            row = [-x for x in row]
            b = -b
            row[art_k] = one
            basis.append(art_k)
            art_cols.append(art_k)
            art_k += 1
        else:
            basis.append(ncol + r)
        rows.append(row)
        rhs.append(b)
    for r in range(m_eq):
        row = eq_rows[r] + [zero] * (n_slack + n_art)
        b = eq_rhs[r]
        if b < 0:
            row = [-x for x in row]
            b = -b
        row[art_k] = one
        basis.append(art_k)
        art_cols.append(art_k)
        art_k += 1
        rows.append(row)
        rhs.append(b)

    tab = _Tableau(rows, rhs, basis, tol, zero)
    allowed = [True] * total
    if art_cols:
        cost1 = [zero] * total
        for a in art_cols:
            cost1[a] = -one
        tab.run(cost1, allowed)
        infeas = sum((tab.rhs[r] for r in range(len(rows)) if tab.basis[r] in art_cols), zero)
        if infeas > (tol * 1e3 if tol else 0):
            return LPResult(INFEASIBLE)
        # drive zero-level artificials out of the basis
        art_set = set(art_cols)
        r = 0
        while r < len(tab.rows):
            if tab.basis[r] in art_set:
                piv = next((j for j in range(ncol + n_slack) if abs(tab.rows[r][j]) > tol), None)
                if piv is None:
                    del tab.rows[r]
                    del tab.rhs[r]
                    del tab.basis[r]
                    continue
                tab.pivot(r, piv)
            r += 1
        for a in art_cols:
            allowed[a] = False

    cost = [zero] * total
    sgn = one if maximize else -one
    for k, a in enumerate(c):
        a = conv(a)
        for col, s in cols[k]:
            cost[col] += sgn * a if s > 0 else -sgn * a
    if not tab.run(cost, allowed):
        return LPResult(UNBOUNDED)
    xcol = [zero] * total
    for r, b in enumerate(tab.basis):
        xcol[b] = tab.rhs[r]
    x = []
    for k in range(nv):
        val = offset[k]
        for col, s in cols[k]:
            val += xcol[col] if s > 0 else -xcol[col]
        x.append(val)
    value = sum((conv(a) * xv for a, xv in zip(c, x)), zero)
    return LPResult(OPTIMAL, value, x)


def check_point(x, A_ub=(), b_ub=(), A_eq=(), b_eq=(), bounds=None, tol=0) -> bool:
    """Substitute x back into the constraints."""
    for row, b in zip(A_ub, b_ub):
        if sum(a * v for a, v in zip(row, x)) > b + tol:
            return False
    for row, b in zip(A_eq, b_eq):
        if abs(sum(a * v for a, v in zip(row, x)) - b) > tol:
            return False
    if bounds is not None:
        for v, (lo, hi) in zip(x, bounds):
            if lo is not None and v < lo - tol:
                return False
            if hi is not None and v > hi + tol:
                return False
    return True
