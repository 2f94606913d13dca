"""Grid outer approximation of the NTU self-enforcing payoff set.

A grid set keeps one bit per cell; cell centers sit on origin + k*step for
k = 0..r on every axis, so payoffs on a matching lattice fall on centers.
"""
from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, TextIO

import numpy as np

from .game_core import StageGame, all_coalitions, members
from .minmax import individual_minmaxes

_EPS = 1e-12


class IterationCapExceeded(RuntimeError):
    pass


@dataclass(eq=False)
class GridPayoffSet:
    origin: tuple            # first center per axis (Fraction)
    step: tuple              # cell width per axis (Fraction)
    r: int
    bits: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.origin)

    @property
    def box(self) -> tuple[tuple, tuple]:
        lo = tuple(o - s / 2 for o, s in zip(self.origin, self.step))
        hi = tuple(o + self.r * s + s / 2 for o, s in zip(self.origin, self.step))
        return lo, hi

    def axis(self, k: int) -> np.ndarray:
        return float(self.origin[k]) + float(self.step[k]) * np.arange(self.r + 1)

    def center(self, idx) -> tuple[Fraction, ...]:
        return tuple(o + s * i for o, s, i in zip(self.origin, self.step, idx))

    def index_of(self, v) -> tuple[int, ...] | None:
        """Index of the cell containing v (ties to the lower cell), None outside the box."""
        out = []
        for k, x in enumerate(v):
            q = (Fraction(x) - self.origin[k]) / self.step[k] if not isinstance(x, float) \
                else (x - float(self.origin[k])) / float(self.step[k])
            i = int(np.floor(float(q) + 0.5)) if not isinstance(q, Fraction) else _round_half_down(q)
            if not (0 <= i <= self.r):
                return None
            out.append(i)
        return tuple(out)

    def contains(self, v) -> bool:
        idx = self.index_of(v)
        return idx is not None and bool(self.bits[idx])

    @property
    def count(self) -> int:
        return int(self.bits.sum())

    def is_empty(self) -> bool:
        return not self.bits.any()

    def like(self, bits) -> "GridPayoffSet":
        return GridPayoffSet(self.origin, self.step, self.r, np.asarray(bits, dtype=bool))

    def issubset(self, other: "GridPayoffSet") -> bool:
        return not np.any(self.bits & ~other.bits)

    def __eq__(self, other) -> bool:
        return (isinstance(other, GridPayoffSet) and self.origin == other.origin
                and self.step == other.step and self.r == other.r
                and bool(np.array_equal(self.bits, other.bits)))

    def dilate(self, k: int = 1) -> "GridPayoffSet":
        """Cells within k cells (sup norm) of a member."""
        out = self.bits.copy()
        for shift in itertools.product(range(-k, k + 1), repeat=self.n):
            if any(shift):
                out |= _shifted(self.bits, shift)
        return self.like(out)

    def member_indices(self) -> np.ndarray:
        return np.argwhere(self.bits)

    def centers(self, idx: np.ndarray) -> np.ndarray:
        o = np.array([float(x) for x in self.origin])
        s = np.array([float(x) for x in self.step])
        return o + idx * s

    def to_csv(self, out: TextIO) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow([f"x{k + 1}" for k in range(self.n)] + ["member"])
        for idx in itertools.product(range(self.r + 1), repeat=self.n):
            c = self.center(idx)
            w.writerow([_dec(x) for x in c] + [int(self.bits[idx])])


def _round_half_down(q: Fraction) -> int:
    f = q.numerator // q.denominator
    return f if q - f <= Fraction(1, 2) else f + 1


def _dec(x: Fraction) -> str:
    return repr(float(x))


def _shifted(b: np.ndarray, shift) -> np.ndarray:
    out = np.zeros_like(b)
    src, dst = [], []
    for s, size in zip(shift, b.shape):
        if s >= 0:
            src.append(slice(0, size - s))
            dst.append(slice(s, size))
        else:
            src.append(slice(-s, size))
            dst.append(slice(0, size + s))
    out[tuple(dst)] = b[tuple(src)]
    return out


# -- grids for a game ---------------------------------------------------------------

def grid_for(g: StageGame, r: int) -> GridPayoffSet:
    """Empty grid whose centers run from each player's lowest to highest payoff."""
    if r < 1:
        raise ValueError("resolution must be positive")
    lo = [min(g.v(a)[i] for a in range(g.m)) for i in range(g.n)]
    hi = [max(g.v(a)[i] for a in range(g.m)) for i in range(g.n)]
    step = tuple((h - l) / r if h > l else Fraction(1) for l, h in zip(lo, hi))
    return GridPayoffSet(tuple(lo), step, r, np.zeros((r + 1,) * g.n, dtype=bool))


def _all_index(grid: GridPayoffSet) -> np.ndarray:
    return np.indices((grid.r + 1,) * grid.n).reshape(grid.n, -1).T


def initial_cover(g: StageGame, r: int) -> GridPayoffSet:
    """Cells that may meet the individually rational feasible set.

    Outer test: a cell survives unless its center is more than half a cell
    beyond an IR bound or beyond a support line of the payoff hull along a
    direction in {-1,0,1}^n.
    """
    grid = grid_for(g, r)
    idx = _all_index(grid)
    X = grid.centers(idx)
    half = np.array([float(s) / 2 for s in grid.step])
    mm = np.array([float(x) for x in individual_minmaxes(g)])
    keep = np.all(X >= mm - half - _EPS, axis=1)
    P = np.array([[float(x) for x in g.v(a)] for a in range(g.m)])
    for d in itertools.product((-1, 0, 1), repeat=g.n):
        if not any(d):
            continue
        d = np.array(d, dtype=float)
        bound = (P @ d).max() + np.abs(d) @ half + _EPS
        keep &= X @ d <= bound
    bits = np.zeros((r + 1,) * g.n, dtype=bool)
    bits[tuple(idx[keep].T)] = True
    return grid.like(bits)


# -- the operator -------------------------------------------------------------------

class _Ops:
    """Per-(W, δ) precomputation shared by b_ntu and decompose_witness."""

    def __init__(self, g: StageGame, delta, W: GridPayoffSet):
        if g.is_tu:
            raise ValueError("the grid operator is the NTU one; use an NTU game")
        self.g, self.W = g, W
        self.d = float(delta)
        if not (0 <= self.d < 1):
            raise ValueError("delta must lie in [0, 1)")
        self.P = np.array([[float(x) for x in g.v(a)] for a in range(g.m)])
        self.origin = np.array([float(x) for x in W.origin])
        self.step = np.array([float(x) for x in W.step])
        self.half = self.step / 2
        mem = W.member_indices()
        self.wlow = (self.origin + mem * self.step).min(axis=0) if len(mem) else None
        S = np.zeros(tuple(k + 1 for k in W.bits.shape), dtype=np.int64)
        S[(slice(1, None),) * W.n] = W.bits.astype(np.int64)
        for ax in range(W.n):
            S = S.cumsum(axis=ax)
        self.S = S
        self._ic: dict = {}

    def ic(self, X: np.ndarray, C: int, E: tuple) -> np.ndarray:
        """True where some member of C is not better off at any a' in E followed by their worst."""
        key = (C, E)
        thr = self._ic.get(key)
        mem = list(members(C))
        if thr is None:
            thr = (1 - self.d) * self.P[list(E)][:, mem] + self.d * self.wlow[mem]
            thr = _pareto_max(thr)
            self._ic[key] = thr
        lhs = X[:, mem] + self.half[mem] + _EPS
        fail = np.zeros(len(X), dtype=bool)
        for row in thr:
            fail |= np.all(lhs < row, axis=1)
        return ~fail

    def ic_all(self, X: np.ndarray, a: int) -> np.ndarray:
        ok = np.ones(len(X), dtype=bool)
        for C in all_coalitions(self.g.n):
            ok &= self.ic(X, C, tuple(self.g.effectivity(C, a)))
            if not ok.any():
                break
        return ok

    def ranges(self, X: np.ndarray, a: int):
        """Per axis, the inclusive index range of on-path continuations φ0."""
        r = self.W.r
        if self.d == 0:
            near = np.all(np.abs(X - self.P[a]) <= self.half + _EPS, axis=1)
            lo = np.zeros_like(X, dtype=np.int64)
            hi = np.full_like(lo, r)
            hi[~near] = -1
            return lo, hi
        t = (X - (1 - self.d) * self.P[a]) / self.d
        kf = (t - self.origin) / self.step
        rad = 1 / (2 * self.d)
        lo = np.ceil(kf - rad - 1e-9).astype(np.int64)
        hi = np.floor(kf + rad + 1e-9).astype(np.int64)
        return np.clip(lo, 0, r), np.minimum(hi, r)

    def box_count(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        n = self.W.n
        valid = np.all(lo <= hi, axis=1)
        tot = np.zeros(len(lo), dtype=np.int64)
        lo_c, hi_c = np.maximum(lo, 0), np.maximum(hi, -1)
        for corner in itertools.product((0, 1), repeat=n):
            sel = tuple(np.where(valid, hi_c[:, k] + 1 if c else lo_c[:, k], 0) for k, c in enumerate(corner))
            sign = -1 if (n - sum(corner)) % 2 else 1
            tot += sign * self.S[sel]
        return np.where(valid, tot, 0)


def _pareto_max(T: np.ndarray) -> np.ndarray:
    """Rows not weakly dominated by another row (duplicates kept once)."""
    T = np.unique(T, axis=0)
    keep = []
    for k in range(len(T)):
        dom = np.all(T >= T[k], axis=1) & np.any(T > T[k], axis=1)
        if not dom.any():
            keep.append(k)
    return T[keep]


def _distinct_alternatives(g: StageGame) -> list[int]:
    seen, out = set(), []
    for a in range(g.m):
        key = (g.v(a), tuple(tuple(g.effectivity(C, a)) for C in all_coalitions(g.n)))
        if key not in seen:
            seen.add(key)
            out.append(a)
    return out


def b_ntu(g: StageGame, delta, W: GridPayoffSet, candidates: np.ndarray | None = None) -> GridPayoffSet:
    """Cells whose center is decomposable on W (outer, half-cell slack).

    `candidates` restricts which cells are evaluated (a boolean array on the
    grid); the rest are reported as non-members.
    """
    out = np.zeros_like(W.bits)
    if W.is_empty():
        return W.like(out)
    ops = _Ops(g, delta, W)
    cand = W.like(np.ones_like(W.bits) if candidates is None else candidates)
    idx = cand.member_indices()
    X = W.centers(idx)
    done = np.zeros(len(idx), dtype=bool)
    for a in _distinct_alternatives(g):
        todo = np.flatnonzero(~done)
        if not len(todo):
            break
        Xa = X[todo]
        lo, hi = ops.ranges(Xa, a)
        hit = ops.box_count(lo, hi) > 0
        if not hit.any():
            continue
        sub = todo[hit]
        ok = ops.ic_all(X[sub], a)
        done[sub[ok]] = True
    out[tuple(idx[done].T)] = True
    return W.like(out)


@dataclass
class IterationResult:
    fixed_point: GridPayoffSet
    iterations: int
    counts: list[int]
    warned: bool = False


def iterate_fixed_point(g: StageGame, delta, r: int, max_iter: int | None = None) -> IterationResult:
    """Apply b_ntu from the initial cover until no cell is removed."""
    cap = max_iter if max_iter is not None else 10 * r * g.n
    W = initial_cover(g, r)
    counts = [W.count]
    nxt = b_ntu(g, delta, W)
    warned = False
    if not nxt.issubset(W):
        warnings.warn("first application left the initial cover; intersecting with it")
        warned = True
        nxt = nxt.like(nxt.bits & W.bits)
    k = 1
    while True:
        counts.append(nxt.count)
        if nxt == W:
            return IterationResult(nxt, k, counts, warned)
        if k >= cap:
            raise IterationCapExceeded(f"no fixed point after {cap} applications")
        W = nxt
        # monotone operator on a decreasing sequence: only current members can survive
        nxt = b_ntu(g, delta, W, candidates=W.bits)
        k += 1


def decompose_witness(g: StageGame, delta, E: GridPayoffSet, v):
    """(alternative, on-path continuation center) decomposing v on E, or None.

    Alternatives are tried in index order and continuations in lexicographic
    cell order, so the answer is the smallest pair that passes.
    """
    idx = E.index_of(v)
    if idx is None or not E.bits[idx]:
        raise ValueError("v is not a member of E")
    ops = _Ops(g, delta, E)
    X = E.centers(np.array([idx]))
    for a in range(g.m):
        lo, hi = ops.ranges(X, a)
        if ops.box_count(lo, hi)[0] == 0:
            continue
        if not ops.ic_all(X, a)[0]:
            continue
        box = tuple(slice(int(l), int(h) + 1) for l, h in zip(lo[0], hi[0]))
        sub = np.argwhere(E.bits[box])
        first = tuple(int(l) + int(s) for l, s in zip(lo[0], sub[0]))
        return a, E.center(first)
    return None


def grid_from_predicate(grid: GridPayoffSet, pred) -> GridPayoffSet:
    """Cells whose center satisfies pred (called with a tuple of Fractions)."""
    bits = np.zeros_like(grid.bits)
    for idx in itertools.product(range(grid.r + 1), repeat=grid.n):
        bits[idx] = bool(pred(grid.center(idx)))
    return grid.like(bits)


def random_subset(W: GridPayoffSet, p: float, rng: np.random.Generator) -> GridPayoffSet:
    return W.like(W.bits & (rng.random(W.bits.shape) < p))


__all__ = ["GridPayoffSet", "grid_for", "initial_cover", "b_ntu", "iterate_fixed_point",
           "decompose_witness", "IterationResult", "IterationCapExceeded", "grid_from_predicate",
           "random_subset"]
