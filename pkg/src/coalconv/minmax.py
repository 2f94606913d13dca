"""Pure minmaxes by enumeration. Ties go to the smallest alternative index."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .game_core import StageGame, all_coalitions


@dataclass(frozen=True)
class MinmaxResult:
    value: Fraction
    minimizer: int      # a̲_C (or a̲^e_C)
    maximizer: int      # best reply in E_C(minimizer)


def _inner(g: StageGame, C: int, a: int) -> tuple[Fraction, int]:
    best, arg = None, -1
    for b in g.effectivity(C, a):
        t = g.total(b, C)
        if best is None or t > best:
            best, arg = t, b
    return best, arg


def _outer(g: StageGame, C: int, candidates) -> MinmaxResult:
    key = ("mm", C, tuple(candidates))
    hit = g._cache.get(key)
    if hit is not None:
        return hit
    res = None
    for a in candidates:
        val, arg = _inner(g, C, a)
        if res is None or val < res.value:
            res = MinmaxResult(val, a, arg)
    g._cache[key] = res
    return res


def individual_minmax(g: StageGame, i: int) -> MinmaxResult:
    return coalitional_minmax(g, 1 << i)


def coalitional_minmax(g: StageGame, C: int) -> MinmaxResult:
    return _outer(g, C, range(g.m))


def efficient_alternatives(g: StageGame) -> list[int]:
    top = g.max_total()
    return [a for a in range(g.m) if g.total(a) == top]


def efficient_coalitional_minmax(g: StageGame, C: int) -> MinmaxResult:
    return _outer(g, C, efficient_alternatives(g))


def minimizers(g: StageGame, C: int, efficient: bool = False) -> list[int]:
    """Every alternative attaining the (efficient) coalitional minmax of C."""
    cand = efficient_alternatives(g) if efficient else range(g.m)
    val = (efficient_coalitional_minmax if efficient else coalitional_minmax)(g, C).value
    return [a for a in cand if _inner(g, C, a)[0] == val]


def best_response_set(g: StageGame, C: int, a: int) -> list[int]:
    val, _ = _inner(g, C, a)
    return [b for b in g.effectivity(C, a) if g.total(b, C) == val]


def individual_minmaxes(g: StageGame) -> list[Fraction]:
    return [individual_minmax(g, i).value for i in range(g.n)]


def minmax_table(g: StageGame) -> dict[int, tuple[MinmaxResult, MinmaxResult]]:
    """C -> (coalitional, efficient coalitional) for every nonempty C."""
    return {C: (coalitional_minmax(g, C), efficient_coalitional_minmax(g, C))
            for C in all_coalitions(g.n)}


__all__ = ["MinmaxResult", "individual_minmax", "coalitional_minmax", "efficient_alternatives",
           "efficient_coalitional_minmax", "minimizers", "best_response_set", "individual_minmaxes",
           "minmax_table"]
