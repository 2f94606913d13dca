"""Membership and emptiness tests for payoff sets, all decided with exact LPs."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .game_core import StageGame, all_coalitions, members, to_fraction
from .lp import solve_lp
from .minmax import (coalitional_minmax, efficient_coalitional_minmax, individual_minmaxes)


def _fr(u) -> list[Fraction]:
    return [to_fraction(x) for x in u]


def _csum(u, C: int) -> Fraction:
    return sum((u[i] for i in members(C)), Fraction(0))


# -- stage core ---------------------------------------------------------------

def blocking_move(g: StageGame, a: int):
    """First (C, a') that strictly improves every member of C, or None."""
    va = g.v(a)
    for C in all_coalitions(g.n):
        mem = members(C)
        for b in g.effectivity(C, a):
            vb = g.v(b)
            if all(vb[i] > va[i] for i in mem):
                return C, b
    return None


def stage_core(g: StageGame) -> list[int]:
    return [a for a in range(g.m) if blocking_move(g, a) is None]


# -- feasibility ----------------------------------------------------------------

def hull_weights(g: StageGame, v) -> list[Fraction] | None:
    """Convex weights over alternatives reproducing v, or None."""
    v = _fr(v)
    m = g.m
    A_eq = [[g.v(a)[i] for a in range(m)] for i in range(g.n)] + [[1] * m]
    b_eq = v + [1]
    res = solve_lp([0] * m, A_eq=A_eq, b_eq=b_eq)
    return res.x if res.ok else None


def feasible_membership_ntu(g: StageGame, v, strict_ir: bool = False) -> bool:
    v = _fr(v)
    if strict_ir:
        mm = individual_minmaxes(g)
        if any(x <= b for x, b in zip(v, mm)):
            return False
    return hull_weights(g, v) is not None


def tu_feasible_ir_membership(g: StageGame, u, strict_ir: bool = False) -> bool:
    if not g.is_tu:
        raise ValueError("TU membership asked of an NTU game")
    u = _fr(u)
    tot = sum(u)
    if not (g.min_total() <= tot <= g.max_total()):
        return False
    if strict_ir:
        return all(x > b for x, b in zip(u, individual_minmaxes(g)))
    return True


# -- beta cores and S-rational sets ---------------------------------------------

def beta_core_membership(g: StageGame, u, efficient: bool = True, strict: bool = False) -> bool:
    u = _fr(u)
    if sum(u) != g.max_total():
        return False
    mm = efficient_coalitional_minmax if efficient else coalitional_minmax
    for C in all_coalitions(g.n):
        if C == g.N:
            continue
        s, b = _csum(u, C), mm(g, C).value
        if s < b or (strict and s == b):
            return False
    return True


@dataclass(frozen=True)
class SRational:
    member: bool                       # coalition constraints over S and the grand coalition
    individual_ir: tuple[bool, ...]    # u_i (>|>=) v̲_i per player, reported on the side
    failing: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.member


def s_rational_membership(g: StageGame, S: Iterable[int], u, strict: bool = False) -> SRational:
    u = _fr(u)
    failing = []
    for C in sorted(set(S) | {g.N}):
        s, b = _csum(u, C), coalitional_minmax(g, C).value
        # the grand coalition's bound is its feasibility frontier, so it is never strict
        if s < b or (strict and s == b and C != g.N):
            failing.append(C)
    mm = individual_minmaxes(g)
    ir = tuple((x > b) if strict else (x >= b) for x, b in zip(u, mm))
    return SRational(not failing, ir, tuple(failing))


# -- characteristic functions and balancedness ----------------------------------

class CharMode(str, enum.Enum):
    BETA = "beta"
    EFFICIENT_BETA = "efficient_beta"
    S_MIXED = "s_mixed"


@dataclass(frozen=True)
class CharacteristicFunction:
    n: int
    values: Mapping[int, Fraction]     # every nonempty coalition, grand coalition included

    def __call__(self, C: int) -> Fraction:
        return self.values[C]

    @staticmethod
    def from_mapping(n: int, values) -> "CharacteristicFunction":
        vals = {C: Fraction(values[C]) for C in all_coalitions(n)}
        return CharacteristicFunction(n, vals)


def characteristic_from_game(g: StageGame, mode=CharMode.BETA, S: Iterable[int] = ()) -> CharacteristicFunction:
    mode = CharMode(mode)
    S = set(S)
    vals = {}
    ind = individual_minmaxes(g)
    for C in all_coalitions(g.n):
        if C == g.N:
            vals[C] = g.max_total()
        elif mode is CharMode.BETA:
            vals[C] = coalitional_minmax(g, C).value
        elif mode is CharMode.EFFICIENT_BETA:
            vals[C] = efficient_coalitional_minmax(g, C).value
        else:
            vals[C] = (coalitional_minmax(g, C).value if C in S
                       else sum((ind[i] for i in members(C)), Fraction(0)))
    return CharacteristicFunction(g.n, vals)


@dataclass(frozen=True)
class Balancedness:
    nonempty: bool
    optimum: Fraction
    weights: Mapping[int, Fraction] = field(default_factory=dict)   # λ_C on C != N


def strict_balanced_emptiness(phi: CharacteristicFunction) -> Balancedness:
    """Strict core of (N, phi) is nonempty iff the balancing LP optimum is below phi(N)."""
    n = phi.n
    N = (1 << n) - 1
    cs = [C for C in all_coalitions(n) if C != N]
    c = [phi(C) for C in cs]
    A_eq = [[1 if (C >> i) & 1 else 0 for C in cs] for i in range(n)]
    res = solve_lp(c, A_eq=A_eq, b_eq=[1] * n, bounds=[(0, 1)] * len(cs))
    if not res.ok:
        raise RuntimeError("balancing system infeasible; singleton weights should always work")
    lam = {C: x for C, x in zip(cs, res.x) if x != 0}
    if res.value < phi(N):
        return Balancedness(True, res.value)
    return Balancedness(False, res.value, lam)


# -- max-slack emptiness and interior points -----------------------------------

@dataclass(frozen=True)
class SlackResult:
    slack: Fraction | None     # None when even the closed set is empty
    point: tuple | None

    @property
    def strictly_nonempty(self) -> bool:
        return self.slack is not None and self.slack > 0

    @property
    def nonempty(self) -> bool:
        return self.slack is not None and self.slack >= 0


def max_slack(n: int, lower: Sequence[tuple[int, Fraction]], total_lo, total_hi,
              cap: Fraction | None = None) -> SlackResult:
    """max t s.t. sum_C u >= b_C + t for (C, b_C) in lower, total_lo <= sum u <= total_hi.

    The slack is capped (default 1) so unbounded directions still give a finite point.
    """
    cap = Fraction(1) if cap is None else Fraction(cap)
    nv = n + 1
    A_ub, b_ub = [], []
    for C, b in lower:
        A_ub.append([-1 if (C >> i) & 1 else 0 for i in range(n)] + [1])
        b_ub.append(-Fraction(b))
    A_ub.append([1] * n + [0])
    b_ub.append(Fraction(total_hi))
    A_ub.append([-1] * n + [0])
    b_ub.append(-Fraction(total_lo))
    bounds = [(None, None)] * n + [(None, cap)]
    c = [0] * n + [1]
    res = solve_lp(c, A_ub, b_ub, bounds=bounds)
    if not res.ok:
        return SlackResult(None, None)
    return SlackResult(res.value, tuple(res.x[:n]))


def set_constraints(g: StageGame, kind: str, S: Iterable[int] = ()):
    """(coalition lower bounds, total_lo, total_hi) describing a TU payoff set."""
    ind = individual_minmaxes(g)
    single = [(1 << i, ind[i]) for i in range(g.n)]
    top = g.max_total()
    if kind == "fir":
        return single, g.min_total(), top
    if kind in ("beta", "ebeta"):
        mm = efficient_coalitional_minmax if kind == "ebeta" else coalitional_minmax
        return [(C, mm(g, C).value) for C in all_coalitions(g.n) if C != g.N], top, top
    if kind == "srational":
        return [(C, coalitional_minmax(g, C).value) for C in sorted(set(S))], g.min_total(), top
    if kind == "srational_ir":
        # the set the partial-secrecy construction actually needs: S plus individuals, feasible
        extra = [(C, coalitional_minmax(g, C).value) for C in sorted(set(S))]
        return single + extra, g.min_total(), top
    raise ValueError(f"unknown set kind {kind!r}")


def set_slack(g: StageGame, kind: str, S: Iterable[int] = ()) -> SlackResult:
    lower, lo, hi = set_constraints(g, kind, S)
    return max_slack(g.n, lower, lo, hi)


def interior_point(g: StageGame, kind: str, S: Iterable[int] = ()):
    r = set_slack(g, kind, S)
    return r.point if r.strictly_nonempty else None


# -- descriptors ----------------------------------------------------------------

class SetKind(str, enum.Enum):
    FEASIBLE_V = "feasible_v"
    FEASIBLE_IR_NTU = "feasible_ir_ntu"
    FEASIBLE_IR_TU = "feasible_ir_tu"
    CORE_STAGE = "core_stage"
    BETA_CORE = "beta_core"
    EFFICIENT_BETA_CORE = "efficient_beta_core"
    S_RATIONAL = "s_rational"
    U_DELTA = "u_delta"


@dataclass(frozen=True)
class PayoffSetDescriptor:
    """A named payoff set plus the parameters its kind needs."""
    kind: SetKind
    strict: bool = False
    S: frozenset[int] = frozenset()
    delta: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SetKind(self.kind))
        if self.kind is SetKind.U_DELTA and self.delta is None:
            raise ValueError("U_DELTA needs delta")
        if self.kind is SetKind.S_RATIONAL and not self.S:
            raise ValueError("S_RATIONAL needs a nonempty S")
        if self.delta is not None:
            object.__setattr__(self, "delta", to_fraction(self.delta))

    def contains(self, g: StageGame, u) -> bool:
        k = self.kind
        if k is SetKind.FEASIBLE_V:
            return feasible_membership_ntu(g, u)
        if k is SetKind.FEASIBLE_IR_NTU:
            return feasible_membership_ntu(g, u, strict_ir=self.strict)
        if k is SetKind.FEASIBLE_IR_TU:
            return tu_feasible_ir_membership(g, u, strict_ir=self.strict)
        if k is SetKind.CORE_STAGE:
            u = tuple(_fr(u))
            return any(g.v(a) == u for a in stage_core(g))
        if k is SetKind.BETA_CORE:
            return beta_core_membership(g, u, efficient=False, strict=self.strict)
        if k is SetKind.EFFICIENT_BETA_CORE:
            return beta_core_membership(g, u, efficient=True, strict=self.strict)
        if k is SetKind.S_RATIONAL:
            return bool(s_rational_membership(g, self.S, u, strict=self.strict))
        from .simple_games import SimpleGame, u_delta_membership
        return u_delta_membership(SimpleGame.from_stage_game(g), u, self.delta)


__all__ = ["stage_core", "blocking_move", "hull_weights", "feasible_membership_ntu",
           "tu_feasible_ir_membership", "beta_core_membership", "s_rational_membership", "SRational",
           "CharMode", "CharacteristicFunction", "characteristic_from_game", "Balancedness",
           "strict_balanced_emptiness", "max_slack", "set_constraints", "set_slack", "interior_point",
           "SlackResult", "SetKind", "PayoffSetDescriptor"]
