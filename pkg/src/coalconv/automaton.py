"""Finite convention automata and their continuation values.

A state outputs an unblocked outcome (alternative plus recommended transfers)
and names its successor when nobody blocks. Blocking is handled by a shared
policy: per coalition, an ordered list of cells. A cell is a conjunction of
linear conditions on the realized experienced payoff vector u, optionally
measured relative to the state's own recommended payoff, and names a
successor. The first satisfied cell wins; builders emit cells that partition
the payoff space so that closures only overlap on boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .game_core import StageGame, experienced_payoff, members, zero_transfers

NEXT = -1          # successor token: "as if nobody blocked"

_OPS = ("<=", "<", ">=", ">", "==")


@dataclass(frozen=True)
class LinCon:
    coeffs: tuple          # one entry per player
    op: str
    rhs: Fraction = Fraction(0)
    relative: bool = False

    def value(self, u, ref):
        if self.relative:
            return sum(c * (x - r) for c, x, r in zip(self.coeffs, u, ref) if c)
        return sum(c * x for c, x in zip(self.coeffs, u) if c)

    def holds(self, u, ref) -> bool:
        lhs = self.value(u, ref)
        op = self.op
        if op == "<=":
            return lhs <= self.rhs
        if op == "<":
            return lhs < self.rhs
        if op == ">=":
            return lhs >= self.rhs
        if op == ">":
            return lhs > self.rhs
        return lhs == self.rhs

    def as_le(self, ref):
        """(coeffs, rhs) of the closed version written as coeffs.u <= rhs."""
        shift = sum(c * r for c, r in zip(self.coeffs, ref) if c) if self.relative else 0
        rhs = self.rhs + shift
        if self.op in ("<=", "<"):
            return [self.coeffs], [rhs]
        if self.op in (">=", ">"):
            return [[-c for c in self.coeffs]], [-rhs]
        return [self.coeffs, [-c for c in self.coeffs]], [rhs, -rhs]


@dataclass(frozen=True)
class Cell:
    constraints: tuple = ()
    successor: int = NEXT
    alternatives: frozenset | None = None   # realized alternatives the cell applies to; None = all

    def applies(self, a: int) -> bool:
        return self.alternatives is None or a in self.alternatives

    def holds(self, u, ref) -> bool:
        return all(c.holds(u, ref) for c in self.constraints)


@dataclass(frozen=True)
class Rule:
    coalitions: frozenset | None    # None matches every nonempty coalition
    cells: tuple


@dataclass(frozen=True)
class Policy:
    rules: tuple

    def cells_for(self, C: int) -> tuple:
        for r in self.rules:
            if r.coalitions is None or C in r.coalitions:
                return r.cells
        return (Cell((), NEXT),)


@dataclass(frozen=True)
class State:
    label: str
    alternative: int
    transfers: tuple | None
    next: int
    policy: int


@dataclass(frozen=True, eq=False)
class ConventionAutomaton:
    n: int
    states: tuple
    policies: tuple
    initial: int = 0
    tu: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def index(self, label: str) -> int:
        for k, s in enumerate(self.states):
            if s.label == label:
                return k
        raise KeyError(label)

    def recommended(self, g: StageGame, s: int) -> tuple:
        st = self.states[s]
        if self.tu:
            return experienced_payoff(g, st.alternative, st.transfers or zero_transfers(g.n))
        return g.v(st.alternative)

    def cells(self, s: int, C: int, a: int | None = None) -> tuple:
        cells = self.policies[self.states[s].policy].cells_for(C)
        if a is None:
            return cells
        out = []
        for c in cells:
            if c.applies(a):
                out.append(c)
                if not c.constraints:
                    break      # catch-all: later cells are unreachable for this alternative
        return tuple(out)

    def resolve(self, s: int, succ: int) -> int:
        return self.states[s].next if succ == NEXT else succ

    def successor(self, g: StageGame, s: int, C: int, a: int | None = None, T=None) -> int:
        st = self.states[s]
        if not C:
            return st.next
        if a is None:
            a = st.alternative
        if self.tu:
            T = T if T is not None else _deviation_transfers(st, C, g.n)
            u = experienced_payoff(g, a, T)
        else:
            u = g.v(a)
        ref = self.recommended(g, s)
        for cell in self.cells(s, C, a):
            if cell.holds(u, ref):
                return self.resolve(s, cell.successor)
        raise ValueError(f"no cell matched at state {st.label}, coalition {C}")

    def declared_mode(self) -> str:
        return self.meta.get("regime", "tu" if self.tu else "ntu")


def _deviation_transfers(st: State, C: int, n: int):
    """Recommended transfers with the rows of C zeroed (C pays nothing)."""
    base = st.transfers or zero_transfers(n)
    mem = set(members(C))
    z = Fraction(0)
    return tuple(tuple(z for _ in range(n)) if i in mem else base[i] for i in range(n))


def merge_transfers(recommended, C: int, rows_C) -> tuple:
    """Outcome transfers: rows of C from rows_C, others as recommended."""
    n = len(recommended)
    mem = set(members(C))
    return tuple(tuple(rows_C[i]) if i in mem else tuple(recommended[i]) for i in range(n))


# -- continuation values --------------------------------------------------------

def continuation_values(aut: ConventionAutomaton, g: StageGame, delta) -> list[list]:
    """V(w) for every state, solving V = (1-δ)u(f(w)) + δV(next(w)) along on-path chains.

    δ may be a float (binary64 result) or a Fraction (exact result).
    """
    exact = isinstance(delta, Fraction)
    conv = Fraction if exact else float
    d = conv(delta)
    if not (0 <= d < 1):
        raise ValueError("delta must lie in [0, 1)")
    S = len(aut.states)
    pay = [[conv(x) for x in aut.recommended(g, s)] for s in range(S)]
    V: list = [None] * S
    status = [0] * S       # 0 unseen, 1 on stack, 2 done
    for start in range(S):
        if status[start]:
            continue
        path = []
        s = start
        while status[s] == 0:
            status[s] = 1
            path.append(s)
            s = aut.states[s].next
        if status[s] == 1:
            # s starts a cycle inside path
            k = path.index(s)
            cyc = path[k:]
            L = len(cyc)
            acc = [conv(0)] * g.n
            w = conv(1)
            for c in cyc:
                acc = [x + (1 - d) * w * y for x, y in zip(acc, pay[c])]
                w *= d
            V[cyc[0]] = [x / (1 - w) for x in acc]
            for j in range(L - 1, 0, -1):
                c = cyc[j]
                nxt = V[cyc[(j + 1) % L]]
                V[c] = [(1 - d) * x + d * y for x, y in zip(pay[c], nxt)]
            for c in cyc:
                status[c] = 2
            path = path[:k]
        for c in reversed(path):
            nxt = V[aut.states[c].next]
            V[c] = [(1 - d) * x + d * y for x, y in zip(pay[c], nxt)]
            status[c] = 2
    return V


def fixed_point_residual(aut, g, delta, V) -> float:
    d = float(delta)
    worst = 0.0
    for s, st in enumerate(aut.states):
        u = [float(x) for x in aut.recommended(g, s)]
        nxt = V[st.next]
        for x, y, z in zip(V[s], u, nxt):
            worst = max(worst, abs(float(x) - ((1 - d) * y + d * float(z))))
    return worst


def relabel(states: Sequence[State]) -> dict:
    return {s.label: k for k, s in enumerate(states)}
