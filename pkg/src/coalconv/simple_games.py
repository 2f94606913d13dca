"""Pure division problems decided by winning coalitions.

Everything here is a closed-form linear test on the unit simplex; the only
discretization happens when a convention automaton needs a finite game.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .automaton import ConventionAutomaton, continuation_values
from .conventions import constant_convention, core_reversion_convention
from .game_core import (SimpleGameRule, StageGame, TransferMode, all_coalitions, coalition_label,
                        mask_of, members, to_fraction)


class SimpleGameError(ValueError):
    """A request outside what the closed forms cover."""


@dataclass(frozen=True)
class SimpleGame:
    n: int
    winning: frozenset[int]

    @staticmethod
    def from_minimal(n: int, minimal: Iterable) -> "SimpleGame":
        """Close the listed coalitions upward and check properness."""
        mins = [m if isinstance(m, int) else mask_of(m) for m in minimal]
        win = frozenset(C for C in all_coalitions(n) if any(C & m == m for m in mins))
        sg = SimpleGame(n, win)
        bad = sg.violations()
        if bad:
            raise SimpleGameError("; ".join(bad))
        return sg

    @staticmethod
    def from_stage_game(g: StageGame) -> "SimpleGame":
        if not isinstance(g.rule, SimpleGameRule):
            raise SimpleGameError("game is not declared as a simple game")
        return SimpleGame(g.n, frozenset(g.rule.winning))

    def violations(self) -> list[str]:
        out = []
        full = (1 << self.n) - 1
        for C in self.winning:
            for D in all_coalitions(self.n):
                if D & C == C and D not in self.winning:
                    out.append(f"not monotone: {coalition_label(C)} wins but {coalition_label(D)} loses")
                    break
            if (full & ~C) in self.winning:
                out.append(f"not proper: {coalition_label(C)} and its complement both win")
        return out

    @property
    def grand(self) -> int:
        return (1 << self.n) - 1

    def minimal_winning(self) -> list[int]:
        return sorted(C for C in self.winning
                      if not any(D != C and D & C == D for D in self.winning))

    def stage_game(self, resolution: int, mode=TransferMode.NTU) -> StageGame:
        from .library import divide_the_dollar
        return divide_the_dollar(self.n, self.minimal_winning(), resolution, mode)


def veto_players(sg: SimpleGame) -> int:
    D = sg.grand
    for C in sg.winning:
        D &= C
    return D if sg.winning else 0


@dataclass(frozen=True)
class Classification:
    dictatorial: bool
    collegial: bool
    veto_count: int


def classify(sg: SimpleGame) -> Classification:
    D = veto_players(sg)
    dictator = any(len(members(C)) == 1 for C in sg.winning)
    return Classification(dictator, D != 0, len(members(D)) if D else 0)


def _simplex_point(sg: SimpleGame, u) -> tuple[Fraction, ...]:
    u = tuple(to_fraction(x) for x in u)
    if len(u) != sg.n or any(x < 0 for x in u) or sum(u) != 1:
        raise SimpleGameError("payoff is not on the unit simplex")
    return u


def u_delta_membership(sg: SimpleGame, u, delta) -> bool:
    """Every winning coalition gets at least 1 - δ."""
    u = _simplex_point(sg, u)
    floor = 1 - to_fraction(delta)
    return all(sum((u[i] for i in members(C)), Fraction(0)) >= floor for C in sg.winning)


def core_membership(sg: SimpleGame, u) -> bool:
    """Veto players share the whole unit."""
    D = veto_players(sg)
    if not D:
        raise SimpleGameError("no veto players: the core formula needs a collegial game")
    u = _simplex_point(sg, u)
    return sum((u[i] for i in members(D)), Fraction(0)) == 1


def single_veto_threshold(n: int) -> Fraction:
    return Fraction(n - 2, n - 1)


def _require_scope(sg: SimpleGame) -> Classification:
    c = classify(sg)
    if not c.collegial:
        raise SimpleGameError("game is not collegial")
    if c.dictatorial:
        raise SimpleGameError("game is dictatorial")
    return c


def stationary_sustainable(sg: SimpleGame, u, delta, mode: str = "ntu") -> bool:
    """Payoffs sustainable by a stationary stable convention (NTU or public transfers)."""
    if str(getattr(mode, "value", mode)).lower() not in ("ntu", "tupm", "tu_public"):
        raise SimpleGameError("only the NTU and public-transfer regimes are characterized")
    c = _require_scope(sg)
    d = to_fraction(delta)
    if c.veto_count == 1 and d <= single_veto_threshold(sg.n):
        raise SimpleGameError(f"below single-veto threshold: delta must exceed {single_veto_threshold(sg.n)}")
    return u_delta_membership(sg, u, d)


def secret_transfer_supportable(sg: SimpleGame, u) -> bool:
    return core_membership(sg, u)


def _unit_alt(g: StageGame, i: int) -> int:
    tgt = tuple(Fraction(int(j == i)) for j in range(g.n))
    return g.payoffs.index(tgt)


def punishment_convention(sg: SimpleGame, i: int, mode: str = "ntu",
                          g: StageGame | None = None) -> ConventionAutomaton:
    """A stable convention holding player i (0-based) to zero.

    Two or more veto players: a constant convention at another veto player's
    full share. One veto player d: constant at d's full share for i != d, and
    for d a core reversion from the equal split among the others (with the
    u_d guard under public transfers). The finite game used is stored in
    meta["game"].
    """
    c = _require_scope(sg)
    tu = str(getattr(mode, "value", mode)).lower() in ("tupm", "tu_public")
    if g is None:
        g = sg.stage_game(2 * (sg.n - 1), TransferMode.TU_PUBLIC if tu else TransferMode.NTU)
    D = members(veto_players(sg))
    if c.veto_count >= 2:
        holder = D[1] if i == D[0] else D[0]
        aut = constant_convention(g, _unit_alt(g, holder))
    elif i != D[0]:
        aut = constant_convention(g, _unit_alt(g, D[0]))
    else:
        d = D[0]
        share = Fraction(1, sg.n - 1)
        split = tuple(Fraction(0) if j == d else share for j in range(sg.n))
        if split not in g.payoffs:
            raise SimpleGameError("the finite game lacks the equal split among non-veto players")
        aut = core_reversion_convention(g, g.payoffs.index(split), _unit_alt(g, d),
                                        guard_player=d if tu else None)
    aut.meta["game"] = g
    aut.meta["punished"] = i
    return aut


def punishment_value(aut: ConventionAutomaton, delta) -> Fraction:
    """Player's value at the initial state (exact when δ is a Fraction)."""
    g = aut.meta["game"]
    return continuation_values(aut, g, delta)[aut.initial][aut.meta["punished"]]


__all__ = ["SimpleGame", "SimpleGameError", "Classification", "veto_players", "classify",
           "u_delta_membership", "core_membership", "stationary_sustainable",
           "secret_transfer_supportable", "punishment_convention", "punishment_value",
           "single_veto_threshold"]
