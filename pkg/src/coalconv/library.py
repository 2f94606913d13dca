"""Reference games used throughout the tests, docs and CLI examples."""
from __future__ import annotations

import itertools
from fractions import Fraction

from .game_core import (ExplicitTable, SimpleGameRule, StageGame, StrategicForm, TransferMode,
                        all_coalitions, mask_of, members)

ALICE, BOB, CAROL = 0, 1, 2

# payoff to row player from rooming with column player; diagonal is rooming alone
ROOM_TABLE = ((1, 3, 2),
              (2, 1, 3),
              (3, 2, 1))

# alternatives: index -> matched pair (None for everyone single)
ROOM_MATCHES = ((ALICE, BOB), (ALICE, CAROL), (BOB, CAROL), None)
ROOM_LABELS = ("AB|C", "AC|B", "BC|A", "A|B|C")


def _room_payoff(match):
    out = []
    for i in range(3):
        if match is not None and i in match:
            partner = match[0] if match[1] == i else match[1]
            out.append(ROOM_TABLE[i][partner])
        else:
            out.append(ROOM_TABLE[i][i])
    return tuple(out)


def roommates_game(mode=TransferMode.NTU) -> StageGame:
    """Three roommates; a pair can room together, anyone can walk out."""
    single = len(ROOM_MATCHES) - 1
    table = {}
    for a, match in enumerate(ROOM_MATCHES):
        for C in all_coalitions(3):
            mem = members(C)
            if len(mem) == 1:
                i = mem[0]
                dissolved = single if (match is not None and i in match) else a
                table[(C, a)] = tuple(sorted({a, dissolved}))
            elif len(mem) == 2:
                table[(C, a)] = tuple(sorted({a, ROOM_MATCHES.index(mem)}))
    pays = [_room_payoff(m) for m in ROOM_MATCHES]
    return StageGame.build(pays, ExplicitTable(table), ROOM_LABELS, grand_omnipotent=True, mode=mode)


def monotone_closure(n: int, minimal) -> frozenset[int]:
    mins = [m if isinstance(m, int) else mask_of(m) for m in minimal]
    return frozenset(C for C in all_coalitions(n) if any(C & m == m for m in mins))


def divide_the_dollar(n: int, minimal_winning, resolution: int = 4,
                      mode=TransferMode.NTU, secret_coalitions=()) -> StageGame:
    """Grid divisions of one unit in steps of 1/resolution, decided by a simple game."""
    pays, labels = [], []
    for parts in itertools.product(range(resolution + 1), repeat=n):
        if sum(parts) != resolution:
            continue
        pays.append(tuple(Fraction(p, resolution) for p in parts))
        labels.append("(" + ",".join(str(Fraction(p, resolution)) for p in parts) + ")")
    order = sorted(range(len(pays)), key=lambda k: tuple(-x for x in pays[k]))
    pays = [pays[k] for k in order]
    labels = [labels[k] for k in order]
    rule = SimpleGameRule(monotone_closure(n, minimal_winning))
    return StageGame.build(pays, rule, labels, mode=mode, secret_coalitions=secret_coalitions)


DIV3_MINIMAL = ((0, 1), (0, 2))


def gdiv3(resolution: int = 4, mode=TransferMode.NTU) -> StageGame:
    """Three-player division with player 1 a veto player."""
    return divide_the_dollar(3, DIV3_MINIMAL, resolution, mode)


PD_PAYOFFS = ((2, 2), (0, 3), (3, 0), (1, 1))
PD_LABELS = ("CC", "CD", "DC", "DD")


def prisoners_dilemma(mode=TransferMode.NTU, payoffs=PD_PAYOFFS) -> StageGame:
    return StageGame.build(payoffs, StrategicForm((2, 2)), PD_LABELS, mode=mode)


def singleton_only(g: StageGame) -> StageGame:
    """Same game but only individual moves (multi-player coalitions are stuck)."""
    table = {}
    for C in all_coalitions(g.n):
        for a in range(g.m):
            table[(C, a)] = g.effectivity(C, a) if len(members(C)) == 1 else (a,)
    return StageGame.build(g.payoffs, ExplicitTable(table), g.labels, mode=g.mode)


def strategic_game(action_counts, payoff_fn, mode=TransferMode.NTU) -> StageGame:
    rule = StrategicForm(tuple(action_counts))
    profs = rule.profiles()
    return StageGame.build([payoff_fn(p) for p in profs], rule,
                           ["".join(str(x) for x in p) for p in profs], mode=mode)


def pair_grab_game(mode=TransferMode.TU_SECRET, grab=Fraction(19, 10), secret_coalitions=()) -> StageGame:
    """Three players share 6; any pair can walk off with `grab` each, anyone can break down.

    With grab < 2 the strict efficient beta-core contains (2,2,2).
    """
    grab = Fraction(grab)
    pays = [(2, 2, 2), (3, 3, 0), (3, 0, 3), (0, 3, 3), (grab, grab, 0), (grab, 0, grab), (0, grab, grab),
            (0, 0, 0)]
    labels = ["even", "split12", "split13", "split23", "grab12", "grab13", "grab23", "breakdown"]
    grabs = {mask_of((0, 1)): 4, mask_of((0, 2)): 5, mask_of((1, 2)): 6}
    moves = {}
    for a in range(len(pays)):
        for C in all_coalitions(3):
            if C == 7:
                continue
            tgt = {a, 7}
            if C in grabs:
                tgt.add(grabs[C])
            moves[(C, a)] = tuple(sorted(tgt))
    return table_game(pays, moves, labels, mode=mode, secret_coalitions=secret_coalitions)


def table_game(payoffs, moves, labels=None, *, grand_omnipotent=True, mode=TransferMode.NTU,
               secret_coalitions=()) -> StageGame:
    """Explicit-table game from {(C, a): targets}; grand coalition omnipotent by default."""
    return StageGame.build(payoffs, ExplicitTable(dict(moves)), labels,
                           grand_omnipotent=grand_omnipotent, mode=mode,
                           secret_coalitions=secret_coalitions)


__all__ = ["roommates_game", "gdiv3", "divide_the_dollar", "prisoners_dilemma", "singleton_only",
           "strategic_game", "table_game", "pair_grab_game", "monotone_closure", "ALICE", "BOB", "CAROL"]
