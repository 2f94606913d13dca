"""JSON documents for games, automata, scripts and reports (format_version 1).

Rationals are written as "p/q" strings (or "p" for integers). Players and
coalition members are 1-based in every document; alternatives are named by
label or by 0-based index.
"""
from __future__ import annotations

import hashlib
import json
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Any, Iterable

from .automaton import NEXT, Cell, ConventionAutomaton, LinCon, Policy, Rule, State
from .game_core import (ExplicitTable, SimpleGameRule, StageGame, StrategicForm, TransferMode,
                        all_coalitions, mask_of, members, validate_game)
from .library import monotone_closure
from .simulate import DeviationScript, Directive

FORMAT_VERSION = 1


class DocumentError(ValueError):
    """A document that does not parse into a valid object."""


# -- scalars ----------------------------------------------------------------------

def fmt_q(x) -> str:
    q = Fraction(x)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_q(x) -> Fraction:
    """'p/q', an integer, or a decimal string; bare JSON floats are refused."""
    if isinstance(x, bool):
        raise DocumentError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DocumentError(f"not a rational: {x!r}") from exc
    raise DocumentError(f"rationals must be strings like \"1/2\", got {x!r}")


def decimal_str(x, digits: int = 12) -> str:
    if isinstance(x, float):
        return repr(x)
    q = Fraction(x)
    with localcontext() as ctx:
        ctx.prec = digits
        d = Decimal(q.numerator) / Decimal(q.denominator)
    return format(d.normalize(), "f") if d != 0 else "0"


def render_value(x) -> dict:
    """Exact plus decimal rendering of a number."""
    if isinstance(x, float):
        return {"exact": None, "decimal": repr(x)}
    return {"exact": fmt_q(x), "decimal": decimal_str(x)}


def render_vector(v) -> list:
    return [render_value(x) for x in v]


def coalition_doc(C: int) -> list[int]:
    return [i + 1 for i in members(C)]


def parse_coalition_doc(x, n: int) -> int:
    if not isinstance(x, list) or not x:
        raise DocumentError(f"coalition must be a nonempty list of players, got {x!r}")
    if any(not isinstance(i, int) or not (1 <= i <= n) for i in x):
        raise DocumentError(f"coalition {x!r} names a player outside 1..{n}")
    return mask_of(i - 1 for i in x)


def _require(doc: dict, key: str, kind=None):
    if key not in doc:
        raise DocumentError(f"missing field {key!r}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise DocumentError(f"field {key!r} has the wrong type")
    return val


def _check_version(doc):
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise DocumentError(f"format_version must be {FORMAT_VERSION}")


# -- games --------------------------------------------------------------------------

def _alt_ref(x, labels: list[str]) -> int:
    if isinstance(x, bool):
        raise DocumentError(f"bad alternative reference {x!r}")
    if isinstance(x, int):
        if not (0 <= x < len(labels)):
            raise DocumentError(f"alternative index {x} out of range")
        return x
    if isinstance(x, str) and x in labels:
        return labels.index(x)
    raise DocumentError(f"unknown alternative {x!r}")


def game_from_doc(doc: dict) -> tuple[StageGame, Fraction | None]:
    """Parse a game document; returns the game and the optional default delta."""
    _check_version(doc)
    n = _require(doc, "players", int)
    if n < 2:
        raise DocumentError("need at least 2 players")
    eff = _require(doc, "effectivity", dict)
    if len(eff) != 1:
        raise DocumentError("effectivity must have exactly one of strategic_form, table, simple_game")
    mode = doc.get("transfer_mode", "ntu")
    try:
        mode = TransferMode(mode)
    except ValueError as exc:
        raise DocumentError(f"unknown transfer_mode {mode!r}") from exc
    secret = [parse_coalition_doc(c, n) for c in doc.get("secret_coalitions", [])]
    kind, body = next(iter(eff.items()))

    alts = doc.get("alternatives")
    if alts is None and kind == "simple_game" and "resolution" in body:
        from .library import divide_the_dollar
        mins = [parse_coalition_doc(c, n) for c in _require(body, "minimal_winning", list)]
        res = body["resolution"]
        if not isinstance(res, int) or res < 1:
            raise DocumentError("resolution must be a positive integer")
        g = divide_the_dollar(n, mins, res, mode, secret)
        payoffs, labels, rule = g.payoffs, list(g.labels), g.rule
    else:
        if not isinstance(alts, list) or not alts:
            raise DocumentError("alternatives must be a nonempty list")
        payoffs, labels = [], []
        for k, a in enumerate(alts):
            if not isinstance(a, dict):
                raise DocumentError(f"alternative {k} must be an object")
            pv = _require(a, "payoffs", list)
            if len(pv) != n:
                raise DocumentError(f"alternative {k} needs {n} payoffs")
            payoffs.append(tuple(parse_q(x) for x in pv))
            labels.append(str(a.get("label", f"a{k}")))
        if len(set(labels)) != len(labels):
            raise DocumentError("alternative labels must be distinct")
        if kind == "strategic_form":
            counts = _require(body, "action_counts", list)
            rule = StrategicForm(tuple(int(c) for c in counts))
        elif kind == "table":
            moves = _require(body, "moves", list)
            table: dict = {}
            for mv in moves:
                C = parse_coalition_doc(_require(mv, "coalition"), n)
                a = _alt_ref(_require(mv, "from"), labels)
                targets = tuple(sorted({_alt_ref(b, labels) for b in _require(mv, "to", list)}))
                if (C, a) in table:
                    raise DocumentError(f"duplicate move entry for coalition {coalition_doc(C)} at {labels[a]}")
                table[(C, a)] = targets
            rule = ExplicitTable(table)
        elif kind == "simple_game":
            mins = [parse_coalition_doc(c, n) for c in _require(body, "minimal_winning", list)]
            rule = SimpleGameRule(monotone_closure(n, mins))
        else:
            raise DocumentError(f"unknown effectivity kind {kind!r}")
    g = StageGame.build(payoffs, rule, labels, grand_omnipotent=bool(doc.get("grand_omnipotent", False)),
                        mode=mode, secret_coalitions=secret)
    problems = validate_game(g)
    if problems:
        raise DocumentError("; ".join(problems))
    delta = doc.get("delta")
    return g, (None if delta is None else parse_q(delta))


def _minimal(n: int, winning: Iterable[int]) -> list[int]:
    W = set(winning)
    return sorted(C for C in W if not any(D != C and D & C == D for D in W))


def game_to_doc(g: StageGame, delta=None) -> dict:
    doc: dict[str, Any] = {"format_version": FORMAT_VERSION, "players": g.n,
                           "alternatives": [{"label": lab, "payoffs": [fmt_q(x) for x in p]}
                                            for lab, p in zip(g.labels, g.payoffs)]}
    rule = g.rule
    if isinstance(rule, StrategicForm):
        doc["effectivity"] = {"strategic_form": {"action_counts": list(rule.action_counts)}}
    elif isinstance(rule, SimpleGameRule):
        doc["effectivity"] = {"simple_game": {"minimal_winning":
                                              [coalition_doc(C) for C in _minimal(g.n, rule.winning)]}}
    else:
        moves = []
        for (C, a) in sorted(rule.table, key=lambda k: (k[1], k[0])):
            moves.append({"coalition": coalition_doc(C), "from": g.labels[a],
                          "to": [g.labels[b] for b in rule.table[(C, a)]]})
        doc["effectivity"] = {"table": {"moves": moves}}
    doc["grand_omnipotent"] = g.grand_omnipotent
    doc["transfer_mode"] = g.mode.value
    if g.secret_coalitions:
        doc["secret_coalitions"] = [coalition_doc(C) for C in sorted(g.secret_coalitions)]
    if delta is not None:
        doc["delta"] = fmt_q(delta) if not isinstance(delta, float) else repr(delta)
    return doc


# -- automata ---------------------------------------------------------------------------

def _con_doc(c: LinCon) -> dict:
    return {"coeffs": [fmt_q(x) for x in c.coeffs], "op": c.op, "rhs": fmt_q(c.rhs), "relative": c.relative}


def _cell_doc(c: Cell) -> dict:
    return {"constraints": [_con_doc(x) for x in c.constraints],
            "successor": "next" if c.successor == NEXT else c.successor,
            "alternatives": None if c.alternatives is None else sorted(c.alternatives)}


def automaton_to_doc(aut: ConventionAutomaton) -> dict:
    meta = {}
    if "regime" in aut.meta:
        meta["regime"] = aut.meta["regime"]
    if "secret" in aut.meta:
        meta["secret"] = [coalition_doc(C) for C in sorted(aut.meta["secret"])]
    return {
        "format_version": FORMAT_VERSION,
        "kind": "automaton",
        "players": aut.n,
        "tu": aut.tu,
        "initial": aut.initial,
        "meta": meta,
        "states": [{"label": s.label, "alternative": s.alternative,
                    "transfers": None if s.transfers is None else [[fmt_q(x) for x in row] for row in s.transfers],
                    "next": s.next, "policy": s.policy} for s in aut.states],
        "policies": [{"rules": [{"coalitions": None if r.coalitions is None
                                 else [coalition_doc(C) for C in sorted(r.coalitions)],
                                 "cells": [_cell_doc(c) for c in r.cells]} for r in p.rules]}
                     for p in aut.policies],
    }


def automaton_from_doc(doc: dict) -> ConventionAutomaton:
    _check_version(doc)
    if doc.get("kind") != "automaton":
        raise DocumentError("not an automaton document")
    n = _require(doc, "players", int)
    states_doc = _require(doc, "states", list)
    pol_doc = _require(doc, "policies", list)
    S, P = len(states_doc), len(pol_doc)

    def idx(x, bound, what):
        if not isinstance(x, int) or isinstance(x, bool) or not (0 <= x < bound):
            raise DocumentError(f"{what} {x!r} out of range")
        return x

    states = []
    for sd in states_doc:
        T = sd.get("transfers")
        if T is not None:
            if len(T) != n or any(len(row) != n for row in T):
                raise DocumentError("transfers must be an n x n matrix")
            T = tuple(tuple(parse_q(x) for x in row) for row in T)
        states.append(State(str(_require(sd, "label")), _require(sd, "alternative", int), T,
                            idx(_require(sd, "next"), S, "next state"),
                            idx(_require(sd, "policy"), P, "policy")))
    policies = []
    for pd in pol_doc:
        rules = []
        for rd in _require(pd, "rules", list):
            cs = rd.get("coalitions")
            cs = None if cs is None else frozenset(parse_coalition_doc(c, n) for c in cs)
            cells = []
            for cd in _require(rd, "cells", list):
                succ = cd.get("successor", "next")
                succ = NEXT if succ == "next" else idx(succ, S, "successor")
                cons = []
                for k in cd.get("constraints", []):
                    op = _require(k, "op", str)
                    if op not in ("<=", "<", ">=", ">", "=="):
                        raise DocumentError(f"unknown operator {op!r}")
                    coeffs = tuple(parse_q(x) for x in _require(k, "coeffs", list))
                    if len(coeffs) != n:
                        raise DocumentError("constraint needs one coefficient per player")
                    cons.append(LinCon(coeffs, op, parse_q(k.get("rhs", "0")), bool(k.get("relative", False))))
                alts = cd.get("alternatives")
                cells.append(Cell(tuple(cons), succ, None if alts is None else frozenset(alts)))
            rules.append(Rule(cs, tuple(cells)))
        policies.append(Policy(tuple(rules)))
    meta_doc = doc.get("meta", {})
    meta: dict[str, Any] = {}
    if "regime" in meta_doc:
        meta["regime"] = meta_doc["regime"]
    if "secret" in meta_doc:
        meta["secret"] = [parse_coalition_doc(c, n) for c in meta_doc["secret"]]
    return ConventionAutomaton(n, tuple(states), tuple(policies), idx(doc.get("initial", 0), S, "initial state"),
                               bool(doc.get("tu", False)), meta)


def check_automaton_against(aut: ConventionAutomaton, g: StageGame) -> None:
    if aut.n != g.n:
        raise DocumentError(f"automaton has {aut.n} players, game has {g.n}")
    for s in aut.states:
        if not (0 <= s.alternative < g.m):
            raise DocumentError(f"state {s.label} names alternative {s.alternative} outside the game")


# -- scripts ----------------------------------------------------------------------------

def script_from_doc(doc: dict, g: StageGame) -> DeviationScript:
    _check_version(doc)
    if doc.get("kind") != "script":
        raise DocumentError("not a script document")
    out = []
    for d in _require(doc, "directives", list):
        T = d.get("transfers")
        if T is not None:
            if len(T) != g.n or any(len(row) != g.n for row in T):
                raise DocumentError("transfers must be an n x n matrix")
            T = tuple(tuple(parse_q(x) for x in row) for row in T)
        out.append(Directive(_require(d, "period", int), parse_coalition_doc(_require(d, "coalition"), g.n),
                             _alt_ref(_require(d, "alternative"), list(g.labels)), T))
    try:
        return DeviationScript(tuple(out))
    except ValueError as exc:
        raise DocumentError(str(exc)) from exc


def script_to_doc(script: DeviationScript, g: StageGame) -> dict:
    return {"format_version": FORMAT_VERSION, "kind": "script",
            "directives": [{"period": d.period, "coalition": coalition_doc(d.coalition),
                            "alternative": g.labels[d.alternative],
                            **({} if d.transfers is None
                               else {"transfers": [[fmt_q(x) for x in row] for row in d.transfers]})}
                           for d in script.directives]}


# -- reports ----------------------------------------------------------------------------

def digest(blobs: Iterable[bytes]) -> str:
    h = hashlib.sha256()
    for b in blobs:
        h.update(len(b).to_bytes(8, "big"))
        h.update(b)
    return h.hexdigest()


def make_report(command: list[str], inputs: Iterable[bytes], results: dict,
                witnesses: list | None = None, timing: dict | None = None) -> dict:
    rep: dict[str, Any] = {"format_version": FORMAT_VERSION, "command": list(command),
                           "inputs_digest": digest(inputs), "results": results,
                           "witnesses": witnesses or []}
    if timing is not None:
        rep["timing"] = timing
    return rep


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def load_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc


__all__ = ["FORMAT_VERSION", "DocumentError", "fmt_q", "parse_q", "decimal_str", "render_value",
           "render_vector", "coalition_doc", "parse_coalition_doc", "game_from_doc", "game_to_doc",
           "automaton_to_doc", "automaton_from_doc", "check_automaton_against", "script_from_doc",
           "script_to_doc", "digest", "make_report", "dumps", "load_json"]
