"""Replay a convention against scripted blocks and sample histories for spot checks."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .automaton import ConventionAutomaton, merge_transfers
from .game_core import StageGame, coalition_label, experienced_payoff, members, zero_transfers
from .stability import DeviationWitness, verify

TAIL_TARGET = 2.0 ** -30


class ScriptError(ValueError):
    def __init__(self, period: int, message: str):
        super().__init__(f"period {period}: {message}")
        self.period = period


@dataclass(frozen=True)
class Directive:
    period: int
    coalition: int
    alternative: int
    transfers: tuple | None = None     # rows of the blocking coalition (n x n, other rows ignored)


@dataclass(frozen=True)
class DeviationScript:
    directives: tuple = ()

    def __post_init__(self):
        ps = [d.period for d in self.directives]
        if any(b <= a for a, b in zip(ps, ps[1:])):
            raise ValueError("script periods must be strictly increasing")
        if ps and ps[0] < 0:
            raise ValueError("script periods must be nonnegative")

    def at(self, t: int) -> Directive | None:
        for d in self.directives:
            if d.period == t:
                return d
        return None


@dataclass
class PathReport:
    outcomes: list              # (alternative, coalition, transfers or None) per period
    states: list                # state index per period
    payoff: tuple               # (1-δ) Σ_{t<H} δ^t u_t
    tail_bound: float
    horizon: int
    delta: float
    labels: list = field(default_factory=list)

    def summary(self, g: StageGame) -> list[str]:
        out = []
        for t, (a, C, _) in enumerate(self.outcomes[:20]):
            who = coalition_label(C) if C else "-"
            out.append(f"t={t} state={self.labels[t]} alt={g.labels[a]} block={who}")
        return out


def payoff_diameter(aut: ConventionAutomaton, g: StageGame) -> float:
    pts = [[float(x) for x in g.v(a)] for a in range(g.m)]
    pts += [[float(x) for x in aut.recommended(g, s)] for s in range(len(aut.states))]
    return max(max(p[i] for p in pts) - min(p[i] for p in pts) for i in range(g.n))


def default_horizon(delta: float, diam: float) -> int:
    d = float(delta)
    if diam <= 0 or d == 0:
        return 1
    return max(1, math.ceil(math.log(TAIL_TARGET * (1 - d) / diam) / math.log(d)))


def run(aut: ConventionAutomaton, g: StageGame, delta, script: DeviationScript | None = None,
        H: int | None = None) -> PathReport:
    d = float(delta)
    if not (0 <= d < 1):
        raise ValueError("delta must lie in [0, 1)")
    script = script or DeviationScript()
    diam = payoff_diameter(aut, g)
    H = default_horizon(d, diam) if H is None else int(H)
    s = aut.initial
    total = [0.0] * g.n
    w = 1.0 - d
    outcomes, trace = [], []
    for t in range(H):
        st = aut.states[s]
        trace.append(s)
        rec_T = st.transfers or zero_transfers(g.n)
        dv = script.at(t)
        if dv is None:
            a, C, T = st.alternative, 0, (rec_T if aut.tu else None)
        else:
            C, a = dv.coalition, dv.alternative
            if not C:
                raise ScriptError(t, "empty blocking coalition")
            if a not in g.effectivity(C, st.alternative):
                raise ScriptError(t, f"{coalition_label(C)} cannot move to {g.labels[a]} "
                                     f"from {g.labels[st.alternative]}")
            T = None
            if aut.tu:
                rows = dv.transfers or zero_transfers(g.n)
                rows = [[Fraction(x) for x in row] for row in rows]
                if any(x < 0 for i in members(C) for x in rows[i]):
                    raise ScriptError(t, "negative transfer")
                T = merge_transfers(rec_T, C, rows)
        u = experienced_payoff(g, a, T) if aut.tu else g.v(a)
        for i in range(g.n):
            total[i] += w * float(u[i])
        w *= d
        outcomes.append((a, C, T))
        s = aut.successor(g, s, C, a, T) if C else st.next
    tail = (d ** H) * diam / (1 - d) if d > 0 else 0.0
    return PathReport(outcomes, trace, tuple(total), tail, H, d, [aut.states[k].label for k in trace])


def _random_block(g: StageGame, aut: ConventionAutomaton, s: int, rng: random.Random):
    C = rng.randrange(1, 1 << g.n)
    a = rng.choice(g.effectivity(C, aut.states[s].alternative))
    T = None
    if aut.tu:
        rows = [[Fraction(0)] * g.n for _ in range(g.n)]
        for i in members(C):
            j = rng.randrange(g.n)
            if j != i and rng.random() < 0.5:
                rows[i][j] = Fraction(rng.randint(1, 8), 4)
        T = merge_transfers(aut.states[s].transfers or zero_transfers(g.n), C, rows)
    return C, a, T


def sample_states(aut: ConventionAutomaton, g: StageGame, k: int, seed: int = 0,
                  max_len: int = 50) -> list[int]:
    """End states of k random histories that mix on-path play with random blocks."""
    rng = random.Random(seed)
    out = []
    for _ in range(k):
        s = aut.initial
        for _ in range(rng.randrange(max_len + 1)):
            if rng.random() < 0.3:
                C, a, T = _random_block(g, aut, s, rng)
                s = aut.successor(g, s, C, a, T)
            else:
                s = aut.states[s].next
        out.append(s)
    return out


def spot_check(aut: ConventionAutomaton, g: StageGame, delta, k: int, seed: int = 0) -> list[DeviationWitness]:
    """One-shot deviation search at the end states of k sampled histories."""
    found, seen = [], set()
    for s in sample_states(aut, g, k, seed):
        if s in seen:
            continue
        seen.add(s)
        res = verify(aut, g, delta, states=[s])
        if not res.stable:
            found.append(res.witness)
    return found


def script_from_outcomes(items: Sequence[tuple]) -> DeviationScript:
    """[(period, coalition, alternative[, transfers])] -> DeviationScript."""
    return DeviationScript(tuple(Directive(*it) for it in items))


__all__ = ["Directive", "DeviationScript", "PathReport", "ScriptError", "run", "spot_check",
           "default_horizon", "payoff_diameter", "sample_states", "script_from_outcomes"]
