"""Folk-theorem automata, core reversion and their ingredients."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .automaton import NEXT, Cell, ConventionAutomaton, LinCon, Policy, Rule, State
from .game_core import (to_fraction, StageGame, TransferMode, all_coalitions, check_neu, coalition_label,
                        members, transfers_realizing, zero_transfers)
from .lp import solve_lp
from .minmax import (coalitional_minmax, efficient_alternatives, efficient_coalitional_minmax, minimizers,
                     individual_minmax, individual_minmaxes)
from .payoff_sets import (beta_core_membership, feasible_membership_ntu, stage_core,
                          tu_feasible_ir_membership)

KAPPA_GRID = 1024
SEQ_VALUE_TOL = 2.0 ** -40


class BuildError(ValueError):
    """A construction precondition failed; the message names what."""


class DeltaTooSmall(BuildError):
    """The construction's parameters do not work at the requested δ."""


# κ values tried, after the smallest admissible one, when verification fails at the requested δ
KAPPA_LADDER = tuple(Fraction(k, 64) for k in range(1, 64))


REGIMES = ("ntu", "tupm", "tupt", "some")


# -- kappa and punishment length ------------------------------------------------

@dataclass(frozen=True)
class KappaIneq:
    """(1-k) lhs0 + k lhs1 > (1-k) rhs0 + k rhs1, labelled for error messages."""
    lhs0: Fraction
    lhs1: Fraction
    rhs0: Fraction
    rhs1: Fraction
    name: str = ""

    def margin(self, k) -> Fraction:
        return (1 - k) * (self.lhs0 - self.rhs0) + k * (self.lhs1 - self.rhs1)


def kappa_from_inequalities(ineqs: Sequence[KappaIneq], grid: int = KAPPA_GRID) -> Fraction:
    """Smallest k/grid in (0,1) with every inequality strict at that point and at 1.

    Each margin is affine in κ̃, so checking both endpoints covers [κ, 1].
    """
    lo = Fraction(0)
    for q in ineqs:
        m1 = q.margin(Fraction(1))
        if m1 <= 0:
            raise BuildError(f"kappa system fails at 1: {q.name} (margin {m1})")
        m0 = q.margin(Fraction(0))
        if m0 <= 0:
            # margin(k) > 0 iff k > k* with k* = -m0 / (m1 - m0)
            lo = max(lo, -m0 / (m1 - m0))
    k = math.floor(lo * grid) + 1
    k = max(k, 1)
    if k >= grid:
        raise BuildError("no kappa < 1 on the grid satisfies the punishment inequalities")
    kap = Fraction(k, grid)
    assert all(q.margin(kap) > 0 for q in ineqs)
    return kap


def kappa_threshold(g: StageGame, target, punishments, minmax_alts, regime: str = "ntu") -> Fraction:
    """κ for the regime's inequality system (punishments keyed by player or coalition)."""
    return kappa_from_inequalities(kappa_inequalities(g, target, punishments, minmax_alts, regime))


def kappa_inequalities(g, target, punishments, minmax_alts, regime) -> list[KappaIneq]:
    out = []
    if regime in ("ntu", "tupm"):
        mm = individual_minmaxes(g)
        for i in range(g.n):
            ai = g.v(minmax_alts[i])
            out.append(KappaIneq(ai[i], punishments[i][i], mm[i], mm[i], f"player {i + 1} bears a_{i + 1}"))
            for j in range(g.n):
                if j != i:
                    out.append(KappaIneq(ai[j], punishments[i][j], mm[j], punishments[j][j],
                                         f"player {j + 1} punishes {i + 1}"))
        return out
    # coalition systems: keys are coalition masks
    if regime == "tupt":
        floor = {C: efficient_coalitional_minmax(g, C).value for C in punishments}
        rhs_alt = floor
    elif regime == "some":
        floor = {C: coalitional_minmax(g, C).value for C in punishments}
        rhs_alt = {C: g.total(minmax_alts[C], C) for C in punishments}
    else:
        raise ValueError(regime)

    def cs(u, C):
        return sum((Fraction(u[i]) for i in members(C)), Fraction(0))

    for C, uC in punishments.items():
        aC = minmax_alts[C]
        out.append(KappaIneq(g.total(aC, C), cs(uC, C), floor[C], floor[C], f"{coalition_label(C)} bears"))
        for C2, uC2 in punishments.items():
            if C2 != C:
                out.append(KappaIneq(g.total(aC, C2), cs(uC, C2), rhs_alt[C2], cs(uC2, C2),
                                     f"{coalition_label(C2)} punishes {coalition_label(C)}"))
    return out


def kappa_and_length(g, target, punishments, minmax_alts, regime, delta, start=None) -> tuple[Fraction, int]:
    """κ and L(δ), moving κ up the grid until the inequalities also hold at δ^L (which may sit below κ).

    `start` asks for a larger κ than the smallest admissible one.
    """
    ineqs = kappa_inequalities(g, target, punishments, minmax_alts, regime)
    kappa = kappa_from_inequalities(ineqs)
    if start is not None:
        kappa = max(kappa, Fraction(start))
    while True:
        L = punishment_length(delta, kappa)
        dl = Fraction(float(delta) ** L)
        if all(q.margin(dl) > 0 for q in ineqs):
            return kappa, L
        kappa += Fraction(1, KAPPA_GRID)
        if kappa >= 1:
            raise DeltaTooSmall("no kappa < 1 on the grid survives the discreteness of L(delta)")


def punishing_alternative(g: StageGame, C: int, efficient: bool = False) -> int:
    """A minmaxing alternative for C; among ties the one best for C itself, then smallest index."""
    cands = minimizers(g, C, efficient)
    return max(cands, key=lambda a: (g.total(a, C), -a))


def punishment_length(delta: float, kappa) -> int:
    d, k = float(delta), float(kappa)
    if not (0 < d < 1):
        raise ValueError("delta must lie in (0, 1)")
    if not (0 < k < 1):
        raise ValueError("kappa must lie in (0, 1)")
    L = math.ceil(math.log(k) / math.log(d) - 1e-12)
    return max(L, 1)


# -- payoff sequences -----------------------------------------------------------

@dataclass(frozen=True)
class SeqItem:
    alternative: int
    transfers: tuple | None
    payoff: tuple          # exact experienced payoff of the period


@dataclass(frozen=True)
class PayoffSequence:
    items: tuple           # periods 0..len-1
    loop_to: int           # after the last item play continues at this index
    target: tuple
    eps: float
    tails: tuple           # continuation value at each index (binary64)

    @property
    def value(self):
        return self.tails[0]


def sequence_values(payoffs: Sequence, loop_to: int, delta: float) -> list[list[float]]:
    d = float(delta)
    L = len(payoffs)
    pay = [[float(x) for x in p] for p in payoffs]
    n = len(pay[0])
    cyc = range(loop_to, L)
    acc = [0.0] * n
    w = 1.0
    for k in cyc:
        acc = [x + (1 - d) * w * y for x, y in zip(acc, pay[k])]
        w *= d
    V = [None] * L
    V[loop_to] = [x / (1 - w) for x in acc]
    nxt = V[loop_to]
    for k in range(L - 1, -1, -1):
        if k == loop_to:
            nxt = V[k]
            continue
        V[k] = [(1 - d) * x + d * y for x, y in zip(pay[k], nxt)]
        nxt = V[k]
    # indices in the cycle after loop_to were filled walking down from L-1
    return V


def decompose_payoff_sequence(vertices: Sequence[SeqItem], target, delta: float, eps: float,
                              value_tol: float = SEQ_VALUE_TOL, max_len: int = 20000) -> PayoffSequence:
    """Greedy sequence of vertices whose discounted value is target and whose tails stay near it.

    At each period the vertex whose use keeps the next tail target closest to
    the target is chosen. After enough periods the sequence loops back to the
    earlier period whose tail target is nearest, so that the value error is
    damped by δ^H.
    """
    d = float(delta)
    tgt = [float(x) for x in target]
    n = len(tgt)
    for v in vertices:
        if all(Fraction(x) == Fraction(t) for x, t in zip(v.payoff, target)):
            tails = (tuple(tgt),)
            return PayoffSequence((v,), 0, tuple(target), eps, tails)
    diam = max(max(abs(float(x) - t) for x, t in zip(v.payoff, tgt)) for v in vertices) + 1e-300
    if not (0 < d < 1):
        raise BuildError("delta must lie in (0, 1)")
    H = math.ceil(math.log(value_tol / (4 * diam)) / math.log(d)) + 1
    while True:
        if H > max_len:
            raise DeltaTooSmall(f"sequence for {tuple(map(str, target))} needs more than {max_len} periods")
        z = list(tgt)
        chosen, zs = [], []
        for _ in range(H):
            zs.append(z)
            best, bz, bv = None, None, None
            for v in vertices:
                nz = [(zi - (1 - d) * float(x)) / d for zi, x in zip(z, v.payoff)]
                dist = sum((a - b) ** 2 for a, b in zip(nz, tgt))
                if best is None or dist < best - 1e-18:
                    best, bz, bv = dist, nz, v
            chosen.append(bv)
            z = bz
        # loop back to the closest earlier tail target
        loop_to = min(range(max(1, H // 2)), key=lambda k: max(abs(a - b) for a, b in zip(zs[k], z)))
        V = sequence_values([v.payoff for v in chosen], loop_to, d)
        err0 = max(abs(a - b) for a, b in zip(V[0], tgt))
        worst = max(max(abs(a - b) for a, b in zip(Vk, tgt)) for Vk in V)
        if worst >= eps:
            raise DeltaTooSmall(f"greedy tail leaves the {eps:.3g}-ball (reaches {worst:.3g}); delta too small")
        if err0 <= value_tol:
            return PayoffSequence(tuple(chosen), loop_to, tuple(target), eps, tuple(tuple(x) for x in V))
        H *= 2


# -- punishments ----------------------------------------------------------------

def player_specific_punishments(g: StageGame, v0, regime: str = "ntu", eps=None):
    """{i: v^i} with v^i_i < v0_i, v^j_i > v^i_i (j != i) and strict individual rationality."""
    v0 = [to_fraction(x) for x in v0]
    mm = individual_minmaxes(g)
    if any(x <= b for x, b in zip(v0, mm)):
        raise BuildError("target is not strictly individually rational")
    if regime != "ntu":
        if eps is None:
            eps = min(x - b for x, b in zip(v0, mm))
        eps = Fraction(eps)
        while True:
            pun = {}
            for i in range(g.n):
                pun[i] = tuple(v0[j] - eps if j == i else v0[j] + eps / (g.n - 1) for j in range(g.n))
            if all(pun[i][j] > mm[j] for i in pun for j in range(g.n)):
                return pun
            eps /= 2
    w = check_neu(g)
    if w is not None:
        raise BuildError(f"NEU fails: v_{w.i + 1} = {w.k} + {w.lam} v_{w.j + 1}")
    return _ntu_punishment_lp(g, v0, mm)


def _ntu_punishment_lp(g, v0, mm):
    n, m = g.n, g.m
    nv = n * m + 1
    s_col = n * m

    def vcoef(i, coord, sign=1):
        row = [Fraction(0)] * nv
        for a in range(m):
            row[i * m + a] = sign * g.v(a)[coord]
        return row

    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for i in range(n):
        row = [Fraction(0)] * nv
        for a in range(m):
            row[i * m + a] = Fraction(1)
        A_eq.append(row)
        b_eq.append(1)
        # v^i_i - mm_i >= s
        r = vcoef(i, i, -1)
        r[s_col] = 1
        A_ub.append(r)
        b_ub.append(-mm[i])
        # v0_i - v^i_i >= s
        r = vcoef(i, i, 1)
        r[s_col] = 1
        A_ub.append(r)
        b_ub.append(v0[i])
        for j in range(n):
            if j == i:
                continue
            # v^j_i - v^i_i >= s
            r = [a - b for a, b in zip(vcoef(i, i), vcoef(j, i))]
            r[s_col] = 1
            A_ub.append(r)
            b_ub.append(0)
    c = [0] * (nv - 1) + [1]
    bounds = [(0, None)] * (nv - 1) + [(None, 1000)]
    res = solve_lp(c, A_ub, b_ub, A_eq, b_eq, bounds)
    if not res.ok or res.value <= 0:
        raise BuildError("no strictly patterned player-specific punishments exist in the feasible set")
    pun = {}
    for i in range(n):
        lam = res.x[i * m:(i + 1) * m]
        pun[i] = tuple(sum((l * g.v(a)[k] for a, l in enumerate(lam)), Fraction(0)) for k in range(n))
    return pun


def coalition_specific_punishments(g: StageGame, uN, eps=None, coalitions: Iterable[int] | None = None,
                                   accept=None):
    """{C: u^C} with u^C_i = uN_i - ε/|C| on C and uN_i + ε/|N∖C| off C.

    ε is halved until every u^C passes `accept` (default: strict efficient β-core).
    """
    uN = [to_fraction(x) for x in uN]
    n = g.n
    if coalitions is None:
        coalitions = [C for C in all_coalitions(n) if C != g.N]
    coalitions = list(coalitions)
    if accept is None:
        if not beta_core_membership(g, uN, efficient=True, strict=True):
            raise BuildError("strict efficient beta-core empty or target outside it")

        def accept(u):
            return beta_core_membership(g, u, efficient=True, strict=True)
    eps = Fraction(1) if eps is None else Fraction(eps)
    for _ in range(200):
        fam = {C: _spread(uN, C, eps, n) for C in coalitions}
        if all(accept(u) for u in fam.values()):
            return fam
        eps /= 2
    raise BuildError("could not find coalition-specific punishments")


def _spread(uN, C, eps, n):
    inside = len(members(C))
    outside = n - inside
    return tuple(uN[i] - eps / inside if (C >> i) & 1 else uN[i] + eps / outside for i in range(n))


# -- folk automata --------------------------------------------------------------

@dataclass
class FolkParameters:
    regime: str
    delta: float
    kappa: Fraction
    L: int
    eps: float                         # tail tolerance of the payoff sequences
    target: tuple
    punishments: dict                  # key (player or coalition mask) -> payoff vector
    minmax_alternatives: dict          # key -> alternative index
    punish_eps: Fraction | None = None
    sequences: dict = field(default_factory=dict)   # d -> PayoffSequence; d = 0 or key+1 / mask

    def summary(self) -> dict:
        return {
            "regime": self.regime,
            "delta": self.delta,
            "kappa": self.kappa,
            "L": self.L,
            "eps": self.eps,
            "punish_eps": self.punish_eps,
            "target": list(self.target),
            "punishments": {str(k): list(v) for k, v in self.punishments.items()},
            "minmax_alternatives": {str(k): v for k, v in self.minmax_alternatives.items()},
            "sequence_lengths": {str(k): [len(s.items), s.loop_to] for k, s in self.sequences.items()},
        }


def _argmin_cells(cand: Sequence[int], n: int, succ_of, extra=(), relative=True):
    """Cells selecting j* = argmin_{j in cand} (u_j - ref_j), ties to the smallest index."""
    cells = []
    for k in cand:
        cons = list(extra)
        for j in cand:
            if j == k:
                continue
            coeffs = [Fraction(0)] * n
            coeffs[k] += 1
            coeffs[j] -= 1
            cons.append(LinCon(tuple(coeffs), "<" if j < k else "<=", Fraction(0), relative))
        cells.append(Cell(tuple(cons), succ_of(k)))
    return tuple(cells)


def _unit(n, i, sign=1):
    c = [Fraction(0)] * n
    c[i] = Fraction(sign)
    return tuple(c)


def _tu_vertices(g: StageGame, target) -> list[SeqItem]:
    """Two points of U(ā) ∪ U(a̲) on the line through target along the all-ones direction."""
    tot = sum(Fraction(x) for x in target)
    abar = efficient_alternatives(g)[0]
    alow = g.min_total_alternative()
    out = []
    for a in (abar, alow):
        shift = (g.total(a) - tot) / g.n
        u = tuple(Fraction(x) + shift for x in target)
        out.append(SeqItem(a, transfers_realizing(g.v(a), u), u))
    if out[0].payoff == out[1].payoff or g.total(abar) == g.total(alow):
        out = out[:1]
    return out


def _ntu_vertices(g: StageGame) -> list[SeqItem]:
    seen, out = set(), []
    for a in range(g.m):
        if g.v(a) not in seen:
            seen.add(g.v(a))
            out.append(SeqItem(a, None, g.v(a)))
    return out


class _Builder:
    def __init__(self, g: StageGame, tu: bool):
        self.g = g
        self.tu = tu
        self.states: list[State] = []
        self.labels: dict[str, int] = {}
        self.policies: list[Policy] = []

    def add_policy(self, p: Policy) -> int:
        self.policies.append(p)
        return len(self.policies) - 1

    def reserve(self, label, alternative, transfers, policy) -> int:
        k = len(self.states)
        self.states.append(State(label, alternative, transfers, k, policy))
        self.labels[label] = k
        return k

    def link(self, k, nxt):
        s = self.states[k]
        self.states[k] = State(s.label, s.alternative, s.transfers, nxt, s.policy)

    def set_policy(self, k, pol):
        s = self.states[k]
        self.states[k] = State(s.label, s.alternative, s.transfers, s.next, pol)

    def add_sequence(self, key: str, seq: PayoffSequence, policy: int) -> int:
        first = len(self.states)
        for t, it in enumerate(seq.items):
            self.reserve(f"w({key},{t})", it.alternative, it.transfers if self.tu else None, policy)
        for t in range(len(seq.items)):
            self.link(first + t, first + t + 1 if t + 1 < len(seq.items) else first + seq.loop_to)
        return first

    def add_punishment(self, key: str, alternative: int, L: int, policy: int, then: int | None) -> int:
        first = len(self.states)
        z = zero_transfers(self.g.n) if self.tu else None
        for t in range(L):
            self.reserve(f"wp({key},{t})", alternative, z, policy)
        for t in range(L):
            self.link(first + t, first + t + 1 if t + 1 < L else (then if then is not None else first + t))
        return first

    def automaton(self, meta) -> ConventionAutomaton:
        return ConventionAutomaton(self.g.n, tuple(self.states), tuple(self.policies), 0, self.tu, meta)


def _eps_cap_players(kappa, target, pun, mm):
    n = len(mm)
    gaps = []
    for i in range(n):
        gaps.append(Fraction(target[i]) - pun[i][i])
        for j in range(n):
            if j != i:
                gaps.append(pun[j][i] - pun[i][i])
        gaps.append(pun[i][i] - mm[i])
    return (1 - kappa) * min(gaps)


def build_folk_automaton(g: StageGame, target, delta: float, regime: str = "ntu", *,
                         S: Iterable[int] | None = None, verify: bool = True, eps=None, kappa=None):
    """Automaton and parameters for the regime's folk construction at δ (certified by the verifier).

    Without an explicit `kappa` the smallest admissible κ is tried first, then
    the coarse ladder KAPPA_LADDER above it; the first verified build wins.
    """
    regime = regime.lower()
    if regime not in REGIMES:
        raise BuildError(f"unknown regime {regime!r}")
    delta = float(delta)
    if not (0 < delta < 1):
        raise BuildError("delta must lie in (0, 1)")
    target = tuple(to_fraction(x) for x in target)
    if len(target) != g.n:
        raise BuildError("target has the wrong dimension")
    build = {"ntu": lambda k: _build_ntu(g, target, delta, eps, k),
             "tupm": lambda k: _build_tupm(g, target, delta, eps, k),
             "tupt": lambda k: _build_tupt(g, target, delta, k),
             "some": lambda k: _build_some(g, target, delta, S, eps, k)}[regime]
    if kappa is not None or not verify:
        tries = [kappa]
    else:
        tries = [None] + list(KAPPA_LADDER)
    last, tried = None, set()
    for k in tries:
        try:
            aut, params = build(k)
        except DeltaTooSmall as exc:
            last = str(exc)
            continue
        if params.kappa in tried:
            continue
        tried.add(params.kappa)
        if not verify:
            return aut, params
        from .stability import verify as _verify
        res = _verify(aut, g, delta)
        if res.stable:
            return aut, params
        last = f"kappa={params.kappa}: {res.describe(g)}"
    raise DeltaTooSmall(f"delta={delta} below the construction's working threshold ({last})")


def _build_ntu(g, target, delta, eps, kappa=None):
    if g.is_tu:
        g = g.with_mode(TransferMode.NTU)
    if not feasible_membership_ntu(g, target, strict_ir=True):
        raise BuildError("target outside the strictly individually rational feasible set")
    pun = player_specific_punishments(g, target, "ntu")
    mm = individual_minmaxes(g)
    alts = {i: punishing_alternative(g, 1 << i) for i in range(g.n)}
    kappa, L = kappa_and_length(g, target, pun, alts, "ntu", delta, kappa)
    cap = _eps_cap_players(kappa, target, pun, mm)
    eps = float(cap) / 2 if eps is None else float(eps)
    verts = _ntu_vertices(g)
    seqs = {0: decompose_payoff_sequence(verts, target, delta, eps)}
    for i in range(g.n):
        seqs[i + 1] = decompose_payoff_sequence(verts, pun[i], delta, eps)
    b = _Builder(g, tu=False)
    n = g.n
    # policy 0: normal phase; policy 1+i: punishing player i
    pol_normal = b.add_policy(None)
    pol_pun = [b.add_policy(None) for _ in range(n)]
    heads = {d: b.add_sequence(str(d), seqs[d], pol_normal) for d in range(n + 1)}
    pheads = {i: b.add_punishment(str(i + 1), alts[i], L, pol_pun[i], heads[i + 1]) for i in range(n)}
    rules = [Rule(frozenset([C]), (Cell((), pheads[members(C)[0]]),)) for C in all_coalitions(n)]
    b.policies[pol_normal] = Policy(tuple(rules))
    for i in range(n):
        rules = []
        for C in all_coalitions(n):
            rest = [j for j in members(C) if j != i]
            succ = pheads[rest[0]] if rest else pheads[i]
            rules.append(Rule(frozenset([C]), (Cell((), succ),)))
        b.policies[pol_pun[i]] = Policy(tuple(rules))
    meta = {"regime": "ntu", "normal_heads": heads, "punish_heads": pheads}
    params = FolkParameters("ntu", delta, kappa, L, eps, target, pun, alts, None, seqs)
    return b.automaton(meta), params


def _require_tu(g):
    if not g.is_tu:
        raise BuildError("transfer regimes need a TU game")


def _build_tupm(g, target, delta, eps, kappa=None):
    _require_tu(g)
    if not tu_feasible_ir_membership(g, target, strict_ir=True):
        raise BuildError("target outside the strictly individually rational TU feasible set")
    pun = player_specific_punishments(g, target, "tupm")
    punish_eps = target[0] - pun[0][0]
    mm = individual_minmaxes(g)
    alts = {i: punishing_alternative(g, 1 << i) for i in range(g.n)}
    kappa, L = kappa_and_length(g, target, pun, alts, "tupm", delta, kappa)
    cap = _eps_cap_players(kappa, target, pun, mm)
    eps = float(cap) / 2 if eps is None else float(eps)
    seqs = {0: decompose_payoff_sequence(_tu_vertices(g, target), target, delta, eps)}
    for i in range(g.n):
        seqs[i + 1] = decompose_payoff_sequence(_tu_vertices(g, pun[i]), pun[i], delta, eps)
    n = g.n
    b = _Builder(g, tu=True)
    pol_normal = b.add_policy(None)
    pol_pun = [b.add_policy(None) for _ in range(n)]
    heads = {d: b.add_sequence(str(d), seqs[d], pol_normal) for d in range(n + 1)}
    pheads = {i: b.add_punishment(str(i + 1), alts[i], L, pol_pun[i], heads[i + 1]) for i in range(n)}
    rules = [Rule(frozenset([C]), _argmin_cells(members(C), n, lambda k: pheads[k]))
             for C in all_coalitions(n)]
    b.policies[pol_normal] = Policy(tuple(rules))
    for i in range(n):
        b.policies[pol_pun[i]] = Policy(tuple(_tupm_punish_rules(n, i, mm[i], pheads, all_coalitions(n))))
    meta = {"regime": "tupm", "normal_heads": heads, "punish_heads": pheads}
    params = FolkParameters("tupm", delta, kappa, L, eps, target, pun, alts, punish_eps, seqs)
    return b.automaton(meta), params


def _tupm_punish_rules(n, i, floor_i, pheads, coalitions):
    rules = []
    low = LinCon(_unit(n, i), "<=", floor_i)
    high = LinCon(_unit(n, i), ">", floor_i)
    for C in coalitions:
        mem = members(C)
        if i not in mem:
            cells = _argmin_cells(mem, n, lambda k: pheads[k])
        elif len(mem) == 1:
            cells = (Cell((), pheads[i]),)
        else:
            rest = [j for j in mem if j != i]
            cells = (Cell((low,), pheads[i]),) + _argmin_cells(rest, n, lambda k: pheads[k], (high,))
        rules.append(Rule(frozenset([C]), cells))
    return rules


def _build_tupt(g, target, delta, kappa=None):
    _require_tu(g)
    if not beta_core_membership(g, target, efficient=True, strict=True):
        raise BuildError("strict efficient beta-core empty or target outside it")
    N = g.N
    pun = coalition_specific_punishments(g, target)
    punish_eps = target[0] - pun[1][0]
    alts = {C: punishing_alternative(g, C, efficient=True) for C in pun}
    kappa, L = kappa_and_length(g, target, pun, alts, "tupt", delta, kappa)
    abar = efficient_alternatives(g)[0]
    b = _Builder(g, tu=True)
    pol = b.add_policy(None)
    fam = {N: tuple(target)}
    fam.update(pun)
    heads = {}
    for C in [N] + sorted(pun):
        k = b.reserve(f"w({coalition_label(C)})", abar, transfers_realizing(g.v(abar), fam[C]), pol)
        heads[C] = k
    pheads = {C: b.add_punishment(coalition_label(C), alts[C], L, pol, heads[C]) for C in sorted(pun)}
    rules = [Rule(frozenset([N]), (Cell((), NEXT),))]
    rules += [Rule(frozenset([C]), (Cell((), pheads[C]),)) for C in sorted(pun)]
    b.policies[pol] = Policy(tuple(rules))
    seqs = {C: PayoffSequence((SeqItem(abar, None, fam[C]),), 0, fam[C], 0.0,
                              (tuple(float(x) for x in fam[C]),)) for C in fam}
    meta = {"regime": "tupt", "normal_heads": heads, "punish_heads": pheads}
    params = FolkParameters("tupt", delta, kappa, L, 0.0, target, pun, alts, punish_eps, seqs)
    return b.automaton(meta), params


def _build_some(g, target, delta, S, eps, kappa=None):
    _require_tu(g)
    from .payoff_sets import max_slack, set_constraints
    n, N = g.n, g.N
    S = sorted(set(S if S is not None else g.secret_coalitions))
    if N in S:
        raise BuildError("the grand coalition cannot be secret when the strict S-rational set is used")
    if any(len(members(C)) < 2 for C in S):
        raise BuildError("S must contain only non-singleton coalitions")
    singles = [1 << i for i in range(n)]
    shat = sorted(set(S) | set(singles))
    lower, lo, hi = set_constraints(g, "srational_ir", S)

    def strictly_inside(u):
        tot = sum(u)
        if not (lo <= tot <= hi):
            return False
        return all(sum(u[i] for i in members(C)) > b0 for C, b0 in lower)

    if not strictly_inside(target):
        if not max_slack(n, lower, lo, hi).strictly_nonempty:
            raise BuildError("strict S-rational set is empty")
        raise BuildError("target outside the strict S-rational set")
    pun = coalition_specific_punishments(g, target, coalitions=shat, accept=strictly_inside)
    punish_eps = target[0] - pun[1][0]
    alts = {C: punishing_alternative(g, C) for C in shat}
    kappa, L = kappa_and_length(g, target, pun, alts, "some", delta, kappa)
    gaps = []
    keys = [None] + shat

    def cs(u, C):
        return sum((Fraction(u[i]) for i in members(C)), Fraction(0))

    fam = {None: tuple(target)}
    fam.update(pun)
    for d in shat:
        for d2 in keys:
            if d2 != d:
                gaps.append(cs(fam[d2], d) - cs(fam[d], d))
        gaps.append(cs(fam[d], d) - coalitional_minmax(g, d).value)
    cap = (1 - kappa) * min(gaps)
    eps = float(cap) / 2 if eps is None else float(eps)
    seqs = {key: decompose_payoff_sequence(_tu_vertices(g, fam[key]), fam[key], delta, eps) for key in keys}
    mm = individual_minmaxes(g)
    b = _Builder(g, tu=True)
    pol_normal = b.add_policy(None)
    pol_single = {i: b.add_policy(None) for i in range(n)}
    pol_coal = b.add_policy(None)
    heads = {}
    heads[None] = b.add_sequence("0", seqs[None], pol_normal)
    for C in shat:
        heads[C] = b.add_sequence(coalition_label(C), seqs[C], pol_normal)
    pheads = {}
    for C in shat:
        mem = members(C)
        pol = pol_single[mem[0]] if len(mem) == 1 else pol_coal
        pheads[C] = b.add_punishment(coalition_label(C), alts[C], L, pol, heads[C])
    others = [C for C in all_coalitions(n) if C not in shat]
    shat_rules = [Rule(frozenset([C]), (Cell((), pheads[C]),)) for C in shat]

    def single_head(k):
        return pheads[1 << k]

    b.policies[pol_normal] = Policy(tuple(shat_rules + [
        Rule(frozenset([C]), _argmin_cells(members(C), n, single_head)) for C in others]))
    for i in range(n):
        b.policies[pol_single[i]] = Policy(tuple(shat_rules + _tupm_punish_rules(
            n, i, mm[i], {k: single_head(k) for k in range(n)}, others)))
    b.policies[pol_coal] = Policy(tuple(shat_rules + [
        Rule(frozenset([C]), _argmin_cells(members(C), n, single_head, relative=False)) for C in others]))
    meta = {"regime": "some", "secret": S, "normal_heads": {str(k): v for k, v in heads.items()},
            "punish_heads": pheads}
    pun_out = dict(pun)
    params = FolkParameters("some", delta, kappa, L, eps, target, pun_out, alts, punish_eps,
                            {("0" if k is None else k): s for k, s in seqs.items()})
    return b.automaton(meta), params


# -- core reversion and the roommates example ------------------------------------

def core_reversion_convention(g: StageGame, path_alternative: int, core_alternative: int,
                              path_transfers=None, guard_player: int | None = None) -> ConventionAutomaton:
    """Play the path outcome until someone blocks, then the core alternative forever.

    A block that keeps the path alternative and everyone's payoff is ignored. With
    guard_player set (TU only), so is a block leaving that player with a
    negative experienced payoff.
    """
    if core_alternative not in stage_core(g):
        raise BuildError("alternative not in the stage core")
    tu = g.is_tu
    z = zero_transfers(g.n) if tu else None
    b = _Builder(g, tu)
    pol_path = b.add_policy(None)
    pol_core = b.add_policy(Policy((Rule(None, (Cell((), 1),)),)))
    b.reserve("path", path_alternative, (path_transfers or z) if tu else None, pol_path)
    b.reserve("core", core_alternative, z, pol_core)
    if guard_player is not None:
        if not tu:
            raise BuildError("the guard reads transfers and needs a TU game")
        neg = LinCon(_unit(g.n, guard_player), "<", Fraction(0))
        ok = LinCon(_unit(g.n, guard_player), ">=", Fraction(0))
        cells = (Cell((neg,), NEXT), Cell((ok,), 1))
    else:
        cells = (Cell((), 1),)
    # a block that keeps the path alternative (and, if path transfers are paid, everyone's
    # payoff) changes nothing and is not punished
    keep = ()
    if tu and path_transfers is not None and any(x for row in path_transfers for x in row):
        keep = tuple(LinCon(_unit(g.n, i), "==", Fraction(0), relative=True) for i in range(g.n))
    same = Cell(keep, NEXT, frozenset([path_alternative]))
    b.policies[pol_path] = Policy((Rule(None, (same,) + cells),))
    return b.automaton({"regime": "core_reversion"})


def constant_convention(g: StageGame, alternative: int, transfers=None) -> ConventionAutomaton:
    tu = g.is_tu
    b = _Builder(g, tu)
    pol = b.add_policy(Policy((Rule(None, (Cell((), 0),)),)))
    b.reserve("const", alternative, (transfers or zero_transfers(g.n)) if tu else None, pol)
    return b.automaton({"regime": "constant"})


def roommates_figure1(g: StageGame | None = None) -> ConventionAutomaton:
    """Cycle-free roommates convention: after a block, move to the match that excludes the scapegoat.

    The scapegoat is the smallest-index blocker matched at the current state,
    or the unmatched blocker when no blocker is matched.
    """
    from .library import ROOM_MATCHES, roommates_game
    g = g or roommates_game()
    excl = {0: 2, 1: 1, 2: 0}       # player -> match leaving them single
    b = _Builder(g, tu=False)
    pols = []
    for s, match in enumerate(ROOM_MATCHES[:3]):
        rules = []
        for C in all_coalitions(3):
            mem = members(C)
            matched = [i for i in mem if i in match]
            goat = matched[0] if matched else mem[0]
            rules.append(Rule(frozenset([C]), (Cell((), excl[goat]),)))
        pols.append(b.add_policy(Policy(tuple(rules))))
    for s in range(3):
        b.reserve(g.labels[s], s, None, pols[s])
    return b.automaton({"regime": "ntu"})
