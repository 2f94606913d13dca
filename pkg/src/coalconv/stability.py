"""One-shot coalitional deviation checks for convention automata."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .automaton import ConventionAutomaton, LinCon, continuation_values
from .game_core import (StageGame, TransferMode, all_coalitions, coalition_label, members,
                        zero_transfers)
from .lp import solve_lp
from .minmax import coalitional_minmax

TOL = 2.0 ** -30


class MeasurabilityError(ValueError):
    """A transition reads transfers the regime keeps secret."""


@dataclass(frozen=True)
class DeviationWitness:
    state: int
    coalition: int
    alternative: int
    gains: tuple                     # per member of the coalition, in member order
    transfers: tuple | None = None   # rows of the blocking coalition (TU)
    successor: int | None = None
    slack: float = 0.0

    def describe(self, g: StageGame, aut: ConventionAutomaton | None = None) -> str:
        st = aut.states[self.state].label if aut is not None else str(self.state)
        return (f"state {st}: coalition {coalition_label(self.coalition)} blocks to "
                f"{g.labels[self.alternative]} with gains {[float(x) for x in self.gains]}")


@dataclass
class StabilityResult:
    stable: bool
    witness: DeviationWitness | None = None
    checked: int = 0
    regime: str = "ntu"
    aut: ConventionAutomaton | None = field(default=None, repr=False)

    def describe(self, g: StageGame) -> str:
        if self.stable:
            return "STABLE"
        return "UNSTABLE: " + self.witness.describe(g, self.aut)

    @property
    def verdict(self) -> str:
        return "STABLE" if self.stable else "UNSTABLE"


def _exact(delta) -> bool:
    return isinstance(delta, Fraction)


def _tol(delta):
    return Fraction(0) if _exact(delta) else TOL


def _num(delta):
    return Fraction(delta) if _exact(delta) else float(delta)


# -- NTU --------------------------------------------------------------------------

def _state_list(aut, states):
    return range(len(aut.states)) if states is None else sorted(set(states))


def verify_ntu(aut: ConventionAutomaton, g: StageGame, delta, states: Iterable[int] | None = None) -> StabilityResult:
    d = _num(delta)
    tol = _tol(delta)
    conv = Fraction if _exact(delta) else float
    V = continuation_values(aut, g, delta)
    pay = [[conv(x) for x in g.v(a)] for a in range(g.m)]
    checked = 0
    for s in _state_list(aut, states):
        st = aut.states[s]
        a = st.alternative
        Vs = V[s]
        for C in all_coalitions(g.n):
            mem = members(C)
            for b in g.effectivity(C, a):
                checked += 1
                cells = aut.cells(s, C, b)
                pb = pay[b]
                succ = _ntu_successor(aut, g, s, cells, b)
                Vn = V[succ]
                gains = [(1 - d) * pb[i] + d * Vn[i] - Vs[i] for i in mem]
                if min(gains) > tol:
                    w = DeviationWitness(s, C, b, tuple(gains), None, succ, float(min(gains)))
                    return StabilityResult(False, w, checked, "ntu", aut)
    return StabilityResult(True, None, checked, "ntu", aut)


def _ntu_successor(aut, g, s, cells, b):
    if len(cells) == 1 and not cells[0].constraints:
        return aut.resolve(s, cells[0].successor)
    u = g.v(b)
    ref = g.v(aut.states[s].alternative)
    for cell in cells:
        if cell.holds(u, ref):
            return aut.resolve(s, cell.successor)
    raise ValueError("no cell matched")


# -- TU helpers --------------------------------------------------------------------

def transfer_cap(aut, g, V, delta) -> float:
    """(1+δ)/(1-δ)·diam(V) + diam(payoffs): the incoming-transfer bound used as a box."""
    d = float(delta)
    n = g.n
    dv = max(max(float(x[i]) for x in V) - min(float(x[i]) for x in V) for i in range(n))
    dp = max(max(float(g.v(a)[i]) for a in range(g.m)) - min(float(g.v(a)[i]) for a in range(g.m))
             for i in range(n))
    return (1 + d) / (1 - d) * dv + dp


def _fixed_parts(g, st, C, a):
    """u = base + M x, where x are the free rows of C (T'_ij, i in C, j != i)."""
    n = g.n
    T = st.transfers or zero_transfers(n)
    mem = set(members(C))
    base = [float(x) for x in g.v(a)]
    for i in range(n):
        if i in mem:
            continue
        for j in range(n):
            if i != j and T[i][j]:
                base[j] += float(T[i][j])
                base[i] -= float(T[i][j])
    var = [(i, j) for i in sorted(mem) for j in range(n) if j != i]
    M = [[0.0] * len(var) for _ in range(n)]
    for k, (i, j) in enumerate(var):
        M[j][k] += 1.0
        M[i][k] -= 1.0
    return base, M, var


def _cell_rows(cell, ref, base, M):
    A, b = [], []
    for con in cell.constraints:
        rows, rhs = con.as_le(ref)
        for coeffs, r in zip(rows, rhs):
            cf = [float(c) for c in coeffs]
            A.append([sum(cf[k] * M[k][x] for k in range(len(cf))) for x in range(len(M[0]))])
            b.append(float(r) - sum(c * u for c, u in zip(cf, base)))
    return A, b


def _tupm_check(aut, g, d, s, C, a, V, ref, cap, tol):
    """Best slack t over all cells; returns (t, x, successor, gains) for the best profitable cell."""
    st = aut.states[s]
    mem = members(C)
    base, M, var = _fixed_parts(g, st, C, a)
    nx = len(var)
    Vs = V[s]
    best = None
    for cell in aut.cells(s, C, a):
        succ = aut.resolve(s, cell.successor)
        Vn = V[succ]
        const = [(1 - d) * base[i] + d * Vn[i] - Vs[i] for i in range(g.n)]
        # coalition total can only shrink when paying outsiders: cheap upper bound
        if sum(const[i] for i in mem) <= len(mem) * tol:
            continue
        A, b = _cell_rows(cell, ref, base, M)
        for i in mem:
            A.append([-(1 - d) * M[i][x] for x in range(nx)] + [1.0])
            b.append(const[i])
        A = [row if len(row) == nx + 1 else row + [0.0] for row in A]
        c = [0.0] * nx + [1.0]
        bounds = [(0.0, cap)] * nx + [(None, None)]
        res = solve_lp(c, A, b, bounds=bounds, exact=False)
        if not res.ok:
            continue
        t = res.value
        if t > tol and (best is None or t > best[0]):
            x = res.x[:nx]
            u = [base[k] + sum(M[k][q] * x[q] for q in range(nx)) for k in range(g.n)]
            if not cell.holds([Fraction(v) for v in u], ref) and not _holds_closed(cell, u, ref):
                continue
            gains = tuple((1 - d) * u[i] + d * Vn[i] - Vs[i] for i in mem)
            rows = {var[q]: x[q] for q in range(nx) if x[q] > 0}
            best = (t, rows, succ, gains)
    return best


def _holds_closed(cell, u, ref, slack=1e-9):
    for con in cell.constraints:
        rows, rhs = con.as_le(ref)
        for coeffs, r in zip(rows, rhs):
            if sum(float(c) * x for c, x in zip(coeffs, u)) > float(r) + slack:
                return False
    return True


def verify_tupm(aut: ConventionAutomaton, g: StageGame, delta, coalitions: Iterable[int] | None = None,
                V=None, states: Iterable[int] | None = None) -> StabilityResult:
    d = float(delta)
    tol = TOL
    V = V or [[float(x) for x in v] for v in continuation_values(aut, g, d)]
    cap = transfer_cap(aut, g, V, d)
    coals = list(coalitions) if coalitions is not None else list(all_coalitions(g.n))
    checked = 0
    refs = [tuple(aut.recommended(g, s)) for s in range(len(aut.states))]
    for s in _state_list(aut, states):
        st = aut.states[s]
        for C in coals:
            for a in g.effectivity(C, st.alternative):
                checked += 1
                hit = _tupm_check(aut, g, d, s, C, a, V, refs[s], cap, tol)
                if hit is not None:
                    t, rows, succ, gains = hit
                    w = DeviationWitness(s, C, a, gains, _rows_matrix(g.n, rows), succ, t)
                    return StabilityResult(False, w, checked, "tupm", aut)
    return StabilityResult(True, None, checked, "tupm", aut)


def _rows_matrix(n, rows):
    T = [[0.0] * n for _ in range(n)]
    for (i, j), x in rows.items():
        T[i][j] = x
    return tuple(tuple(r) for r in T)


# -- secret transfers ---------------------------------------------------------------

def check_measurability(aut: ConventionAutomaton, S: Iterable[int]) -> list[str]:
    """Cells for C in S may only read the coalition total of C and outsiders' payoffs."""
    bad = []
    for pk, pol in enumerate(aut.policies):
        for C in S:
            mem = members(C)
            for cell in pol.cells_for(C):
                for con in cell.constraints:
                    vals = {con.coeffs[i] for i in mem}
                    if len(vals) > 1:
                        bad.append(f"policy {pk} reads intra-coalition transfers of {coalition_label(C)}")
    return bad


def _tupt_check(aut, g, d, s, C, a, V, ref, cap, tol):
    st = aut.states[s]
    n = g.n
    mem = members(C)
    out = [j for j in range(n) if not (C >> j) & 1]
    base, _, _ = _fixed_parts(g, st, C, a)
    # payments from C to outsiders are the only variables that matter
    var = [(i, j) for i in mem for j in out]
    nx = len(var)
    Vs = V[s]
    best = None
    for cell in aut.cells(s, C, a):
        succ = aut.resolve(s, cell.successor)
        Vn = V[succ]
        const = sum((1 - d) * base[i] + d * Vn[i] - Vs[i] for i in mem)
        if const <= len(mem) * tol:
            continue
        # constraint rows over y: coalition members share one coefficient
        A, b = [], []
        for con in cell.constraints:
            rows, rhs = con.as_le(ref)
            for coeffs, r in zip(rows, rhs):
                cf = [float(c) for c in coeffs]
                cC = cf[mem[0]]
                row = []
                for (i, j) in var:
                    row.append(cf[j] - cC)
                A.append(row)
                b.append(float(r) - sum(cf[k] * base[k] for k in out) - cC * sum(base[i] for i in mem))
        c = [-(1 - d)] * nx
        if nx:
            res = solve_lp(c, A, b, bounds=[(0.0, cap)] * nx, exact=False)
            if not res.ok:
                continue
            total = const + res.value
            y = res.x
        else:
            if any(0 > bb + 1e-12 for bb in b):
                continue
            total, y = const, []
        if total > len(mem) * tol and (best is None or total > best[0]):
            share = total / len(mem)
            best = (total, {var[q]: y[q] for q in range(nx) if y[q] > 0}, succ, tuple(share for _ in mem))
    return best


def verify_tupt(aut: ConventionAutomaton, g: StageGame, delta, S: Iterable[int] | None = None,
                states: Iterable[int] | None = None) -> StabilityResult:
    d = float(delta)
    S = set(all_coalitions(g.n)) if S is None else set(S)
    bad = check_measurability(aut, S)
    if bad:
        raise MeasurabilityError("; ".join(bad))
    V = [[float(x) for x in v] for v in continuation_values(aut, g, d)]
    cap = transfer_cap(aut, g, V, d)
    refs = [tuple(aut.recommended(g, s)) for s in range(len(aut.states))]
    checked = 0
    for s in _state_list(aut, states):
        st = aut.states[s]
        for C in all_coalitions(g.n):
            for a in g.effectivity(C, st.alternative):
                checked += 1
                if C in S:
                    hit = _tupt_check(aut, g, d, s, C, a, V, refs[s], cap, TOL)
                else:
                    hit = _tupm_check(aut, g, d, s, C, a, V, refs[s], cap, TOL)
                if hit is not None:
                    t, rows, succ, gains = hit
                    w = DeviationWitness(s, C, a, gains, _rows_matrix(g.n, rows), succ, t)
                    return StabilityResult(False, w, checked, "tupt", aut)
    return StabilityResult(True, None, checked, "tupt", aut)


def verify(aut: ConventionAutomaton, g: StageGame, delta, states: Iterable[int] | None = None) -> StabilityResult:
    """Dispatch on the game's transfer mode."""
    if g.mode is TransferMode.NTU:
        return verify_ntu(aut, g, delta, states)
    if g.mode is TransferMode.TU_PUBLIC:
        return verify_tupm(aut, g, delta, states=states)
    if g.mode is TransferMode.TU_SECRET:
        return verify_tupt(aut, g, delta, states=states)
    return verify_tupt(aut, g, delta, g.secret_coalitions, states=states)


def witness_gains(aut, g, delta, w: DeviationWitness) -> tuple:
    """Re-evaluate a witness from scratch (NTU and TUPM witnesses)."""
    d = float(delta)
    V = continuation_values(aut, g, d)
    st = aut.states[w.state]
    if not aut.tu:
        succ = aut.successor(g, w.state, w.coalition, w.alternative)
        u = [float(x) for x in g.v(w.alternative)]
    else:
        from .automaton import merge_transfers
        T = merge_transfers(st.transfers or zero_transfers(g.n), w.coalition,
                            [[Fraction(x) for x in row] for row in w.transfers])
        from .game_core import experienced_payoff
        ue = experienced_payoff(g, w.alternative, T)
        u = [float(x) for x in ue]
        ref = aut.recommended(g, w.state)
        succ = None
        for cell in aut.cells(w.state, w.coalition, w.alternative):
            if _holds_closed(cell, u, ref):
                succ = aut.resolve(w.state, cell.successor)
                if succ == w.successor:
                    break
        succ = w.successor if succ is None else succ
    return tuple((1 - d) * u[i] + d * float(V[succ][i]) - float(V[w.state][i]) for i in members(w.coalition))


# -- value guarantee and delta certification ---------------------------------------

@dataclass(frozen=True)
class GuaranteeViolation:
    state: int
    coalition: int
    value: float
    bound: Fraction


def coalition_value_guarantee_check(aut: ConventionAutomaton, g: StageGame, delta,
                                    S: Iterable[int] | None = None) -> GuaranteeViolation | None:
    S = list(all_coalitions(g.n)) if S is None else list(S)
    V = continuation_values(aut, g, delta)
    tol = _tol(delta)
    for s in range(len(aut.states)):
        for C in S:
            tot = sum(V[s][i] for i in members(C))
            bound = coalitional_minmax(g, C).value
            if tot < (bound if _exact(delta) else float(bound)) - tol:
                return GuaranteeViolation(s, C, float(tot), bound)
    return None


@dataclass
class DeltaCertificate:
    table: list                      # (delta, passed, note)
    threshold: float | None          # smallest grid delta from which every larger grid point passes
    monotone: bool


def min_delta_certify(make: Callable[[float], ConventionAutomaton] | str, g: StageGame,
                      target=None, grid: Sequence[float] = ()) -> DeltaCertificate:
    """Build and verify at each grid δ; report the table, never extrapolate.

    `make` is either a regime name for the folk builders or a callable δ -> automaton.
    """
    from .conventions import BuildError, build_folk_automaton
    grid = list(grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("delta grid must be ascending")
    table = []
    for dl in grid:
        try:
            if isinstance(make, str):
                aut, _ = build_folk_automaton(g, target, dl, make, verify=False)
            else:
                aut = make(dl)
            res = verify(aut, g, dl)
            table.append((dl, res.stable, res.describe(g)))
        except (BuildError, ValueError) as exc:
            table.append((dl, False, f"build failed: {exc}"))
    passed = [p for _, p, _ in table]
    threshold = None
    for k in range(len(grid)):
        if all(passed[k:]):
            threshold = grid[k]
            break
    first = passed.index(True) if True in passed else None
    monotone = first is None or all(passed[first:])
    return DeltaCertificate(table, threshold, monotone)


__all__ = ["verify", "verify_ntu", "verify_tupm", "verify_tupt", "StabilityResult", "DeviationWitness",
           "coalition_value_guarantee_check", "min_delta_certify", "check_measurability",
           "MeasurabilityError", "witness_gains", "TOL", "transfer_cap", "LinCon"]
