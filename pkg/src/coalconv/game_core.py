"""Finite stage games with coalitional effectivity and optional transfers.

Players are indexed 0..n-1 internally. A coalition is an int bit mask with
bit i set for player i. Reports and the CLI render players 1-based.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


# -- coalitions ------------------------------------------------------------

def mask_of(players: Iterable[int]) -> int:
    m = 0
    for p in players:
        m |= 1 << p
    return m


def members(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def grand(n: int) -> int:
    return (1 << n) - 1


def all_coalitions(n: int) -> range:
    """Nonempty coalitions in bit-mask order."""
    return range(1, 1 << n)


def coalition_label(mask: int) -> str:
    return "{" + ",".join(str(i + 1) for i in members(mask)) + "}"


def parse_coalition(text: str, n: int) -> int:
    """Accept '1,3' (1-based players) or a plain integer mask like '5'."""
    text = text.strip().strip("{}")
    if "," in text or text == "":
        ps = [int(t) - 1 for t in text.split(",") if t.strip()]
        mask = mask_of(ps)
    else:
        # a single number is a mask; '1'..'n' as players would be ambiguous
        mask = int(text)
    if mask <= 0 or mask > grand(n):
        raise ValueError(f"coalition {text!r} out of range for n={n}")
    return mask


# -- effectivity rules -----------------------------------------------------

@dataclass(frozen=True)
class StrategicForm:
    """Alternatives are action profiles; C may change its own coordinates."""
    action_counts: tuple[int, ...]

    def profiles(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(k) for k in self.action_counts)))


@dataclass(frozen=True)
class ExplicitTable:
    """(C, a) -> alternatives. Missing entries mean C cannot move from a."""
    table: Mapping[tuple[int, int], tuple[int, ...]]


@dataclass(frozen=True)
class SimpleGameRule:
    winning: frozenset[int]


class TransferMode(str, enum.Enum):
    NTU = "ntu"
    TU_PUBLIC = "tu_public"
    TU_SECRET = "tu_secret"
    TU_PARTIAL = "tu_partial"


# -- the game ---------------------------------------------------------------

def to_fraction(x) -> Fraction:
    """Exact rational; floats are read by their shortest decimal repr, so 0.1 means 1/10."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _frac_vec(xs) -> tuple[Fraction, ...]:
    return tuple(to_fraction(x) for x in xs)


@dataclass(frozen=True, eq=False)
class StageGame:
    n: int
    labels: tuple[str, ...]
    payoffs: tuple[tuple[Fraction, ...], ...]
    rule: StrategicForm | ExplicitTable | SimpleGameRule
    grand_omnipotent: bool = False
    mode: TransferMode = TransferMode.NTU
    secret_coalitions: frozenset[int] = frozenset()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @staticmethod
    def build(payoffs: Sequence[Sequence], rule, labels=None, *, grand_omnipotent=False,
              mode=TransferMode.NTU, secret_coalitions=()) -> "StageGame":
        pays = tuple(_frac_vec(p) for p in payoffs)
        if not pays:
            raise ValueError("a game needs at least one alternative")
        n = len(pays[0])
        if labels is None:
            labels = tuple(f"a{k}" for k in range(len(pays)))
        return StageGame(n, tuple(labels), pays, rule, grand_omnipotent,
                         TransferMode(mode), frozenset(secret_coalitions))

    @property
    def m(self) -> int:
        return len(self.payoffs)

    @property
    def N(self) -> int:
        return grand(self.n)

    @property
    def is_tu(self) -> bool:
        return self.mode is not TransferMode.NTU

    def v(self, a: int) -> tuple[Fraction, ...]:
        return self.payoffs[a]

    def total(self, a: int, mask: int | None = None) -> Fraction:
        p = self.payoffs[a]
        if mask is None:
            return sum(p, Fraction(0))
        return sum((p[i] for i in members(mask)), Fraction(0))

    def with_payoffs(self, payoffs) -> "StageGame":
        return StageGame(self.n, self.labels, tuple(_frac_vec(p) for p in payoffs), self.rule,
                         self.grand_omnipotent, self.mode, self.secret_coalitions)

    def with_mode(self, mode, secret_coalitions=()) -> "StageGame":
        return StageGame(self.n, self.labels, self.payoffs, self.rule, self.grand_omnipotent,
                         TransferMode(mode), frozenset(secret_coalitions))

    def raw_effectivity(self, C: int, a: int) -> tuple[int, ...]:
        """E_C(a) as declared, before the reflexivity/omnipotence fix-ups."""
        rule = self.rule
        if isinstance(rule, SimpleGameRule):
            return tuple(range(self.m)) if C in rule.winning else (a,)
        if isinstance(rule, StrategicForm):
            profs = self._cache.get("profiles")
            if profs is None:
                profs = rule.profiles()
                self._cache["profiles"] = profs
                self._cache["pindex"] = {p: k for k, p in enumerate(profs)}
            idx = self._cache["pindex"]
            base = profs[a]
            mem = members(C)
            out = []
            for choice in itertools.product(*(range(rule.action_counts[i]) for i in mem)):
                prof = list(base)
                for i, c in zip(mem, choice):
                    prof[i] = c
                out.append(idx[tuple(prof)])
            return tuple(sorted(out))
        return tuple(rule.table.get((C, a), (a,)))

    def effectivity(self, C: int, a: int) -> tuple[int, ...]:
        """E_C(a), sorted by alternative index; always contains a."""
        if not (0 <= a < self.m) or not (0 < C <= self.N):
            raise IndexError(f"effectivity({C}, {a}) out of range")
        key = ("E", C, a)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.grand_omnipotent and C == self.N:
            out = tuple(range(self.m))
        else:
            out = tuple(sorted(set(self.raw_effectivity(C, a)) | {a}))
        self._cache[key] = out
        return out

    def min_total_alternative(self) -> int:
        tots = [self.total(a) for a in range(self.m)]
        return tots.index(min(tots))

    def max_total(self) -> Fraction:
        return max(self.total(a) for a in range(self.m))

    def min_total(self) -> Fraction:
        return min(self.total(a) for a in range(self.m))


# -- validation -------------------------------------------------------------

def validate_game(g: StageGame) -> list[str]:
    out: list[str] = []
    if g.n < 2:
        out.append("need at least 2 players")
    for a, p in enumerate(g.payoffs):
        if len(p) != g.n:
            out.append(f"payoff of alternative {a} has length {len(p)}, expected {g.n}")
    if len(g.labels) != g.m:
        out.append("label count differs from alternative count")
    rule = g.rule
    if isinstance(rule, StrategicForm):
        if len(rule.action_counts) != g.n:
            out.append("strategic form needs one action set per player")
        elif len(rule.profiles()) != g.m:
            out.append("strategic form profile count differs from alternative count")
    elif isinstance(rule, SimpleGameRule):
        for C in rule.winning:
            if not (0 < C <= g.N):
                out.append(f"winning coalition {C} out of range")
    elif isinstance(rule, ExplicitTable):
        for (C, a), targets in rule.table.items():
            if not (0 < C <= g.N) or not (0 <= a < g.m):
                out.append(f"table key ({C},{a}) out of range")
                continue
            if any(not (0 <= b < g.m) for b in targets):
                out.append(f"table entry at ({coalition_label(C)},{a}) names an unknown alternative")
    if not out and isinstance(rule, ExplicitTable):
        for C in all_coalitions(g.n):
            for a in range(g.m):
                if a not in g.raw_effectivity(C, a):
                    # missing rows default to {a}, so only explicit rows can fail
                    if g.grand_omnipotent and C == g.N:
                        continue
                    out.append(f"reflexivity violated at ({coalition_label(C)},{a})")
    if g.mode is TransferMode.TU_PARTIAL:
        if any(len(members(C)) == 1 for C in g.secret_coalitions):
            out.append("S contains singleton")
        if any(not (0 < C <= g.N) for C in g.secret_coalitions):
            out.append("S contains a coalition outside the player range")
    elif g.secret_coalitions:
        out.append("secret coalitions given outside tu_partial mode")
    return out


# -- NEU --------------------------------------------------------------------

@dataclass(frozen=True)
class NeuWitness:
    i: int
    j: int
    k: Fraction
    lam: Fraction


def check_neu(g: StageGame) -> NeuWitness | None:
    """None if no pair satisfies v_i = k + lam v_j (lam > 0); else a witness."""
    for i in range(g.n):
        for j in range(i):
            w = _affine_fit(g, i, j)
            if w is not None:
                return w
    return None


def _affine_fit(g: StageGame, i: int, j: int) -> NeuWitness | None:
    xs = [p[j] for p in g.payoffs]
    ys = [p[i] for p in g.payoffs]
    x0, y0 = xs[0], ys[0]
    pivot = next((k for k in range(len(xs)) if xs[k] != x0), None)
    if pivot is None:
        if all(y == y0 for y in ys):
            return NeuWitness(i, j, y0 - x0, Fraction(1))
        return None
    lam = (ys[pivot] - y0) / (xs[pivot] - x0)
    if lam <= 0:
        return None
    k = y0 - lam * x0
    if all(y == k + lam * x for x, y in zip(xs, ys)):
        return NeuWitness(i, j, k, lam)
    return None


# -- transfers ----------------------------------------------------------------

Transfers = tuple[tuple[Fraction, ...], ...]


def zero_transfers(n: int) -> Transfers:
    z = Fraction(0)
    return tuple(tuple(z for _ in range(n)) for _ in range(n))


def make_transfers(n: int, entries: Mapping[tuple[int, int], object]) -> Transfers:
    rows = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), x in entries.items():
        x = Fraction(x)
        if i == j:
            raise ValueError("transfer matrix diagonal must be zero")
        if x < 0:
            raise ValueError("transfers must be nonnegative")
        rows[i][j] = x
    return tuple(tuple(r) for r in rows)


def transfers_valid(T) -> bool:
    n = len(T)
    return all(T[i][i] == 0 and all(x >= 0 for x in T[i]) and len(T[i]) == n for i in range(n))


def net_transfers(T) -> list:
    """Incoming minus outgoing per player."""
    n = len(T)
    return [sum(T[j][i] for j in range(n)) - sum(T[i][j] for j in range(n)) for i in range(n)]


def experienced_payoff(g: StageGame, a: int, T) -> tuple:
    if not g.is_tu:
        raise ValueError("experienced payoffs need a TU transfer mode")
    net = net_transfers(T)
    return tuple(v + d for v, d in zip(g.payoffs[a], net))


def transfers_realizing(v, u) -> Transfers:
    """A nonnegative transfer matrix T with v + net(T) = u (requires equal totals).

    Payers (u < v) pay receivers in index order; deterministic and sparse.
    """
    n = len(v)
    d = [Fraction(x) - Fraction(y) for x, y in zip(u, v)]
    if sum(d) != 0:
        raise ValueError("transfers cannot change the total payoff")
    owe = [(-x if x < 0 else Fraction(0)) for x in d]
    get = [(x if x > 0 else Fraction(0)) for x in d]
    rows = [[Fraction(0)] * n for _ in range(n)]
    j = 0
    for i in range(n):
        while owe[i] > 0:
            while get[j] == 0:
                j += 1
            x = min(owe[i], get[j])
            rows[i][j] += x
            owe[i] -= x
            get[j] -= x
    return tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class Outcome:
    alternative: int
    coalition: int = 0
    transfers: Transfers | None = None
