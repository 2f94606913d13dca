from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from coalconv.game_core import TransferMode, all_coalitions, members
from coalconv.library import table_game

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

REPO = Path(__file__).resolve().parents[1]
GAMES = REPO / "games"


def random_table_game(rng: random.Random, n: int = 3, m: int | None = None, mode=TransferMode.NTU,
                      grand_omnipotent: bool = True, payoff_max: int = 6):
    """Random explicit-table game with small integer payoffs."""
    m = m if m is not None else rng.randint(2, 6)
    pays = [tuple(rng.randint(0, payoff_max) for _ in range(n)) for _ in range(m)]
    moves = {}
    for C in all_coalitions(n):
        for a in range(m):
            k = rng.randint(0, m - 1)
            moves[(C, a)] = tuple(sorted({a} | set(rng.sample(range(m), k))))
    return table_game(pays, moves, mode=mode, grand_omnipotent=grand_omnipotent)


@st.composite
def table_games(draw, n=3, mode=TransferMode.NTU, max_alts=6):
    seed = draw(st.integers(0, 2**32 - 1))
    m = draw(st.integers(2, max_alts))
    return random_table_game(random.Random(seed), n, m, mode)


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)


@pytest.fixture
def games_dir() -> Path:
    return GAMES


def coalition_sum(u, C):
    return sum((u[i] for i in members(C)), Fraction(0))
