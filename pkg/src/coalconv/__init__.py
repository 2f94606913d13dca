"""Stable conventions for repeated coalitional games."""
from .game_core import StageGame, TransferMode, validate_game
from .conventions import build_folk_automaton, core_reversion_convention
from .stability import verify

__version__ = "0.1.0"

__all__ = ["StageGame", "TransferMode", "validate_game", "build_folk_automaton",
           "core_reversion_convention", "verify", "__version__"]
