"""Verifiable next-best-move questions for four Tic-Tac-Toe-style games."""

__version__ = "0.1.0"

from .engine import GameState, SolutionRecord, apply_move, get_solution  # noqa: E402
from .topology import GAME_IDS, GameSpec, build_spec  # noqa: E402

__all__ = [
    "GAME_IDS",
    "GameSpec",
    "GameState",
    "SolutionRecord",
    "__version__",
    "apply_move",
    "build_spec",
    "get_solution",
]
