"""Game states and the next-best-move rule.

The public functions take and return label sets so they read like the rule
they implement; the heavy enumeration path in :mod:`tttbench.kernels` runs
the same rule over bitmasks and is cross-checked against this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .topology import GameSpec, build_spec

ALICE, BOB = "Alice", "Bob"
WIN, BLOCKED, FORK = "Win", "Blocked", "Fork"
VERDICTS = (WIN, BLOCKED, FORK)

# How get_forks counts threats.  "sets": the number of threatened winning
# sets.  "cells": the number of distinct cells completing one.  They differ
# only when two sets share both the placed cell and the missing cell, which
# needs four stones of the mover on cubes or squares; no scheduled (game, N)
# reaches that, but e.g. cTTT at N=8 does, where "sets" yields blockable forks.
FORK_RULES = ("sets", "cells")
DEFAULT_FORK_RULE = "sets"


class IllegalMoveError(ValueError):
    pass


class GameOverError(ValueError):
    pass


def _player(ply: int) -> str:
    return ALICE if ply % 2 == 0 else BOB


@dataclass(frozen=True)
class GameState:
    """An alternating move sequence; Alice (white) always moves first."""

    game_id: str
    moves: tuple[str, ...] = ()
    _alice: frozenset = field(init=False, repr=False, compare=False)
    _bob: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        spec = self.spec
        moves = tuple(self.moves)
        if len(set(moves)) != len(moves):
            raise IllegalMoveError(f"repeated position in {moves}")
        for m in moves:
            if m not in spec.index:
                raise IllegalMoveError(f"unknown position {m!r} for {self.game_id}")
        object.__setattr__(self, "moves", moves)
        object.__setattr__(self, "_alice", frozenset(moves[0::2]))
        object.__setattr__(self, "_bob", frozenset(moves[1::2]))

    @classmethod
    def from_occupancy(cls, game_id: str, alice: Iterable[str], bob: Iterable[str]) -> GameState:
        """Label-sorted interleaving of the two players' stones."""
        from .enumerator import interleave

        return cls(game_id, tuple(label for label, _ in interleave(alice, bob, build_spec(game_id))))

    @property
    def spec(self) -> GameSpec:
        return build_spec(self.game_id)

    @property
    def n_moves(self) -> int:
        return len(self.moves)

    @property
    def next_player(self) -> str:
        return _player(len(self.moves))

    @property
    def last_player(self) -> str | None:
        return _player(len(self.moves) - 1) if self.moves else None

    def positions_of(self, player: str) -> frozenset:
        return self._alice if player == ALICE else self._bob

    @property
    def current_positions(self) -> frozenset:
        """Stones of the player to move."""
        return self.positions_of(self.next_player)

    @property
    def opponent_positions(self) -> frozenset:
        return self._bob if self.next_player == ALICE else self._alice

    @property
    def available(self) -> frozenset:
        return frozenset(self.spec.positions) - self._alice - self._bob

    @property
    def history(self) -> list[tuple[str, str]]:
        return [(m, _player(i)) for i, m in enumerate(self.moves)]

    def winner(self) -> str | None:
        for player in (ALICE, BOB):
            if check_won(self.positions_of(player), self.spec):
                return player
        return None

    def is_draw(self) -> bool:
        """Board full with no winner (terminal predicate for exact search)."""
        return not self.available and self.winner() is None


def apply_move(state: GameState, position: str) -> GameState:
    """Return a new state with ``position`` played by the player to move."""
    if position not in state.spec.index:
        raise IllegalMoveError(f"unknown position {position!r} for {state.game_id}")
    if position in state.moves:
        raise IllegalMoveError(f"position {position} is already occupied")
    if state.winner() is not None:
        raise GameOverError(f"{state.winner()} has already won")
    return GameState(state.game_id, state.moves + (position,))


def completed_sets(player_positions, spec: GameSpec) -> list[tuple[str, ...]]:
    have = set(player_positions)
    return [w for w in spec.winning_sets if have.issuperset(w)]


def check_won(player_positions, spec: GameSpec) -> bool:
    have = set(player_positions)
    return any(have.issuperset(w) for w in spec.winning_sets)


def get_wins(player_positions, available, spec: GameSpec) -> set[str]:
    """Available cells that would complete a winning set for this player."""
    have = set(player_positions)
    return {a for a in available if check_won(have | {a}, spec)}


def threats(player_positions, available, spec: GameSpec) -> list[tuple[str, ...]]:
    """Winning sets one stone short whose missing cell is still available."""
    have = set(player_positions)
    out = []
    for w in spec.winning_sets:
        missing = [p for p in w if p not in have]
        if len(missing) == 1 and missing[0] in available:
            out.append(w)
    return out


def get_forks(player_positions, available, spec: GameSpec, rule: str = DEFAULT_FORK_RULE) -> set[str]:
    """Cells that leave the player with two or more threats."""
    if rule not in FORK_RULES:
        raise ValueError(f"unknown fork rule {rule!r}")
    have = set(player_positions)
    forks = set()
    for a in available:
        ts = threats(have | {a}, set(available) - {a}, spec)
        if rule == "sets":
            count = len(ts)
        else:
            count = len({next(p for p in w if p not in have and p != a) for w in ts})
        if count >= 2:
            forks.add(a)
    return forks


def has_winning_fork(last_mover_positions, available, spec: GameSpec) -> bool:
    return len(get_wins(last_mover_positions, available, spec)) >= 2


@dataclass(frozen=True)
class SolutionRecord:
    moves: frozenset
    verdict: str
    justification: dict = field(compare=False)

    def describe(self, spec: GameSpec) -> dict[str, str]:
        """Per-move text such as ``"Fork with A-D-G & G-H-I"``."""
        return {
            m: f"{self.verdict} with " + " & ".join(spec.set_name(w) for w in self.justification[m])
            for m in sorted(self.moves, key=spec.index.__getitem__)
        }


def get_solution(state: GameState, fork_rule: str = DEFAULT_FORK_RULE) -> SolutionRecord | None:
    """Win, else block a unique opponent win, else fork; ``None`` otherwise.

    An opponent with two or more immediate wins cannot be stopped, so such
    states have no solution.
    """
    spec = state.spec
    mine, theirs, avail = state.current_positions, state.opponent_positions, state.available
    if check_won(mine, spec) or check_won(theirs, spec):
        raise GameOverError("state is already won")

    wins = get_wins(mine, avail, spec)
    if wins:
        just = {a: [w for w in completed_sets(mine | {a}, spec) if a in w] for a in wins}
        return SolutionRecord(frozenset(wins), WIN, just)

    opp = get_wins(theirs, avail, spec)
    if len(opp) == 1:
        (a,) = opp
        just = {a: [w for w in completed_sets(theirs | {a}, spec) if a in w]}
        return SolutionRecord(frozenset(opp), BLOCKED, just)
    if len(opp) >= 2:
        return None

    forks = get_forks(mine, avail, spec, fork_rule)
    if forks:
        just = {a: threats(mine | {a}, avail - {a}, spec) for a in forks}
        return SolutionRecord(frozenset(forks), FORK, just)
    return None
