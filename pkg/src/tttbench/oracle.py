"""Exact game-tree checks for emitted solutions.

Used by the ``verify`` command and the test-suite only; generation never
calls into this module. Search is negamax with alpha-beta pruning and a
transposition table over (side-to-move stones, other stones[, depth]).
Values are from the side to move: +1 forced win, -1 forced loss, 0 neither
within the horizon (a draw when the horizon is the end of the game).
"""

from __future__ import annotations

from dataclasses import dataclass

from .engine import GameOverError, GameState, check_won, get_wins
from .topology import GameSpec

DEFAULT_NODE_BUDGET = 50_000_000

_EXACT, _LOWER, _UPPER = 0, 1, 2


class SearchBudgetExceeded(RuntimeError):
    """The node budget ran out before the query was decided."""


@dataclass(frozen=True)
class ProofResult:
    game_id: str
    moves: tuple[str, ...]
    move: str
    claim: str  # "win-in-1" | "must-block" | "forced-win-after"
    outcome: bool | None  # None: inconclusive
    ply_bound: int
    nodes_expanded: int

    @property
    def status(self) -> str:
        return {True: "pass", False: "fail", None: "inconclusive"}[self.outcome]

    def to_dict(self) -> dict:
        return {
            "claim": self.claim,
            "move": self.move,
            "status": self.status,
            "ply_bound": self.ply_bound,
            "nodes_expanded": self.nodes_expanded,
        }


class Searcher:
    """One query's search context; owns its transposition table."""

    def __init__(self, spec: GameSpec, node_budget: int = DEFAULT_NODE_BUDGET, use_tt: bool = True):
        self.spec = spec
        self.full = spec.full_mask
        self.wins = [int(w) for w in spec.win_masks]
        self.node_budget = node_budget
        self.use_tt = use_tt
        self.nodes = 0
        self.tt: dict = {}

    def won(self, stones: int) -> bool:
        return any(stones & w == w for w in self.wins)

    def has_immediate_win(self, stones: int, avail: int) -> bool:
        for w in self.wins:
            r = w & ~stones
            if r & (r - 1) == 0 and r & avail:
                return True
        return False

    def negamax(self, me: int, other: int, depth: int, alpha: int = -1, beta: int = 1) -> int:
        """Value for ``me`` (to move) searching at most ``depth`` plies.

        Precondition: neither side has completed a winning set.
        """
        avail = self.full & ~(me | other)
        if avail == 0 or depth <= 0:
            return 0
        self.nodes += 1
        if self.nodes > self.node_budget:
            raise SearchBudgetExceeded(f"node budget {self.node_budget} exhausted")
        if self.has_immediate_win(me, avail):
            return 1
        if depth == 1:
            return 0
        key = (me, other, min(depth, avail.bit_count()))
        alpha0 = alpha
        if self.use_tt:
            hit = self.tt.get(key)
            if hit is not None:
                value, flag = hit
                if flag == _EXACT:
                    return value
                if flag == _LOWER:
                    alpha = max(alpha, value)
                else:
                    beta = min(beta, value)
                if alpha >= beta:
                    return value
        best = -1
        bits = avail
        while bits:
            bit = bits & -bits
            bits ^= bit
            value = -self.negamax(other, me | bit, depth - 1, -beta, -alpha)
            if value > best:
                best = value
            if best > alpha:
                alpha = best
            if alpha >= beta:
                break
        if self.use_tt:
            flag = _UPPER if best <= alpha0 else _LOWER if best >= beta else _EXACT
            self.tt[key] = (best, flag)
        return best


def _masks(state: GameState) -> tuple[int, int, int]:
    spec = state.spec
    me = spec.mask(state.current_positions)
    other = spec.mask(state.opponent_positions)
    return me, other, spec.full_mask & ~(me | other)


def _check_move(state: GameState, move: str) -> None:
    if move not in state.available:
        raise ValueError(f"{move} is not an available position")


def verify_win(state: GameState, move: str) -> ProofResult:
    """The move completes a winning set for the player to move."""
    _check_move(state, move)
    ok = check_won(state.current_positions | {move}, state.spec)
    return ProofResult(state.game_id, state.moves, move, "win-in-1", ok, 1, 1)


def verify_block(state: GameState, move: str) -> ProofResult:
    """The opponent had an immediate win and has none after ``move``."""
    _check_move(state, move)
    spec, avail = state.spec, state.available
    before = get_wins(state.opponent_positions, avail, spec)
    after = get_wins(state.opponent_positions, avail - {move}, spec)
    return ProofResult(state.game_id, state.moves, move, "must-block", bool(before) and not after, 1, 1)


def verify_forced_win(
    state: GameState, move: str, ply_bound: int = 3, node_budget: int = DEFAULT_NODE_BUDGET
) -> ProofResult:
    """The mover, after ``move``, wins within ``ply_bound`` further plies against any defence.

    A fork needs ``ply_bound=3``: the opponent replies, the mover completes a set.
    """
    if ply_bound < 3:
        raise ValueError("ply_bound must be at least 3")
    _check_move(state, move)
    spec = state.spec
    me, other, _ = _masks(state)
    me |= 1 << spec.index[move]
    search = Searcher(spec, node_budget)
    if search.won(me):
        outcome: bool | None = True
    else:
        try:
            outcome = search.negamax(other, me, ply_bound) == -1
        except SearchBudgetExceeded:
            outcome = None
    return ProofResult(state.game_id, state.moves, move, "forced-win-after", outcome, ply_bound, search.nodes)


@dataclass(frozen=True)
class ExactValue:
    value: str  # "first-player-win" | "second-player-win" | "draw"
    moves: frozenset
    nodes_expanded: int


def solve_exact(state: GameState, node_budget: int = DEFAULT_NODE_BUDGET, use_tt: bool = True) -> ExactValue:
    """Game-theoretic value of ``state`` and every value-preserving move.

    Raises :class:`SearchBudgetExceeded` when the budget runs out.
    """
    if state.winner() is not None:
        raise GameOverError("state is already won")
    spec = state.spec
    me, other, avail = _masks(state)
    search = Searcher(spec, node_budget, use_tt)
    scores = {}
    for label in spec.positions:
        bit = 1 << spec.index[label]
        if not avail & bit:
            continue
        if search.won(me | bit):
            scores[label] = 1
        else:
            scores[label] = -search.negamax(other, me | bit, spec.total_positions)
    if not scores:
        return ExactValue("draw", frozenset(), search.nodes)
    best = max(scores.values())
    mover_first = state.next_player == "Alice"
    if best == 0:
        value = "draw"
    elif (best == 1) == mover_first:
        value = "first-player-win"
    else:
        value = "second-player-win"
    return ExactValue(value, frozenset(m for m, s in scores.items() if s == best), search.nodes)


def check_solution(state: GameState, moves, verdict: str, ply_bound: int = 3,
                   node_budget: int = DEFAULT_NODE_BUDGET) -> dict:
    """Verdict-appropriate oracle check for one question.

    Win claims also require that the claimed set equals every move passing
    the win-in-1 check; Blocked claims require a single move.
    """
    moves = sorted(moves)
    if verdict == "Win":
        proofs = [verify_win(state, m) for m in state.available]
        passing = {p.move for p in proofs if p.outcome}
        results = [p for p in proofs if p.move in moves]
        extra = [] if passing == set(moves) else [f"win-in-1 set {sorted(passing)} != claimed {moves}"]
    elif verdict == "Blocked":
        results = [verify_block(state, m) for m in moves]
        extra = [] if len(moves) == 1 else [f"blocked verdict with {len(moves)} moves"]
    elif verdict == "Fork":
        results = [verify_forced_win(state, m, ply_bound, node_budget) for m in moves]
        extra = []
    else:
        raise ValueError(f"unknown verdict {verdict!r}")
    statuses = [r.status for r in results]
    if extra or "fail" in statuses:
        status = "fail"
    elif "inconclusive" in statuses:
        status = "inconclusive"
    else:
        status = "pass"
    return {
        "status": status,
        "checks": [r.to_dict() for r in results],
        "problems": extra,
        "nodes_expanded": sum(r.nodes_expanded for r in results),
    }
