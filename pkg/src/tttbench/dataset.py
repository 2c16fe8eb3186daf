"""Question rendering and the JSONL benchmark file.

Each line of a dataset file is one JSON object with these keys, in order:

``schema_version``  integer, currently 1
``item_id``         ``{game}-N{n}-{occupancy hash}-{index}``
``game_id``         oTTT | dTTT | cTTT | sTTT
``n_moves``         number of stones on the board
``next_player``     Alice | Bob
``moves``           ``[[label, player], ...]`` in play order
``question``        full prompt text
``solutions``       next-best moves, label order
``verdict``         Win | Blocked | Fork
``justification``   ``{move: "Fork with A-D-G & G-H-I", ...}``
``generator_metadata``  seed, version, preamble variant, suffix, fork rule

Unknown keys are kept and written back after the known ones. Loading
re-renders the question and replays the position through the engine; any
difference is an error naming the item.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .engine import ALICE, BOB, DEFAULT_FORK_RULE, GameState, SolutionRecord, get_solution
from .topology import GAME_IDS, GameSpec, build_spec
from .templates import DEFAULT_SUFFIX, NARRATION, PREAMBLES, QUESTION

SCHEMA_VERSION = 1
_KEYS = (
    "schema_version", "item_id", "game_id", "n_moves", "next_player", "moves", "question",
    "solutions", "verdict", "justification", "generator_metadata",
)  # fmt: skip


class DatasetError(ValueError):
    pass


class ReplayMismatchError(DatasetError):
    def __init__(self, item_id: str, expected, actual):
        super().__init__(f"item {item_id}: stored {expected} but engine replay gives {actual}")
        self.item_id = item_id
        self.expected = expected
        self.actual = actual


def _labels(moves) -> list[str]:
    return [m[0] if isinstance(m, (tuple, list)) else m for m in moves]


def _check_players(moves) -> None:
    for i, m in enumerate(moves):
        if isinstance(m, (tuple, list)):
            want = ALICE if i % 2 == 0 else BOB
            if m[1] != want:
                raise DatasetError(f"move {i + 1} is by {m[1]}, expected {want}: moves must alternate from Alice")


def render_question(game, moves, suffix: str | None = DEFAULT_SUFFIX, variant: str = "prompt") -> str:
    """Preamble, move narrative, the asked-player sentence, then ``suffix``.

    ``moves`` is a list of labels or ``(label, player)`` pairs in play order.
    """
    spec = game if isinstance(game, GameSpec) else build_spec(game)
    _check_players(moves)
    labels = _labels(moves)
    for label in labels:
        if label not in spec.index:
            raise DatasetError(f"unknown position {label!r} for {spec.game_id}")
    first, alice, bob = NARRATION[spec.game_id]
    parts = [PREAMBLES[variant][spec.game_id]]
    for i, label in enumerate(labels):
        parts.append((first if i == 0 else alice if i % 2 == 0 else bob).format(label))
    parts.append(QUESTION.format(ALICE if len(labels) % 2 == 0 else BOB))
    if suffix:
        parts.append(suffix)
    return " ".join(parts)


def occupancy_hash(state: GameState) -> str:
    spec = state.spec
    key = "|".join(
        ",".join(sorted(state.positions_of(p), key=spec.index.__getitem__)) for p in (ALICE, BOB)
    )
    return hashlib.sha1(f"{state.game_id}:{key}".encode()).hexdigest()[:10]


@dataclass
class BenchmarkItem:
    item_id: str
    game_id: str
    n_moves: int
    next_player: str
    moves: list
    question: str
    solutions: list
    verdict: str
    justification: dict
    generator_metadata: dict
    schema_version: int = SCHEMA_VERSION
    extra: dict = field(default_factory=dict)

    @property
    def state(self) -> GameState:
        return GameState(self.game_id, tuple(_labels(self.moves)))

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in _KEYS}
        out["moves"] = [list(m) for m in self.moves]
        out.update(self.extra)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> BenchmarkItem:
        missing = [k for k in _KEYS if k not in d]
        if missing:
            raise DatasetError(f"missing fields {missing}")
        known = {k: d[k] for k in _KEYS}
        known["moves"] = [tuple(m) for m in known["moves"]]
        return cls(**known, extra={k: v for k, v in d.items() if k not in _KEYS})


def make_item(
    state: GameState,
    solution: SolutionRecord | None = None,
    *,
    index: int = 0,
    suffix: str | None = DEFAULT_SUFFIX,
    variant: str = "prompt",
    fork_rule: str = DEFAULT_FORK_RULE,
    metadata: dict | None = None,
) -> BenchmarkItem:
    solution = solution or get_solution(state, fork_rule)
    if solution is None:
        raise DatasetError(f"{state.game_id} position {state.moves} has no solution")
    spec = state.spec
    meta = {"version": __version__, "preamble": variant, "suffix": suffix or "", "fork_rule": fork_rule}
    meta.update(metadata or {})
    return BenchmarkItem(
        item_id=f"{state.game_id}-N{state.n_moves}-{occupancy_hash(state)}-{index:04d}",
        game_id=state.game_id,
        n_moves=state.n_moves,
        next_player=state.next_player,
        moves=[tuple(m) for m in state.history],
        question=render_question(spec, state.history, suffix, variant),
        solutions=sorted(solution.moves, key=spec.index.__getitem__),
        verdict=solution.verdict,
        justification=solution.describe(spec),
        generator_metadata=meta,
    )


def validate_item(item: BenchmarkItem) -> None:
    """Check every invariant, including the engine replay; raise on failure."""
    if item.schema_version != SCHEMA_VERSION:
        raise DatasetError(f"item {item.item_id}: unsupported schema_version {item.schema_version}")
    if item.game_id not in GAME_IDS:
        raise DatasetError(f"item {item.item_id}: unknown game {item.game_id!r}")
    try:
        _check_players(item.moves)
        state = item.state
    except ValueError as exc:
        raise DatasetError(f"item {item.item_id}: {exc}") from None
    spec = state.spec
    if item.n_moves != state.n_moves or item.next_player != state.next_player:
        raise DatasetError(f"item {item.item_id}: n_moves/next_player disagree with the move list")
    if not item.solutions or any(s not in spec.index for s in item.solutions):
        raise DatasetError(f"item {item.item_id}: solutions must be non-empty labels of {item.game_id}")
    meta = item.generator_metadata
    variant = meta.get("preamble", "prompt")
    if variant not in PREAMBLES:
        raise DatasetError(f"item {item.item_id}: unknown preamble variant {variant!r}")
    expected_q = render_question(spec, item.moves, meta.get("suffix", DEFAULT_SUFFIX), variant)
    if item.question != expected_q:
        raise DatasetError(f"item {item.item_id}: question text does not match its move list")
    try:
        sol = get_solution(state, meta.get("fork_rule", DEFAULT_FORK_RULE))
    except ValueError as exc:
        raise DatasetError(f"item {item.item_id}: {exc}") from None
    actual = (None, None) if sol is None else (sorted(sol.moves, key=spec.index.__getitem__), sol.verdict)
    if actual != (list(item.solutions), item.verdict):
        raise ReplayMismatchError(item.item_id, (list(item.solutions), item.verdict), actual)
    if sol.describe(spec) != item.justification:
        raise ReplayMismatchError(item.item_id, item.justification, sol.describe(spec))


def dumps_item(item: BenchmarkItem) -> str:
    return json.dumps(item.to_dict(), ensure_ascii=False)


def emit_dataset(items, path) -> int:
    """Validate all items, then write them as JSONL in one atomic replace."""
    items = list(items)
    for item in items:
        validate_item(item)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            for item in items:
                fh.write(dumps_item(item) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(items)


def load_dataset(path, validate: bool = True) -> list[BenchmarkItem]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                item = BenchmarkItem.from_dict(json.loads(line))
            except (json.JSONDecodeError, DatasetError, TypeError) as exc:
                raise DatasetError(f"{path}:{lineno}: malformed item ({exc})") from None
            if validate:
                validate_item(item)
            items.append(item)
    return items


def render_board_text(state: GameState) -> str:
    """Fixed-width diagram: ○ Alice, ● Bob, the label for an empty point."""
    spec = state.spec
    alice, bob = state.positions_of(ALICE), state.positions_of(BOB)

    def cell(p):
        return "○" if p in alice else "●" if p in bob else p

    def mark(p):
        return "○" if p in alice else "●" if p in bob else "·"

    if spec.game_id == "cTTT":
        lines = []
        for name, x0 in (("cube 1", 0), ("cube 2", 1)):
            lines.append(f"{name}:")
            for face, z in (("top", 1), ("bottom", 0)):
                verts = [p for p in spec.positions if spec.coordinates[p][2] == z and spec.coordinates[p][0] in (x0, x0 + 1)]
                lines.append(f"  {face:<6} " + " ".join(p + mark(p) for p in verts))
        return "\n".join(lines)
    rows = max(c[0] for c in spec.coordinates.values()) + 1
    cols = max(c[1] for c in spec.coordinates.values()) + 1
    at = {c: p for p, c in spec.coordinates.items()}
    return "\n".join(" ".join(cell(at[(r, c)]) for c in range(cols)) for r in range(rows))
