"""Exhaustive generation of candidate positions and sampling of questions."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from . import kernels
from .engine import ALICE, BOB, FORK_RULES, DEFAULT_FORK_RULE, VERDICTS, GameState, get_solution
from .topology import GameSpec, symmetries

log = logging.getLogger(__name__)

# Upper bound on splits handled per kernel call; keeps buffers near 32 MB.
CHUNK_SPLITS = 1 << 20


class EmptyPoolError(ValueError):
    pass


@dataclass
class CandidatePool:
    """Filtered splits for one (game, N); masks index ``spec.positions``."""

    spec: GameSpec
    n_moves: int
    first: np.ndarray
    second: np.ndarray
    verdict: np.ndarray
    moves: np.ndarray
    splits_examined: int = 0
    fork_rule: str = DEFAULT_FORK_RULE

    def __len__(self) -> int:
        return len(self.first)

    @property
    def game_id(self) -> str:
        return self.spec.game_id

    @property
    def pool_stats(self) -> dict[str, int]:
        return {v: int((self.verdict == kernels.VERDICT_CODES[v]).sum()) for v in VERDICTS}

    def occupancy(self, i: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return self.spec.labels(int(self.first[i])), self.spec.labels(int(self.second[i]))

    def state(self, i: int) -> GameState:
        alice, bob = self.occupancy(i)
        return GameState.from_occupancy(self.game_id, alice, bob)

    def solution(self, i: int):
        """Full solution record (with justifications) for entry ``i``."""
        return get_solution(self.state(i), self.fork_rule)

    def entry(self, i: int) -> dict:
        alice, bob = self.occupancy(i)
        return {
            "first": list(alice),
            "second": list(bob),
            "verdict": kernels.VERDICT_NAMES[int(self.verdict[i])],
            "moves": list(self.spec.labels(int(self.moves[i]))),
        }

    def subset(self, idx) -> CandidatePool:
        idx = np.asarray(idx, dtype=np.int64)
        return CandidatePool(
            self.spec, self.n_moves, self.first[idx], self.second[idx], self.verdict[idx],
            self.moves[idx], self.splits_examined, self.fork_rule,
        )  # fmt: skip

    def to_dict(self, entries: bool = True) -> dict:
        out = {
            "game_id": self.game_id,
            "n_moves": self.n_moves,
            "fork_rule": self.fork_rule,
            "splits_examined": self.splits_examined,
            "size": len(self),
            "pool_stats": self.pool_stats,
        }
        if entries:
            out["entries"] = [self.entry(i) for i in range(len(self))]
        return out


def combo_masks(n: int, k: int) -> np.ndarray:
    """Bitmasks of all k-subsets of range(n), in lexicographic order."""
    return np.array([sum(1 << i for i in c) for c in combinations(range(n), k)], dtype=np.int64)


def combo_indices(n: int, k: int) -> np.ndarray:
    return np.array(list(combinations(range(n), k)), dtype=np.int64).reshape(comb(n, k), k)


def split_count(total: int, n_moves: int) -> int:
    k1, k2 = (n_moves + 1) // 2, n_moves // 2
    return comb(total, k1) * comb(total - k1, k2)


def _scan(args):
    return kernels.scan_chunk(*args)


def enumerate_pool(
    spec: GameSpec,
    n_moves: int,
    *,
    jobs: int = 1,
    backend: str | None = None,
    fork_rule: str = DEFAULT_FORK_RULE,
    allow_off_schedule: bool = False,
) -> CandidatePool:
    """All unordered occupancy splits after ``n_moves`` moves that pass both filters.

    The first player holds ceil(N/2) stones and the second floor(N/2). A split
    is kept when neither side has won, the player who made move N does not
    already hold two or more immediate wins, and the player to move has a
    solution. Output order depends only on (game, N).
    """
    total = spec.total_positions
    if n_moves > total or n_moves < 0:
        raise ValueError(f"N={n_moves} is outside 0..{total}")
    if n_moves not in spec.n_schedule and not allow_off_schedule:
        raise ValueError(f"N={n_moves} is not in the {spec.game_id} schedule {spec.n_schedule}")
    if fork_rule not in FORK_RULES:
        raise ValueError(f"unknown fork rule {fork_rule!r}")
    k1, k2 = (n_moves + 1) // 2, n_moves // 2
    firsts = combo_masks(total, k1)
    rest = combo_indices(total - k1, k2)
    per_chunk = max(1, CHUNK_SPLITS // max(1, len(rest)))
    if jobs > 1:
        per_chunk = max(1, min(per_chunk, -(-len(firsts) // (4 * jobs))))
    last_is_first = n_moves % 2 == 1
    tasks = [
        (firsts[i : i + per_chunk], rest, spec.win_masks, total, last_is_first, fork_rule == "sets", backend)
        for i in range(0, len(firsts), per_chunk)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            shards = list(ex.map(_scan, tasks))
    else:
        shards = [_scan(t) for t in tasks]
    first, second, verdict, moves, examined = zip(*shards)
    pool = CandidatePool(
        spec, n_moves,
        np.concatenate(first), np.concatenate(second), np.concatenate(verdict), np.concatenate(moves),
        int(sum(examined)), fork_rule,
    )  # fmt: skip
    log.info("%s N=%d: %d splits, %d kept %s", spec.game_id, n_moves, pool.splits_examined, len(pool), pool.pool_stats)
    return pool


def interleave(alice, bob, spec: GameSpec) -> list[tuple[str, str]]:
    """Alternate label-sorted stones, Alice first."""
    a = sorted(alice, key=spec.index.__getitem__)
    b = sorted(bob, key=spec.index.__getitem__)
    if not (len(a) == len(b) or len(a) == len(b) + 1):
        raise ValueError(f"cannot alternate {len(a)} Alice and {len(b)} Bob stones")
    out = []
    for i, label in enumerate(a):
        out.append((label, ALICE))
        if i < len(b):
            out.append((b[i], BOB))
    return out


def canonical_order(pool: CandidatePool, i: int) -> list[tuple[str, str]]:
    alice, bob = pool.occupancy(i)
    return interleave(alice, bob, pool.spec)


def symmetry_reduce(pool: CandidatePool) -> CandidatePool:
    """Keep the first entry of each orbit under the board's symmetries."""
    perms = symmetries(pool.spec)
    n = pool.spec.total_positions
    bits = np.int64(1) << np.arange(n, dtype=np.int64)

    def permute(masks, perm):
        out = np.zeros_like(masks)
        for src, dst in enumerate(perm):
            out |= np.where(masks & bits[src], bits[dst], 0)
        return out

    keys = None
    for perm in perms:
        key = permute(pool.first, perm) * (np.int64(1) << np.int64(n)) + permute(pool.second, perm)
        keys = key if keys is None else np.minimum(keys, key)
    _, first_idx = np.unique(keys, return_index=True)
    return pool.subset(np.sort(first_idx))


@dataclass(frozen=True)
class SamplingConfig:
    seed: int = 0
    per_game_target: int = 103
    strategy: str = "stratified"
    dedup: str = "by-occupancy"

    def __post_init__(self):
        if self.strategy not in ("uniform", "stratified"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.dedup not in ("by-occupancy", "none"):
            raise ValueError(f"unknown dedup mode {self.dedup!r}")
        if self.per_game_target < 0:
            raise ValueError("per_game_target must be non-negative")


@dataclass
class Sample:
    """A sampled entry: which pool it came from and its row there."""

    pool: CandidatePool
    row: int
    extra: dict = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, int, int]:
        return self.pool.game_id, int(self.pool.first[self.row]), int(self.pool.second[self.row])


def _quotas(sizes: list[int], target: int) -> list[int]:
    """Split ``target`` as evenly as possible, moving surplus to classes with room."""
    quota = [0] * len(sizes)
    remaining = min(target, sum(sizes))
    while remaining:
        open_ = [i for i, s in enumerate(sizes) if quota[i] < s]
        share, extra = divmod(remaining, len(open_))
        for j, i in enumerate(open_):
            give = min(sizes[i] - quota[i], share + (1 if j < extra else 0))
            quota[i] += give
            remaining -= give
    return quota


def sample_pool(pools, config: SamplingConfig, salt: int = 0) -> list[Sample]:
    """Seeded sample of ``config.per_game_target`` entries from one game's pools.

    ``pools`` is one pool or a list of pools of the same game (one per N).
    Chosen entries come back in pool order, so a target equal to the pool size
    returns the whole pool unchanged.
    """
    if isinstance(pools, CandidatePool):
        pools = [pools]
    rows = [(p, i) for p in pools for i in range(len(p))]
    if not rows:
        raise EmptyPoolError("cannot sample from an empty pool")
    if config.dedup == "by-occupancy":
        seen, uniq = set(), []
        for p, i in rows:
            k = (p.game_id, int(p.first[i]), int(p.second[i]))
            if k not in seen:
                seen.add(k)
                uniq.append((p, i))
        rows = uniq
    target = config.per_game_target
    if target > len(rows):
        log.warning("target %d exceeds pool size %d; emitting the whole pool", target, len(rows))
        target = len(rows)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, salt]))
    if config.strategy == "uniform":
        chosen = np.sort(rng.choice(len(rows), size=target, replace=False))
    else:
        codes = np.array([int(p.verdict[i]) for p, i in rows])
        classes = [np.flatnonzero(codes == kernels.VERDICT_CODES[v]) for v in VERDICTS]
        quota = _quotas([len(c) for c in classes], target)
        picked = [rng.choice(c, size=q, replace=False) for c, q in zip(classes, quota) if q]
        chosen = np.sort(np.concatenate(picked)) if picked else np.zeros(0, dtype=np.int64)
    return [Sample(*rows[j]) for j in chosen]


def pool_report(pools) -> dict:
    """Counts per (game, verdict) and per (game, single vs multiple solutions)."""
    verdicts: dict[str, dict[str, int]] = {}
    kinds: dict[str, dict[str, int]] = {}
    sizes: dict[str, dict[str, int]] = {}
    for pool in pools:
        g = pool.game_id
        v = verdicts.setdefault(g, {k: 0 for k in VERDICTS})
        k = kinds.setdefault(g, {"single": 0, "multiple": 0})
        for name, n in pool.pool_stats.items():
            v[name] += n
        multi = int(sum((m & (m - 1)) != 0 for m in pool.moves.tolist()))
        k["multiple"] += multi
        k["single"] += len(pool) - multi
        sizes.setdefault(g, {})[str(pool.n_moves)] = len(pool)
    return {"verdicts": verdicts, "solution_counts": kinds, "pool_sizes": sizes}
