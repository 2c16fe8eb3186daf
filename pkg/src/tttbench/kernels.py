"""Bitmask kernels for scanning occupancy splits.

Two interchangeable backends implement :func:`scan_chunk`:

* ``numba``: a scalar ``@njit`` loop, used when numba imports and the
  environment variable ``TTTBENCH_DISABLE_NUMBA`` is unset or ``0``;
* ``numpy``: the same rule vectorised over a chunk of splits.

Positions are bits of an int64 (bit ``i`` is ``spec.positions[i]``).
Verdict codes: 0 none, 1 Win, 2 Blocked, 3 Fork.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

NONE, WIN, BLOCKED, FORK = 0, 1, 2, 3
VERDICT_CODES = {"Win": WIN, "Blocked": BLOCKED, "Fork": FORK}
VERDICT_NAMES = {v: k for k, v in VERDICT_CODES.items()}


def numba_disabled() -> bool:
    return os.environ.get("TTTBENCH_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")


def default_backend() -> str:
    return "numba" if HAS_NUMBA and not numba_disabled() else "numpy"


def optional_njit(*args, **kwargs):
    def decorator(func):
        if HAS_NUMBA:
            return njit(*args, **kwargs)(func)
        return func

    return decorator


def cell_tables(win_masks: np.ndarray, n_positions: int) -> tuple[np.ndarray, np.ndarray]:
    """For each cell, the winning-set masks that contain it (padded with 0)."""
    per_cell = [[int(w) for w in win_masks if int(w) >> p & 1] for p in range(n_positions)]
    width = max(len(c) for c in per_cell)
    table = np.zeros((n_positions, width), dtype=np.int64)
    counts = np.zeros(n_positions, dtype=np.int64)
    for p, ws in enumerate(per_cell):
        table[p, : len(ws)] = ws
        counts[p] = len(ws)
    return table, counts


# ---------------------------------------------------------------------------
# numba backend


@optional_njit(cache=True)
def _won(m, win_masks):
    for w in win_masks:
        if m & w == w:
            return True
    return False


@optional_njit(cache=True)
def _wins_mask(p, avail, win_masks):
    out = 0
    for w in win_masks:
        r = w & ~p
        if r != 0 and r & (r - 1) == 0 and r & avail != 0:
            out |= r
    return out


@optional_njit(cache=True)
def _forks_mask(p, avail, cell_sets, cell_counts, n_positions, count_sets):
    # Only valid when p has no immediate win: every threat then contains the new cell.
    out = 0
    for a in range(n_positions):
        bit = 1 << a
        if avail & bit == 0:
            continue
        pn = p | bit
        an = avail & ~bit
        n = 0
        cells = 0
        for k in range(cell_counts[a]):
            r = cell_sets[a, k] & ~pn
            if r != 0 and r & (r - 1) == 0 and r & an != 0:
                n += 1
                cells |= r
        if count_sets:
            if n >= 2:
                out |= bit
        elif cells & (cells - 1) != 0:
            out |= bit
    return out


@optional_njit(cache=True)
def _solve(cur, last, avail, win_masks, cell_sets, cell_counts, n_positions, count_sets):
    """(verdict, moves) for the player to move; ``last`` made the previous move."""
    cw = _wins_mask(cur, avail, win_masks)
    if cw != 0:
        return 1, cw
    ow = _wins_mask(last, avail, win_masks)
    if ow != 0:
        if ow & (ow - 1) == 0:
            return 2, ow
        return 0, 0
    fm = _forks_mask(cur, avail, cell_sets, cell_counts, n_positions, count_sets)
    if fm != 0:
        return 3, fm
    return 0, 0


@optional_njit(cache=True)
def _scan_numba(
    first_masks, rest_combos, win_masks, cell_sets, cell_counts, n_positions, last_is_first, count_sets,
    out_first, out_second, out_verdict, out_moves,
):  # fmt: skip
    full = (1 << n_positions) - 1
    m2, k2 = rest_combos.shape
    n_out = 0
    examined = 0
    for i in range(first_masks.shape[0]):
        f = first_masks[i]
        examined += m2
        if _won(f, win_masks):
            continue
        rem = np.empty(n_positions, dtype=np.int64)
        j = 0
        for p in range(n_positions):
            if f >> p & 1 == 0:
                rem[j] = p
                j += 1
        for r in range(m2):
            s = 0
            for q in range(k2):
                s |= 1 << rem[rest_combos[r, q]]
            if _won(s, win_masks):
                continue
            avail = full & ~(f | s)
            if last_is_first:
                last, cur = f, s
            else:
                last, cur = s, f
            lw = _wins_mask(last, avail, win_masks)
            if lw & (lw - 1) != 0:
                continue
            v, mv = _solve(cur, last, avail, win_masks, cell_sets, cell_counts, n_positions, count_sets)
            if v == 0:
                continue
            out_first[n_out] = f
            out_second[n_out] = s
            out_verdict[n_out] = v
            out_moves[n_out] = mv
            n_out += 1
    return n_out, examined


# ---------------------------------------------------------------------------
# numpy backend


def _single_bit(r: np.ndarray) -> np.ndarray:
    return (r != 0) & ((r & (r - 1)) == 0)


def _won_np(m: np.ndarray, win_masks: np.ndarray) -> np.ndarray:
    return ((m[:, None] & win_masks[None, :]) == win_masks[None, :]).any(axis=1)


def _wins_mask_np(p: np.ndarray, avail: np.ndarray, win_masks: np.ndarray) -> np.ndarray:
    r = win_masks[None, :] & ~p[:, None]
    hit = _single_bit(r) & ((r & avail[:, None]) != 0)
    return np.bitwise_or.reduce(np.where(hit, r, 0), axis=1)


def _forks_mask_np(p, avail, cell_sets, cell_counts, n_positions, count_sets):
    out = np.zeros_like(p)
    for a in range(n_positions):
        bit = np.int64(1) << np.int64(a)
        rows = (avail & bit) != 0
        if not rows.any() or cell_counts[a] == 0:
            continue
        pn = p[rows] | bit
        an = avail[rows] & ~bit
        ws = cell_sets[a, : cell_counts[a]]
        r = ws[None, :] & ~pn[:, None]
        hit = _single_bit(r) & ((r & an[:, None]) != 0)
        if count_sets:
            is_fork = hit.sum(axis=1) >= 2
        else:
            cells = np.bitwise_or.reduce(np.where(hit, r, 0), axis=1)
            is_fork = (cells & (cells - 1)) != 0
        out[rows] |= np.where(is_fork, bit, 0)
    return out


def solve_np(cur, last, avail, win_masks, cell_sets, cell_counts, n_positions, count_sets):
    """Vectorised :func:`_solve`; returns (verdicts, moves) arrays."""
    verdict = np.zeros(cur.shape, dtype=np.int8)
    moves = np.zeros_like(cur)
    cw = _wins_mask_np(cur, avail, win_masks)
    ow = _wins_mask_np(last, avail, win_masks)
    win = cw != 0
    block = ~win & _single_bit(ow)
    verdict[win], moves[win] = WIN, cw[win]
    verdict[block], moves[block] = BLOCKED, ow[block]
    rest = ~win & (ow == 0)
    if rest.any():
        fm = _forks_mask_np(cur[rest], avail[rest], cell_sets, cell_counts, n_positions, count_sets)
        idx = np.flatnonzero(rest)[fm != 0]
        verdict[idx], moves[idx] = FORK, fm[fm != 0]
    return verdict, moves


def _scan_numpy(first_masks, rest_combos, win_masks, cell_sets, cell_counts, n_positions, last_is_first, count_sets):
    m2 = rest_combos.shape[0]
    examined = first_masks.shape[0] * m2
    first_masks = first_masks[~_won_np(first_masks, win_masks)]
    empty = np.zeros(0, dtype=np.int64)
    if first_masks.size == 0 or m2 == 0:
        return empty, empty, empty.astype(np.int8), empty, examined
    bits = (first_masks[:, None] >> np.arange(n_positions, dtype=np.int64)[None, :]) & 1
    # positions not taken by the first player, ascending, one row per first mask
    rem = np.argsort(bits, axis=1, kind="stable")[:, : n_positions - int(bits[0].sum())]
    chosen = rem[:, rest_combos] if rest_combos.shape[1] else np.zeros((len(rem), m2, 0), dtype=np.int64)
    second = (np.int64(1) << chosen.astype(np.int64)).sum(axis=2, dtype=np.int64)
    first = np.repeat(first_masks, m2)
    second = second.reshape(-1)
    keep = ~_won_np(second, win_masks)
    first, second = first[keep], second[keep]
    full = np.int64((1 << n_positions) - 1)
    avail = full & ~(first | second)
    last, cur = (first, second) if last_is_first else (second, first)
    lw = _wins_mask_np(last, avail, win_masks)
    keep = (lw & (lw - 1)) == 0
    first, second, cur, last, avail = first[keep], second[keep], cur[keep], last[keep], avail[keep]
    verdict, moves = solve_np(cur, last, avail, win_masks, cell_sets, cell_counts, n_positions, count_sets)
    keep = verdict != NONE
    return first[keep], second[keep], verdict[keep], moves[keep], examined


# ---------------------------------------------------------------------------


def scan_chunk(
    first_masks: np.ndarray,
    rest_combos: np.ndarray,
    win_masks: np.ndarray,
    n_positions: int,
    last_is_first: bool,
    count_sets: bool = False,
    backend: str | None = None,
):
    """Scan every split whose first-player stones are one of ``first_masks``.

    ``rest_combos`` holds index combinations into the positions the first
    player left free. Splits where either side has won, or where the player
    who moved last already has two or more immediate wins, are dropped; the
    rest get a solution for the player to move and are kept if it exists.

    Returns ``(first, second, verdict, moves, examined)``.
    """
    backend = backend or default_backend()
    cell_sets, cell_counts = cell_tables(win_masks, n_positions)
    first_masks = np.ascontiguousarray(first_masks, dtype=np.int64)
    rest_combos = np.ascontiguousarray(rest_combos, dtype=np.int64)
    if backend == "numpy":
        return _scan_numpy(
            first_masks, rest_combos, win_masks, cell_sets, cell_counts, n_positions, last_is_first, count_sets
        )
    if backend != "numba":
        raise ValueError(f"unknown backend {backend!r}")
    size = first_masks.shape[0] * rest_combos.shape[0]
    out_first = np.empty(size, dtype=np.int64)
    out_second = np.empty(size, dtype=np.int64)
    out_verdict = np.empty(size, dtype=np.int8)
    out_moves = np.empty(size, dtype=np.int64)
    n, examined = _scan_numba(
        first_masks, rest_combos, win_masks, cell_sets, cell_counts, n_positions, last_is_first, count_sets,
        out_first, out_second, out_verdict, out_moves,
    )  # fmt: skip
    return out_first[:n].copy(), out_second[:n].copy(), out_verdict[:n].copy(), out_moves[:n].copy(), int(examined)
