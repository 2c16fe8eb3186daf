"""Time pool enumeration with the numba kernels against the numpy fallback.

Run: python3 benchmarks/bench_enumerate.py [--runs 3] [--include-large]

Both backends must produce identical pools; the script checks that before
reporting. ``--include-large`` adds sTTT N=7 (16.8M splits), which takes
minutes on the numpy path.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tttbench import kernels
from tttbench.enumerator import enumerate_pool
from tttbench.topology import build_spec

CASES = [("oTTT", 5), ("dTTT", 7), ("cTTT", 7), ("sTTT", 6)]


def _time(fn, runs: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(runs):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=3)
    ap.add_argument("--include-large", action="store_true")
    args = ap.parse_args(argv)
    if not kernels.HAS_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    cases = CASES + ([("sTTT", 7)] if args.include_large else [])
    # compile once so the first timed run is not charged for it
    enumerate_pool(build_spec("oTTT"), 4, backend="numba")
    print(f"{'case':<10}{'splits':>12}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for game, n in cases:
        spec = build_spec(game)
        t_nb, p_nb = _time(lambda: enumerate_pool(spec, n, backend="numba"), args.runs)
        t_np, p_np = _time(lambda: enumerate_pool(spec, n, backend="numpy"), max(1, args.runs // 2))
        for a in ("first", "second", "verdict", "moves"):
            if not np.array_equal(getattr(p_nb, a), getattr(p_np, a)):
                raise SystemExit(f"{game} N={n}: backends disagree on {a}")
        print(f"{game + ' N=' + str(n):<10}{p_nb.splits_examined:>12,}{t_nb:>10.3f}{t_np:>10.3f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
