import json
import logging
from math import comb

import numpy as np
import pytest

from tttbench.engine import ALICE, BOB, GameState, apply_move, check_won, has_winning_fork
from tttbench.enumerator import (
    CandidatePool,
    EmptyPoolError,
    SamplingConfig,
    _quotas,
    canonical_order,
    enumerate_pool,
    interleave,
    pool_report,
    sample_pool,
    split_count,
    symmetry_reduce,
)
from tttbench.topology import GAME_IDS, build_spec


def test_split_counts():
    assert split_count(25, 7) == comb(25, 4) * comb(21, 3) == 16_824_500
    assert split_count(9, 4) == comb(9, 2) * comb(7, 2)


@pytest.mark.parametrize("game,n", [("oTTT", 4), ("oTTT", 5), ("dTTT", 6), ("cTTT", 6)])
def test_iteration_count(game, n, pool):
    spec = build_spec(game)
    assert pool(game, n).splits_examined == split_count(spec.total_positions, n)


def test_worked_example_in_pool(pool):
    p = pool("oTTT", 4)
    spec = p.spec
    rows = np.flatnonzero((p.first == spec.mask("AH")) & (p.second == spec.mask("BC")))
    assert len(rows) == 1
    e = p.entry(int(rows[0]))
    assert e == {"first": ["A", "H"], "second": ["B", "C"], "verdict": "Fork", "moves": ["G", "I"]}


def test_empty_board_pool_is_empty():
    p = enumerate_pool(build_spec("oTTT"), 0, allow_off_schedule=True)
    assert len(p) == 0 and p.splits_examined == 1


def test_schedule_enforced():
    with pytest.raises(ValueError):
        enumerate_pool(build_spec("oTTT"), 3)
    with pytest.raises(ValueError):
        enumerate_pool(build_spec("oTTT"), 10, allow_off_schedule=True)


@pytest.mark.parametrize("game,n", [("oTTT", 5), ("dTTT", 7), ("cTTT", 7)])
def test_filter_soundness(game, n, pool):
    p = pool(game, n)
    spec = p.spec
    for i in range(0, len(p), max(1, len(p) // 500)):
        s = p.state(i)
        assert not check_won(s.positions_of(ALICE), spec) and not check_won(s.positions_of(BOB), spec)
        assert not has_winning_fork(s.positions_of(s.last_player), s.available, spec)


def test_canonical_order_example():
    spec = build_spec("oTTT")
    assert interleave({"H", "A"}, {"C", "B"}, spec) == [("A", ALICE), ("B", BOB), ("H", ALICE), ("C", BOB)]
    assert interleave({"E"}, set(), spec) == [("E", ALICE)]


def test_canonical_order_round_trip(pool):
    p = pool("dTTT", 7)
    rng = np.random.default_rng(11)
    for i in rng.choice(len(p), size=1000, replace=False):
        seq = canonical_order(p, int(i))
        s = GameState("dTTT")
        for label, who in seq:
            assert s.next_player == who
            s = apply_move(s, label)
        alice, bob = p.occupancy(int(i))
        assert s.positions_of(ALICE) == set(alice) and s.positions_of(BOB) == set(bob)


def test_determinism_and_parallel_merge(pool):
    spec = build_spec("dTTT")
    a = pool("dTTT", 6)
    b = enumerate_pool(spec, 6, jobs=2)
    for f in ("first", "second", "verdict", "moves"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_pool_json(pool):
    d = json.loads(json.dumps(pool("oTTT", 5).to_dict()))
    assert d["size"] == len(d["entries"]) == 624
    assert d["pool_stats"] == {"Win": 324, "Blocked": 268, "Fork": 32}


def test_pool_report_counts(pool):
    p = pool("oTTT", 4)
    idx = [i for i in range(len(p)) if p.verdict[i] == 1][:3] + [i for i in range(len(p)) if p.verdict[i] == 3][:2]
    rep = pool_report([p.subset(idx)])
    assert rep["verdicts"]["oTTT"] == {"Win": 3, "Blocked": 0, "Fork": 2}
    row = int(np.flatnonzero((p.first == p.spec.mask("AH")) & (p.second == p.spec.mask("BC")))[0])
    rep = pool_report([p.subset([row])])
    assert rep["solution_counts"]["oTTT"] == {"single": 0, "multiple": 1}


def test_every_class_present_at_game_level(pool):
    for g in GAME_IDS:
        if g == "sTTT":
            continue  # covered by the acceptance run
        rep = pool_report([pool(g, n) for n in build_spec(g).n_schedule])
        assert all(v > 0 for v in rep["verdicts"][g].values()), g


def test_sampling_determinism(pool):
    pools = [pool("dTTT", 6), pool("dTTT", 7)]
    cfg = SamplingConfig(seed=5, per_game_target=103)
    a = [s.key for s in sample_pool(pools, cfg, salt=1)]
    b = [s.key for s in sample_pool(pools, cfg, salt=1)]
    c = [s.key for s in sample_pool(pools, SamplingConfig(seed=6, per_game_target=103), salt=1)]
    assert a == b and a != c
    assert len(a) == len(set(a)) == 103


def test_stratified_balances_classes(pool):
    samples = sample_pool([pool("oTTT", 4), pool("oTTT", 5)], SamplingConfig(per_game_target=99))
    counts = np.bincount([int(s.pool.verdict[s.row]) for s in samples], minlength=4)
    assert counts[1:].tolist() == [33, 33, 33]


def test_stratified_redistributes_empty_class(pool):
    # cTTT N=5 holds only Blocked entries
    samples = sample_pool(pool("cTTT", 5), SamplingConfig(per_game_target=40))
    assert len(samples) == 40 and {int(s.pool.verdict[s.row]) for s in samples} == {2}


def test_uniform_and_whole_pool(pool):
    p = pool("oTTT", 5)
    whole = sample_pool(p, SamplingConfig(per_game_target=len(p), strategy="uniform"))
    assert [s.row for s in whole] == list(range(len(p)))


def test_target_above_pool_warns(pool, caplog):
    p = pool("oTTT", 5)
    with caplog.at_level(logging.WARNING):
        out = sample_pool(p, SamplingConfig(per_game_target=10_000))
    assert len(out) == len(p) and "exceeds pool size" in caplog.text


def test_empty_pool_error(pool):
    p = pool("oTTT", 5)
    with pytest.raises(EmptyPoolError):
        sample_pool(p.subset([]), SamplingConfig())


def test_dedup_across_pools(pool):
    p = pool("oTTT", 5)
    twice = [p, p]
    assert len(sample_pool(twice, SamplingConfig(per_game_target=10_000))) == len(p)
    assert len(sample_pool(twice, SamplingConfig(per_game_target=10_000, dedup="none"))) == 2 * len(p)


def test_quotas():
    assert _quotas([10, 10, 10], 9) == [3, 3, 3]
    assert _quotas([0, 10, 10], 9) == [0, 5, 4]
    assert _quotas([1, 100, 100], 10) == [1, 5, 4]
    assert _quotas([2, 2, 2], 100) == [2, 2, 2]


def test_sampling_config_validation():
    with pytest.raises(ValueError):
        SamplingConfig(strategy="greedy")
    with pytest.raises(ValueError):
        SamplingConfig(dedup="fuzzy")


def test_symmetry_reduce(pool):
    p = pool("oTTT", 4)
    r = symmetry_reduce(p)
    assert 0 < len(r) < len(p)
    assert isinstance(r, CandidatePool)
    assert symmetry_reduce(r).first.tolist() == r.first.tolist()
