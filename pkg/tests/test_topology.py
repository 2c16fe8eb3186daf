import json
from itertools import combinations, product

import pytest

from tttbench.topology import (
    GAME_IDS,
    TopologyError,
    build_spec,
    collinear,
    coplanar,
    derive_cube_planes,
    derive_squares_5x5,
    symmetries,
)

# Independent derivations: different geometry tests than the module uses.


def _ap_triples(coords, window):
    """Triples that form an arithmetic progression inside one column window."""
    out = set()
    for a, b, c in combinations(coords, 3):
        pa, pb, pc = coords[a], coords[b], coords[c]
        for x, y, z in ((pa, pb, pc), (pa, pc, pb), (pb, pa, pc)):
            step = (y[0] - x[0], y[1] - x[1])
            if step != (0, 0) and max(abs(s) for s in step) == 1 and (z[0] - y[0], z[1] - y[1]) == step:
                cols = {x[1], y[1], z[1]}
                if any(cols <= set(range(lo, lo + 3)) for lo in window):
                    out.add(frozenset((a, b, c)))
    return out


def _cube_planes(coords):
    """4-vertex sets in one unit cube satisfying a*x + b*y + c*z = d, no 3 on a line."""
    out = set()
    for x0 in (0, 1):
        cube = [p for p, c in coords.items() if c[0] in (x0, x0 + 1)]
        for quad in combinations(cube, 4):
            pts = [coords[p] for p in quad]
            for n in product((-1, 0, 1), repeat=3):
                if n == (0, 0, 0):
                    continue
                vals = {sum(a * b for a, b in zip(n, p)) for p in pts}
                if len(vals) == 1:
                    # a line through 3 cube vertices would need equal spacing along an axis
                    lines = [
                        t for t in combinations(pts, 3)
                        if len({tuple(q - r for q, r in zip(t[1], t[0])), tuple(q - r for q, r in zip(t[2], t[1]))}) == 1
                    ]  # fmt: skip
                    if not lines:
                        out.add(frozenset(quad))
    return out


def _squares(coords):
    """4-sets whose pairwise squared distances are 4 x s and 2 x 2s, s in {1, 2}."""
    out = set()
    for quad in combinations(coords, 4):
        d = sorted((coords[a][0] - coords[b][0]) ** 2 + (coords[a][1] - coords[b][1]) ** 2 for a, b in combinations(quad, 2))
        if d[0] == d[3] and d[4] == d[5] == 2 * d[0] and d[0] in (1, 2):
            out.add(frozenset(quad))
    return out


@pytest.mark.parametrize("game,count", [("oTTT", 8), ("dTTT", 15), ("cTTT", 23), ("sTTT", 25)])
def test_winning_set_counts(game, count):
    assert build_spec(game).winning_set_count == count


def test_grid_lines_match_progression_oracle():
    o, d = build_spec("oTTT"), build_spec("dTTT")
    assert {frozenset(w) for w in o.winning_sets} == _ap_triples(o.coordinates, [0])
    assert {frozenset(w) for w in d.winning_sets} == _ap_triples(d.coordinates, [0, 2])


def test_cube_planes_match_normal_vector_oracle():
    spec = build_spec("cTTT")
    assert {frozenset(w) for w in spec.winning_sets} == _cube_planes(spec.coordinates)


def test_squares_match_distance_oracle():
    spec = build_spec("sTTT")
    assert {frozenset(w) for w in spec.winning_sets} == _squares(spec.coordinates)


def test_shared_structures():
    d = build_spec("dTTT")
    assert ("C", "F", "I") in d.winning_sets
    c = build_spec("cTTT")
    shared = {"B", "C", "F", "G"}
    assert sum(1 for w in c.winning_sets if set(w) == shared) == 1
    assert d.total_positions == 15 and c.total_positions == 12


@pytest.mark.parametrize(
    "game,labels,name",
    [
        ("oTTT", ("A", "D", "G"), "A-D-G"),
        ("oTTT", ("C", "E", "G"), "C-E-G"),
        ("cTTT", ("A", "C", "G", "E"), "A-C-G-E"),
        ("cTTT", ("A", "D", "H", "E"), "A-D-H-E"),
        ("sTTT", ("A", "B", "F", "G"), "A-B-G-F"),
        ("sTTT", ("B", "F", "H", "L"), "B-F-L-H"),
    ],
)
def test_set_names(game, labels, name):
    assert build_spec(game).set_name(labels) == name


@pytest.mark.parametrize("game,n", [("oTTT", 8), ("dTTT", 4), ("cTTT", 16), ("sTTT", 8)])
def test_symmetry_group_sizes(game, n):
    spec = build_spec(game)
    perms = symmetries(spec)
    assert len(perms) == n
    wins = {frozenset(spec.index[p] for p in w) for w in spec.winning_sets}
    for perm in perms:
        assert {frozenset(perm[i] for i in w) for w in wins} == wins


def test_masks_round_trip():
    for g in GAME_IDS:
        spec = build_spec(g)
        for w, m in zip(spec.winning_sets, spec.win_masks):
            assert spec.labels(int(m)) == w
            assert spec.mask(w) == int(m)
        assert spec.full_mask == (1 << spec.total_positions) - 1


def test_spec_json():
    d = json.loads(build_spec("sTTT").to_json())
    assert d["game_id"] == "sTTT" and len(d["winning_sets"]) == 25 and d["win_size"] == 4


def test_geometry_primitives():
    assert collinear((0, 0), (1, 1), (2, 2))
    assert not collinear((0, 0), (1, 1), (2, 1))
    assert coplanar((0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0))
    assert not coplanar((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def test_derivations_reject_bad_input():
    with pytest.raises(TopologyError):
        derive_squares_5x5({"A": (0, 0)})
    with pytest.raises(TopologyError):
        derive_cube_planes({"A": (0, 0, 0)})
    with pytest.raises(ValueError):
        build_spec("xTTT")
