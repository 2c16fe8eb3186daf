"""Board definitions for the four games.

Every board is a set of single-letter positions with exact integer
coordinates. Winning sets are derived from the coordinates with integer
geometry (collinear triples inside a 3x3 grid, coplanar quadruples inside a
unit cube, unit and diagonal squares on the 5x5 lattice) and stored in a
canonical order.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations, permutations, product

import numpy as np

from .templates import PREAMBLES

GAME_IDS = ("oTTT", "dTTT", "cTTT", "sTTT")

N_SCHEDULE = {
    "oTTT": (4, 5),
    "dTTT": (6, 7),
    "cTTT": (5, 6, 7),
    "sTTT": (6, 7),
}

Coord = tuple[int, ...]


class TopologyError(ValueError):
    """Raised for malformed board geometry."""


@dataclass(frozen=True)
class GameSpec:
    game_id: str
    positions: tuple[str, ...]
    winning_sets: tuple[tuple[str, ...], ...]
    win_size: int
    coordinates: dict[str, Coord] = field(hash=False, compare=False)
    n_schedule: tuple[int, ...]
    rules_text: str

    @property
    def total_positions(self) -> int:
        return len(self.positions)

    @property
    def winning_set_count(self) -> int:
        return len(self.winning_sets)

    @cached_property
    def index(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.positions)}

    @cached_property
    def win_masks(self) -> np.ndarray:
        """Winning sets as int64 bitmasks (bit i = ``positions[i]``)."""
        return np.array([self.mask(w) for w in self.winning_sets], dtype=np.int64)

    @cached_property
    def full_mask(self) -> int:
        return (1 << len(self.positions)) - 1

    def mask(self, labels) -> int:
        m = 0
        for label in labels:
            try:
                m |= 1 << self.index[label]
            except KeyError:
                raise ValueError(f"unknown position {label!r} for {self.game_id}") from None
        return m

    def labels(self, mask: int) -> tuple[str, ...]:
        return tuple(p for i, p in enumerate(self.positions) if mask >> i & 1)

    def set_name(self, wset) -> str:
        """Human-readable winning set, e.g. ``A-D-G`` or ``A-C-G-E``.

        Lines are listed end to end; quadrilaterals are walked around their
        perimeter starting at the lowest label.
        """
        pts = sorted(wset, key=self.index.__getitem__)
        if len(pts) == 4:
            start = pts[0]
            far = max(pts[1:], key=lambda p: _dist2(self.coordinates[start], self.coordinates[p]))
            a, b = [p for p in pts[1:] if p != far]
            pts = [start, a, far, b]
        else:
            pts = sorted(pts, key=lambda p: self.coordinates[p])
        return "-".join(pts)

    def to_dict(self) -> dict:
        return {
            "game_id": self.game_id,
            "positions": list(self.positions),
            "coordinates": {k: list(v) for k, v in self.coordinates.items()},
            "win_size": self.win_size,
            "winning_sets": [list(w) for w in self.winning_sets],
            "n_schedule": list(self.n_schedule),
            "rules_text": self.rules_text,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


def _dist2(a: Coord, b: Coord) -> int:
    return sum((x - y) ** 2 for x, y in zip(a, b))


def _sub(a: Coord, b: Coord) -> Coord:
    return tuple(x - y for x, y in zip(a, b))


def _cross(u: Coord, v: Coord) -> Coord:
    if len(u) == 2:
        return (u[0] * v[1] - u[1] * v[0],)
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def collinear(a: Coord, b: Coord, c: Coord) -> bool:
    return not any(_cross(_sub(b, a), _sub(c, a)))


def coplanar(a: Coord, b: Coord, c: Coord, d: Coord) -> bool:
    u, v, w = _sub(b, a), _sub(c, a), _sub(d, a)
    n = _cross(u, v)
    return sum(x * y for x, y in zip(n, w)) == 0


def canonical_sets(sets, order: dict[str, int]) -> tuple[tuple[str, ...], ...]:
    """Sort members by position order, drop duplicates, sort the collection."""
    uniq = {tuple(sorted(s, key=order.__getitem__)) for s in sets}
    return tuple(sorted(uniq, key=lambda s: [order[p] for p in s]))


def derive_grid_lines(coords: dict[str, Coord], grids) -> list[frozenset[str]]:
    """All collinear triples inside each 3x3 grid (rows, columns, diagonals)."""
    lines = []
    for grid in grids:
        if len(grid) != 9:
            raise TopologyError("a grid must have 9 points")
        for trio in combinations(sorted(grid), 3):
            if collinear(*(coords[p] for p in trio)):
                lines.append(frozenset(trio))
    return lines


def _unit_cube(points: dict[str, Coord]) -> bool:
    if len(points) != 8:
        return False
    axes = list(zip(*points.values()))
    lo = [min(a) for a in axes]
    corners = {tuple(l + d for l, d in zip(lo, delta)) for delta in product((0, 1), repeat=3)}
    return set(points.values()) == corners


def derive_cube_planes(coords: dict[str, Coord]) -> list[frozenset[str]]:
    """Coplanar 4-vertex subsets of each of two unit cubes sharing a face.

    Cube 1 spans x in {0, 1} and cube 2 spans x in {1, 2}. Each cube yields its
    6 faces and 6 diagonal rectangles; the shared face is returned once.
    """
    if len(coords) != 12 or any(len(c) != 3 for c in coords.values()):
        raise TopologyError("expected 12 three-dimensional vertices")
    if sorted({c[0] for c in coords.values()}) != [0, 1, 2]:
        raise TopologyError("cube vertices must have x in {0, 1, 2}")
    planes: set[frozenset[str]] = set()
    for x0 in (0, 1):
        cube = {p: c for p, c in coords.items() if c[0] in (x0, x0 + 1)}
        if not _unit_cube(cube):
            raise TopologyError(f"vertices with x in {{{x0}, {x0 + 1}}} are not a unit cube")
        for quad in combinations(sorted(cube), 4):
            pts = [cube[p] for p in quad]
            if not coplanar(*pts):
                continue
            if any(collinear(*tri) for tri in combinations(pts, 3)):
                continue
            planes.add(frozenset(quad))
    return sorted(planes, key=sorted)


def derive_squares_5x5(coords: dict[str, Coord]) -> list[frozenset[str]]:
    """Unit squares (16) and side-sqrt(2) diagonal squares (9) on a 5x5 lattice."""
    at = {c: p for p, c in coords.items()}
    if len(coords) != 25 or set(at) != set(product(range(5), repeat=2)):
        raise TopologyError("expected the 25 points of a 5x5 lattice")
    squares = []
    for r, c in product(range(4), repeat=2):
        squares.append(frozenset(at[(r + dr, c + dc)] for dr, dc in product((0, 1), repeat=2)))
    for r, c in product(range(1, 4), repeat=2):
        squares.append(frozenset(at[p] for p in ((r - 1, c), (r, c - 1), (r, c + 1), (r + 1, c))))
    return squares


def _grid_coords(labels: str, cols: int) -> dict[str, Coord]:
    return {p: divmod(i, cols) for i, p in enumerate(labels)}


_CUBE_COORDS: dict[str, Coord] = {
    # top face z=1, bottom z=0; cube 1 at x in {0,1}, cube 2 at x in {1,2}
    "A": (0, 0, 1), "B": (1, 0, 1), "C": (1, 1, 1), "D": (0, 1, 1),
    "E": (0, 0, 0), "F": (1, 0, 0), "G": (1, 1, 0), "H": (0, 1, 0),
    "I": (2, 0, 1), "J": (2, 1, 1), "K": (2, 0, 0), "L": (2, 1, 0),
}  # fmt: skip

_DTTT_LAYOUT = ("ABCJK", "DEFLM", "GHINO")


@lru_cache(maxsize=None)
def build_spec(game_id: str, variant: str = "prompt") -> GameSpec:
    """Build the fully populated spec for one of the four games."""
    if game_id == "oTTT":
        positions = "ABCDEFGHI"
        coords = _grid_coords(positions, 3)
        sets = derive_grid_lines(coords, [set(positions)])
        n = 3
    elif game_id == "dTTT":
        positions = "ABCDEFGHIJKLMNO"
        coords = {p: (r, c) for r, row in enumerate(_DTTT_LAYOUT) for c, p in enumerate(row)}
        grids = [set("ABCDEFGHI"), set("CJKFLMINO")]
        sets = derive_grid_lines(coords, grids)
        n = 3
    elif game_id == "cTTT":
        positions = "ABCDEFGHIJKL"
        coords = dict(_CUBE_COORDS)
        sets = derive_cube_planes(coords)
        n = 4
    elif game_id == "sTTT":
        positions = string.ascii_uppercase[:25]
        coords = _grid_coords(positions, 5)
        sets = derive_squares_5x5(coords)
        n = 4
    else:
        raise ValueError(f"unknown game {game_id!r}; expected one of {GAME_IDS}")
    order = {p: i for i, p in enumerate(positions)}
    return GameSpec(
        game_id=game_id,
        positions=tuple(positions),
        winning_sets=canonical_sets(sets, order),
        win_size=n,
        coordinates=coords,
        n_schedule=N_SCHEDULE[game_id],
        rules_text=PREAMBLES[variant][game_id],
    )


def symmetries(spec: GameSpec) -> list[tuple[int, ...]]:
    """Position permutations induced by the board's rigid symmetries.

    Tries every signed axis permutation of the coordinate frame (8 in 2D, 48
    in 3D), re-anchored to the bounding box, and keeps those that map the
    position set and the winning-set collection onto themselves.
    """
    coords = [spec.coordinates[p] for p in spec.positions]
    dim = len(coords[0])
    at = {c: i for i, c in enumerate(coords)}
    wins = {frozenset(spec.index[p] for p in w) for w in spec.winning_sets}
    perms = []
    for axes in permutations(range(dim)):
        for signs in product((1, -1), repeat=dim):
            moved = [tuple(s * c[a] for a, s in zip(axes, signs)) for c in coords]
            lo = [min(m[k] for m in moved) for k in range(dim)]
            moved = [tuple(x - l for x, l in zip(m, lo)) for m in moved]
            if set(moved) != set(at):
                continue
            perm = tuple(at[m] for m in moved)
            if {frozenset(perm[i] for i in w) for w in wins} == wins:
                perms.append(perm)
    return sorted(set(perms))
