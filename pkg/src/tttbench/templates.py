"""Frozen question templates for the four games.

Two preamble wordings exist per game. ``"prompt"`` is the wording sent to
models together with the boxed-answer suffix; ``"reference"`` is the wording
of the illustrated worked examples. They are identical for oTTT and differ by
a few characters (plural "grids", commas, doubled spaces) elsewhere. Both are
kept verbatim because model behaviour is sensitive to prompt bytes.
"""

from __future__ import annotations

DEFAULT_SUFFIX = "Let's think step by step and output the final answer within \\boxed{}."

PREAMBLE_VARIANTS = ("prompt", "reference")

_OTTT = (
    "Alice and Bob are playing a game on a 3x3 grid. The points on the grid are "
    "labeled top to bottom, left to right, as A,B,C,D,E,F,G,H,I. Alice plays white. "
    "Bob plays black. At each turn, the player places a stone of the corresponding "
    "color onto one of the positions that has not been occupied. Whoever has three "
    "stones in a line (horizontal, vertical, or diagonal) wins."
)

_DTTT = (
    "Alice and Bob are playing a game on two adjacent 3x3 {grids}. The points on the "
    "first grid are labeled top to bottom, left to right, as A,B,C,D,E,F,G,H,I. The "
    "points on the second grid are labeled top to bottom, left to right, as "
    "C,J,K,F,L,M,I,N,O. Note that points C,F, I are shared by the two grids. Alice "
    "plays white. Bob plays black. At each turn, the player places a stone of the "
    "corresponding color onto one of the positions that has not been occupied. "
    "Whoever has three stones in a line (horizontal, vertical, or diagonal) on either "
    "grid wins."
)

_CTTT = (
    "Alice and Bob are playing a game on two adjacent cubes. ABCD forms the top "
    "rectangle in the first cube{comma} and BIJC forms the top rectangle in the second "
    "cube. EFGH forms the bottom rectangle in the first cube{comma} and FKLG forms the "
    "bottom rectangle in the second cube. AE is an edge, BF is an edge, CG is an edge, "
    "DH is an edge, IK is an edge, and JL is an edge. Note that vertices B,C,G,F are "
    "shared by the two cubes. Alice and Bob {play} a game where they take turns to put "
    "stickers on the vertices of the cubes that have not been occupied. Alice plays "
    "white stickers. Bob plays black stickers. The person who has four stickers on "
    "the same plane on either cube wins."
)

_STTT = (
    "Alice and Bob are playing a game on a board. There are 5 equally spaced "
    "horizontal lines where the distance between two neighboring horizontal lines is "
    "1. Similarly, there are 5 equally spaced vertical lines, and the distance between "
    "two neighboring vertical lines is 1. There are 25 intersection points between the "
    "5 horizontal lines and 5 vertical lines. These 25 points are labeled from top to "
    "bottom, left to right, as A, B, C, D, …, Y.{gap}Alice plays white. Bob plays "
    "black. At each turn, the player places a stone of the corresponding color onto "
    "one of the 25 points that have not been occupied. Whoever has four stones that "
    "form either a unit square (with side length of 1){gap}or a “diagonal "
    "square” with side length equal to the square root of 2 wins. For example, "
    "ABGF is a unit square. FBHL is a diagonal square."
)

PREAMBLES: dict[str, dict[str, str]] = {
    "prompt": {
        "oTTT": _OTTT,
        "dTTT": _DTTT.format(grids="grid"),
        "cTTT": _CTTT.format(comma="", play="plays"),
        "sTTT": _STTT.format(gap="  "),
    },
    "reference": {
        "oTTT": _OTTT,
        "dTTT": _DTTT.format(grids="grids"),
        "cTTT": _CTTT.format(comma=",", play="play"),
        "sTTT": _STTT.format(gap=" "),
    },
}

# (first move, later Alice move, later Bob move); each formats a label.
NARRATION: dict[str, tuple[str, str, str]] = {
    "oTTT": (
        "Alice first places a white stone at {}.",
        "Alice places a white stone at {}.",
        "Bob places a black stone at {}.",
    ),
    "dTTT": (
        "Alice first places a white stone at {}.",
        "Then Alice at {}.",
        "Bob places a black stone at {}.",
    ),
    "cTTT": (
        "Alice first places a white stone at {}.",
        "Then Alice places a white stone at {}.",
        "Then Bob places a black stone at {}.",
    ),
    "sTTT": (
        "Alice first places a white stone at {}.",
        "Then Alice places a white stone at {}.",
        "Then Bob places a black stone at {}.",
    ),
}

QUESTION = "Where should {} play next?"
