"""Fixed 33 x 33 binary support maps for the three simulated spatial sources.

The components activate digit-shaped regions: one "1", two "2"s, and
three "3"s.  Glyphs are 7 x 5 pixel-font bitmaps upscaled by 2 and placed
on a disjoint 2 x 3 slot grid, so the three supports never overlap.
"""

from __future__ import annotations

import numpy as np

_GLYPHS = {
    "1": (
        "..#..",
        ".##..",
        "..#..",
        "..#..",
        "..#..",
        "..#..",
        ".###.",
    ),
    "2": (
        ".###.",
        "#...#",
        "....#",
        "...#.",
        "..#..",
        ".#...",
        "#####",
    ),
    "3": (
        "####.",
        "....#",
        "....#",
        ".###.",
        "....#",
        "....#",
        "####.",
    ),
}

SIDE = 33
_SCALE = 2
# (row, col) upper-left corners; top band rows 1..14, bottom band rows 18..31
_PLACEMENTS = {
    "1": [(1, 12)],
    "2": [(1, 1), (1, 23)],
    "3": [(18, 1), (18, 12), (18, 23)],
}


def _glyph_bitmap(digit: str) -> np.ndarray:
    rows = _GLYPHS[digit]
    small = np.array([[ch == "#" for ch in line] for line in rows], dtype=bool)
    return np.kron(small, np.ones((_SCALE, _SCALE), dtype=bool))


def source_masks() -> np.ndarray:
    """The three support maps as a (3, 33, 33) boolean array."""
    masks = np.zeros((3, SIDE, SIDE), dtype=bool)
    for idx, digit in enumerate(("1", "2", "3")):
        bitmap = _glyph_bitmap(digit)
        h, w = bitmap.shape
        for r, c in _PLACEMENTS[digit]:
            masks[idx, r : r + h, c : c + w] |= bitmap
    return masks


SOURCE_MASKS = source_masks()
