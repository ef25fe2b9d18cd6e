"""Minimal 5x7 bitmap glyph atlas for rendering synthetic screen text.

The rendered pixels only need to give frames realistic texture; the OCR
fixtures carry the true strings, so lowercase letters reuse the uppercase
shapes and unknown characters draw as a filled box.
"""

from __future__ import annotations

import numpy as np

_RAW = {
    "A": ".XX.|X..X|X..X|XXXX|X..X|X..X|X..X",
    "B": "XXX.|X..X|X..X|XXX.|X..X|X..X|XXX.",
    "C": ".XXX|X...|X...|X...|X...|X...|.XXX",
    "D": "XXX.|X..X|X..X|X..X|X..X|X..X|XXX.",
    "E": "XXXX|X...|X...|XXX.|X...|X...|XXXX",
    "F": "XXXX|X...|X...|XXX.|X...|X...|X...",
    "G": ".XXX|X...|X...|X.XX|X..X|X..X|.XXX",
    "H": "X..X|X..X|X..X|XXXX|X..X|X..X|X..X",
    "I": "XXX.|.X..|.X..|.X..|.X..|.X..|XXX.",
    "J": "..XX|...X|...X|...X|X..X|X..X|.XX.",
    "K": "X..X|X.X.|XX..|X...|XX..|X.X.|X..X",
    "L": "X...|X...|X...|X...|X...|X...|XXXX",
    "M": "X..X|XXXX|XXXX|X..X|X..X|X..X|X..X",
    "N": "X..X|XX.X|XX.X|X.XX|X.XX|X..X|X..X",
    "O": ".XX.|X..X|X..X|X..X|X..X|X..X|.XX.",
    "P": "XXX.|X..X|X..X|XXX.|X...|X...|X...",
    "Q": ".XX.|X..X|X..X|X..X|X.XX|X..X|.XXX",
    "R": "XXX.|X..X|X..X|XXX.|XX..|X.X.|X..X",
    "S": ".XXX|X...|X...|.XX.|...X|...X|XXX.",
    "T": "XXXX|.X..|.X..|.X..|.X..|.X..|.X..",
    "U": "X..X|X..X|X..X|X..X|X..X|X..X|.XX.",
    "V": "X..X|X..X|X..X|X..X|X..X|.XX.|.XX.",
    "W": "X..X|X..X|X..X|X..X|XXXX|XXXX|X..X",
    "X": "X..X|X..X|.XX.|.XX.|.XX.|X..X|X..X",
    "Y": "X..X|X..X|.XX.|.X..|.X..|.X..|.X..",
    "Z": "XXXX|...X|..X.|.X..|X...|X...|XXXX",
    "0": ".XX.|X..X|X.XX|XX.X|X..X|X..X|.XX.",
    "1": ".X..|XX..|.X..|.X..|.X..|.X..|XXX.",
    "2": ".XX.|X..X|...X|..X.|.X..|X...|XXXX",
    "3": "XXX.|...X|...X|.XX.|...X|...X|XXX.",
    "4": "X..X|X..X|X..X|XXXX|...X|...X|...X",
    "5": "XXXX|X...|XXX.|...X|...X|X..X|.XX.",
    "6": ".XX.|X...|XXX.|X..X|X..X|X..X|.XX.",
    "7": "XXXX|...X|..X.|..X.|.X..|.X..|.X..",
    "8": ".XX.|X..X|X..X|.XX.|X..X|X..X|.XX.",
    "9": ".XX.|X..X|X..X|.XXX|...X|...X|.XX.",
    ".": "....|....|....|....|....|.X..|.X..",
    ",": "....|....|....|....|.X..|.X..|X...",
    ":": "....|.X..|.X..|....|.X..|.X..|....",
    "-": "....|....|....|XXXX|....|....|....",
    "'": ".X..|.X..|....|....|....|....|....",
    "/": "...X|...X|..X.|..X.|.X..|X...|X...",
    "%": "X..X|...X|..X.|..X.|.X..|X...|X..X",
    "(": "..X.|.X..|.X..|.X..|.X..|.X..|..X.",
    ")": ".X..|..X.|..X.|..X.|..X.|..X.|.X..",
    "?": ".XX.|X..X|...X|..X.|.X..|....|.X..",
    "!": ".X..|.X..|.X..|.X..|.X..|....|.X..",
    "+": "....|.X..|.X..|XXXX|.X..|.X..|....",
}

_UNKNOWN = "XXXX|XXXX|XXXX|XXXX|XXXX|XXXX|XXXX"

GLYPH_W = 5
GLYPH_H = 7


def _compile(spec: str) -> np.ndarray:
    rows = spec.split("|")
    mask = np.zeros((GLYPH_H, GLYPH_W), dtype=bool)
    for r, row in enumerate(rows):
        for c, ch in enumerate(row):
            if ch == "X":
                mask[r, c] = True
    return mask


_ATLAS: dict[str, np.ndarray] = {ch: _compile(spec) for ch, spec in _RAW.items()}
_UNKNOWN_MASK = _compile(_UNKNOWN)


def glyph_mask(ch: str) -> np.ndarray | None:
    """Bitmap for one character; None for spaces, a filled box for unknowns."""
    if ch == " ":
        return None
    return _ATLAS.get(ch.upper(), _UNKNOWN_MASK)


def text_width(text: str, scale: int = 2) -> int:
    if not text:
        return 0
    return len(text) * (GLYPH_W + 1) * scale - scale


def text_height(scale: int = 2) -> int:
    return GLYPH_H * scale


def draw_text(canvas: np.ndarray, x: int, y: int, text: str,
              color: tuple[int, int, int], scale: int = 2) -> None:
    """Blit text onto an RGB canvas, clipping at the borders."""
    h, w = canvas.shape[:2]
    cx = x
    col = np.array(color, dtype=np.uint8)
    for ch in text:
        mask = glyph_mask(ch)
        if mask is not None:
            big = np.kron(mask, np.ones((scale, scale), dtype=bool))
            gh, gw = big.shape
            y0, x0 = max(0, y), max(0, cx)
            y1, x1 = min(h, y + gh), min(w, cx + gw)
            if y1 > y0 and x1 > x0:
                sub = big[y0 - y: y1 - y, x0 - cx: x1 - cx]
                canvas[y0:y1, x0:x1][sub] = col
        cx += (GLYPH_W + 1) * scale
