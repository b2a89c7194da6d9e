"""Shared text and image writers: headerless CSV matrices and binary PGM maps.

All text output is UTF-8 with LF endings; floats are written with 17
significant digits so they round-trip exactly.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import DimensionError


def write_matrix_csv(path, m: np.ndarray):
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in m:
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise DimensionError(f"{path} is empty")
    return np.asarray(rows, dtype=np.float64)


def write_json(path, doc):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_pgm(path, image: np.ndarray):
    """Min-max scale one 2-D map to 8-bit gray and write binary PGM (P5)."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise DimensionError(f"PGM needs a 2-D map, got shape {image.shape}")
    lo, hi = image.min(), image.max()
    if hi > lo:
        scaled = (image - lo) / (hi - lo) * 255.0
    else:
        scaled = np.zeros_like(image)
    data = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
