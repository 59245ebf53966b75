"""Periodic grid geometry on [0,1)^d and random checkerboard domains.

The unit d-torus is subdivided into n^d half-open cells
[(i1-1)/n, i1/n) x ... with 1-based cell coordinates.  A checkerboard is
an independent Bernoulli(epsilon) colouring of the cells, sampled from a
counter-based stream so that identical (grid, epsilon, seed) always
reproduce the same bits, in any fill order.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionTooLarge, GridMismatch, InvalidProbability, ValidationError
from .rng import mix_key, u01_array


@dataclass(frozen=True)
class GridSpec:
    """Dimension d and per-axis subdivision n of the periodic grid."""

    d: int
    n: int

    def __post_init__(self) -> None:
        if self.d < 1 or self.n < 1:
            raise ValidationError(f"grid needs d >= 1 and n >= 1, got d={self.d}, n={self.n}")
        if self.n > 1 and self.d * math.log2(self.n) > 62:
            raise DimensionTooLarge(f"n**d = {self.n}**{self.d} overflows the 62-bit index budget")

    def cell_count(self) -> int:
        return self.n**self.d


def make_grid(d: int, n: int) -> GridSpec:
    return GridSpec(d=d, n=n)


@dataclass(frozen=True)
class CellIndex:
    """1-based cell coordinates, canonical modulo n on every axis."""

    coords: tuple[int, ...]

    @staticmethod
    def canonicalize(coords: Sequence[int], n: int) -> "CellIndex":
        return CellIndex(tuple((c - 1) % n + 1 for c in coords))


def flat_index(coords: Sequence[int], n: int) -> int:
    """Row-major flat index with the first coordinate varying fastest."""
    idx = 0
    for c in reversed(coords):
        idx = idx * n + (c - 1)
    return idx


def unflatten_index(idx: int, d: int, n: int) -> tuple[int, ...]:
    coords = []
    for _ in range(d):
        coords.append(idx % n + 1)
        idx //= n
    return tuple(coords)


@dataclass(frozen=True)
class Checkerboard:
    """One realization of the random domain: a bit per cell plus provenance.

    ``cells`` is a read-only uint8 0/1 array of length n**d in flat-index
    order; bit 1 means the cell belongs to the domain.
    """

    grid: GridSpec
    epsilon: float
    seed: int
    cells: np.ndarray

    def __post_init__(self) -> None:
        if self.cells.shape != (self.grid.cell_count(),):
            raise ValidationError("cell bit array length must equal n**d")
        self.cells.flags.writeable = False

    def measure(self) -> float:
        return int(self.cells.sum()) / self.grid.cell_count()

    def bit(self, cell: CellIndex) -> int:
        return int(self.cells[flat_index(cell.coords, self.grid.n)])


def sample_checkerboard(grid: GridSpec, epsilon: float, seed: int) -> Checkerboard:
    """Draw the n^d independent Bernoulli(epsilon) cell bits for one board.

    Cell bits come from u01(seed, flat_index) < epsilon, so any sub-range
    of cells can be re-derived later without re-sampling the whole board.
    """
    if not (0.0 <= epsilon <= 1.0) or math.isnan(epsilon):
        raise InvalidProbability(f"epsilon must lie in [0, 1], got {epsilon}")
    count = grid.cell_count()
    counters = np.arange(count, dtype=np.uint64)
    bits = (u01_array(seed, counters) < epsilon).astype(np.uint8)
    return Checkerboard(grid=grid, epsilon=epsilon, seed=seed, cells=bits)


def cell_bits(grid: GridSpec, epsilon: float, seed: int, flat_indices: np.ndarray) -> np.ndarray:
    """Bits of selected cells of the board (seed, epsilon) without building it."""
    return (u01_array(seed, flat_indices.astype(np.uint64)) < epsilon).astype(np.uint8)


def cell_of(grid: GridSpec, point: Sequence[float]) -> CellIndex:
    """Wrap a finite point into [0,1)^d and locate its half-open cell."""
    if len(point) != grid.d:
        raise ValidationError(f"point has {len(point)} coordinates, grid has d={grid.d}")
    coords = []
    for x in point:
        if not math.isfinite(x):
            raise ValidationError("point coordinates must be finite")
        w = x - math.floor(x)
        if w >= 1.0:  # rounding of x - floor(x) can land exactly on 1.0
            w = 0.0
        i = min(int(math.floor(w * grid.n)), grid.n - 1)
        coords.append(i + 1)
    return CellIndex(tuple(coords))


def measure(cb: Checkerboard) -> float:
    return cb.measure()


def require_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise GridMismatch(f"grids differ: {a} vs {b}")


def board_to_json(cb: Checkerboard) -> str:
    """Serialize a board to the single-object text format (bit-exact)."""
    packed = np.packbits(cb.cells, bitorder="little")
    doc = {
        "d": cb.grid.d,
        "n": cb.grid.n,
        "epsilon": cb.epsilon,
        "seed": cb.seed,
        "cells": base64.b64encode(packed.tobytes()).decode("ascii"),
    }
    return json.dumps(doc)


def board_from_json(text: str) -> Checkerboard:
    doc = json.loads(text)
    grid = make_grid(int(doc["d"]), int(doc["n"]))
    raw = np.frombuffer(base64.b64decode(doc["cells"]), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little", count=grid.cell_count()).astype(np.uint8)
    return Checkerboard(grid=grid, epsilon=float(doc["epsilon"]), seed=int(doc["seed"]), cells=bits)


def write_board(cb: Checkerboard, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(board_to_json(cb))
        fh.write("\n")


def read_board(path: str) -> Checkerboard:
    with open(path, "r", encoding="ascii") as fh:
        return board_from_json(fh.read())


__all__ = [
    "GridSpec",
    "CellIndex",
    "Checkerboard",
    "make_grid",
    "sample_checkerboard",
    "cell_bits",
    "cell_of",
    "measure",
    "flat_index",
    "unflatten_index",
    "require_same_grid",
    "board_to_json",
    "board_from_json",
    "write_board",
    "read_board",
]
