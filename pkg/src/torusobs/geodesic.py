"""Unit-speed geodesic rays on the d-torus and their exact grid traversal.

A traversal decomposes [0, T] into the ordered cell visits of a ray,
records every hyperplane crossing as (axis type, occurrence, time), and
derives the per-axis spacing constants.  Crossing times are computed by
one closed-form division per boundary index, never by accumulating
increments, so the arithmetic identity t_ij = t_i0 + j*alpha_i survives
at full double precision.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import (
    GammaHGeodesic,
    GridMismatch,
    HorizonOutOfRange,
    NonpositiveHorizon,
    ValidationError,
)
from .grid import CellIndex, Checkerboard, GridSpec, flat_index

# Two crossings closer than this are treated as one skeleton touch.
SKELETON_TIE = 1e-12


@dataclass(frozen=True)
class Geodesic:
    """Ray gamma(t) = origin + t * direction taken modulo 1 on every axis."""

    origin: tuple[float, ...]
    direction: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.origin) != len(self.direction):
            raise ValidationError("origin and direction dimensions differ")
        if any(not math.isfinite(x) for x in self.origin + self.direction):
            raise ValidationError("geodesic components must be finite")
        if any(not (0.0 <= x < 1.0) for x in self.origin):
            raise ValidationError("origin must lie in [0, 1)^d (use make_geodesic to wrap)")
        norm = math.sqrt(math.fsum(u * u for u in self.direction))
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"direction must be unit length, |v| = {norm!r}")

    @property
    def d(self) -> int:
        return len(self.origin)

    def position(self, t: float) -> tuple[float, ...]:
        """Unwrapped position at time t."""
        return tuple(x + t * u for x, u in zip(self.origin, self.direction))

    def wrapped_position(self, t: float) -> tuple[float, ...]:
        return tuple(x - math.floor(x) for x in self.position(t))

    def in_gamma_h(self, grid: GridSpec) -> bool:
        """True iff the ray lies inside a grid hyperplane of this grid.

        The membership test is exact (zero tolerance): a missed knife-edge
        case only leaves the infimum unchanged.
        """
        n = grid.n
        for x, u in zip(self.origin, self.direction):
            if u == 0.0 and x == round(x * n) / n:
                return True
        return False


def make_geodesic(origin: Sequence[float], direction: Sequence[float]) -> Geodesic:
    """Wrap the origin into [0,1)^d and normalize the direction."""
    norm = math.sqrt(math.fsum(u * u for u in direction))
    if norm == 0.0 or not math.isfinite(norm):
        raise ValidationError("direction must be a nonzero finite vector")
    unit = tuple(u / norm for u in direction)
    wrapped = []
    for x in origin:
        w = x - math.floor(x)
        if w >= 1.0:
            w = 0.0
        wrapped.append(w)
    return Geodesic(origin=tuple(wrapped), direction=unit)


class Crossing(NamedTuple):
    axis: int  # hyperplane type, 1-based
    occurrence: int  # j-th crossing of this type, 0-based
    time: float


class Segment(NamedTuple):
    cell: CellIndex
    t_entry: float
    t_exit: float


@dataclass(frozen=True)
class Traversal:
    """Ordered cell/time decomposition of a geodesic over [0, T].

    ``crossings`` is the merged, time-ordered list realizing the bijection
    between sequential crossing index and (type, occurrence); ties within
    SKELETON_TIE are ordered by axis and flag ``touches_skeleton``.
    ``counts[i-1]`` is the number of type-i crossings (the k_i + 1 of the
    spacing bound), ``alphas[i-1]`` the constant time between consecutive
    type-i hyperplanes (None when the axis is never crossed).
    """

    grid: GridSpec
    geodesic: Geodesic
    horizon: float
    segments: tuple[Segment, ...]
    crossings: tuple[Crossing, ...]
    counts: tuple[int, ...]
    alphas: tuple[float | None, ...]
    touches_skeleton: bool

    @property
    def crossing_count(self) -> int:
        return len(self.crossings)

    def visited_cells(self) -> tuple[CellIndex, ...]:
        return tuple(seg.cell for seg in self.segments)

    def crossing_times_of_axis(self, axis: int) -> list[float]:
        return [c.time for c in self.crossings if c.axis == axis]


def _axis_plan(x: float, v: float, n: int, T: float) -> tuple[int, list[float]]:
    """Start coordinate (1-based, canonical) and crossing times for one axis."""
    f = math.floor(x * n)
    if f >= n:
        f = n - 1
    if v == 0.0:
        return f % n + 1, []
    if v > 0.0:
        k = f + 1
        if f / n > x:
            k = f
        coord0 = k
        step = 1
    else:
        if f / n >= x:
            k = f - 1
            coord0 = f
        else:
            k = f
            coord0 = f + 1
        step = -1
    # Half-ulp guard: the first boundary must lie strictly ahead in time.
    while ((k / n) - x) / v <= 0.0:
        k += step
        coord0 += step
    times = []
    j = 0
    while True:
        t = ((k + step * j) / n - x) / v
        if t >= T:
            break
        times.append(t)
        j += 1
    return (coord0 - 1) % n + 1, times


def traverse(g: Geodesic, grid: GridSpec, T: float) -> Traversal:
    """Exact ordered cell/time decomposition of the ray over [0, T].

    Requires T in (0, 1); larger horizons go through reduce_horizon first.
    Geodesics inside a grid hyperplane are rejected: they are excluded
    from the occupation infimum and their cell assignment is ambiguous.
    """
    if g.d != grid.d:
        raise ValidationError(f"geodesic dimension {g.d} != grid dimension {grid.d}")
    if not (0.0 < T < 1.0):
        raise HorizonOutOfRange(f"traversal horizon must lie in (0, 1), got {T}")
    if g.in_gamma_h(grid):
        raise GammaHGeodesic("geodesic lies inside a grid hyperplane")

    n = grid.n
    d = grid.d
    start = []
    raw: list[tuple[float, int, int]] = []  # (time, axis 1-based, occurrence)
    counts = []
    alphas: list[float | None] = []
    for i in range(d):
        coord0, times = _axis_plan(g.origin[i], g.direction[i], n, T)
        start.append(coord0)
        for j, t in enumerate(times):
            raw.append((t, i + 1, j))
        counts.append(len(times))
        alphas.append(1.0 / (n * abs(g.direction[i])) if times else None)

    raw.sort(key=lambda r: (r[0], r[1]))

    # Reorder near-simultaneous crossings by axis and flag the touch.
    touches = False
    merged: list[Crossing] = []
    i = 0
    while i < len(raw):
        j = i + 1
        while j < len(raw) and raw[j][0] - raw[j - 1][0] <= SKELETON_TIE:
            j += 1
        chain = sorted(raw[i:j], key=lambda r: r[1])
        if len(chain) > 1:
            touches = True
        merged.extend(Crossing(axis=a, occurrence=o, time=t) for t, a, o in chain)
        i = j

    steps = [1 if u > 0 else -1 for u in g.direction]
    coords = list(start)
    segments: list[Segment] = []
    prev_t = 0.0
    for c in merged:
        segments.append(Segment(CellIndex(tuple(coords)), prev_t, c.time))
        a = c.axis - 1
        coords[a] = (coords[a] - 1 + steps[a]) % n + 1
        prev_t = c.time
    segments.append(Segment(CellIndex(tuple(coords)), prev_t, T))

    return Traversal(
        grid=grid,
        geodesic=g,
        horizon=T,
        segments=tuple(segments),
        crossings=tuple(merged),
        counts=tuple(counts),
        alphas=tuple(alphas),
        touches_skeleton=touches,
    )


def occupation_time(tr: Traversal, cb: Checkerboard) -> float:
    """Fraction of [0, T] the ray spends inside the board's domain."""
    if tr.grid != cb.grid:
        raise GridMismatch(f"traversal grid {tr.grid} != board grid {cb.grid}")
    n = tr.grid.n
    # max() drops the negative float slivers of reordered corner crossings
    total = math.fsum(
        max(0.0, seg.t_exit - seg.t_entry)
        for seg in tr.segments
        if cb.cells[flat_index(seg.cell.coords, n)]
    )
    return total / tr.horizon


def occupation_weights(tr: Traversal) -> dict[CellIndex, float]:
    """Per-cell time fractions t_cell / T; repeat visits accumulate."""
    acc: dict[CellIndex, float] = {}
    for seg in tr.segments:
        acc[seg.cell] = acc.get(seg.cell, 0.0) + max(0.0, seg.t_exit - seg.t_entry)
    return {cell: t / tr.horizon for cell, t in acc.items()}


def reduce_horizon(T: float) -> tuple[float, int]:
    """Smallest m >= 1 with T/m in (0, 1); occupation at T dominates T/m."""
    if not (T > 0.0) or not math.isfinite(T):
        raise NonpositiveHorizon(f"horizon must be positive and finite, got {T}")
    if T < 1.0:
        return T, 1
    m = math.floor(T) + 1
    while T / m >= 1.0:  # guards float rounding for T barely above an integer
        m += 1
    return T / m, m


def segments_to_csv(tr: Traversal) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    d = tr.grid.d
    writer.writerow(["seg_index"] + [f"i{k + 1}" for k in range(d)] + ["t_entry", "t_exit"])
    for idx, seg in enumerate(tr.segments):
        writer.writerow(
            [idx] + list(seg.cell.coords) + [f"{seg.t_entry:.17g}", f"{seg.t_exit:.17g}"]
        )
    return buf.getvalue()


def crossings_to_csv(tr: Traversal) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["order", "axis_type", "occurrence", "time"])
    for idx, c in enumerate(tr.crossings):
        writer.writerow([idx, c.axis, c.occurrence, f"{c.time:.17g}"])
    return buf.getvalue()


__all__ = [
    "Geodesic",
    "Crossing",
    "Segment",
    "Traversal",
    "make_geodesic",
    "traverse",
    "occupation_time",
    "occupation_weights",
    "reduce_horizon",
    "segments_to_csv",
    "crossings_to_csv",
    "SKELETON_TIE",
]
