"""Geodesic class machinery and planar line-separation counting.

Two off-skeleton geodesics are in the same class when they visit the same
cells in the same order; in d=2 this is equivalent to splitting the grid
vertices between their start and end cells the same way.  The separation
enumeration works over exact rationals: a direction is sampled strictly
inside every angular gap of the pairwise-direction arrangement and a
translation sweep emits the prefix bipartitions, with an exhaustive
convex-hull-disjointness oracle as the reference implementation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key

from .errors import (
    DimensionUnsupported,
    DuplicatePoints,
    GammaHGeodesic,
    SkeletonTouch,
    TooManyPoints,
    ValidationError,
)
from .geodesic import Geodesic, Traversal, make_geodesic, traverse
from .grid import CellIndex, GridSpec
from .rng import u01

Scalar = Fraction | int
Point = tuple[Scalar, Scalar]


# ---------------------------------------------------------------------------
# Class signatures


@dataclass(frozen=True)
class ClassSignature:
    """Ordered cells (c_0, ..., c_Np) visited by an off-skeleton geodesic."""

    cells: tuple[CellIndex, ...]
    grid: GridSpec

    def __post_init__(self) -> None:
        n = self.grid.n
        if n == 1:  # single-cell torus: every step returns to the same cell
            return
        for a, b in zip(self.cells, self.cells[1:]):
            deltas = [(y - x) % n for x, y in zip(a.coords, b.coords)]
            changed = [dd for dd in deltas if dd != 0]
            if len(changed) != 1 or changed[0] not in (1, n - 1):
                raise ValidationError(
                    f"consecutive cells must differ by +-1 mod n on one axis: {a} -> {b}"
                )

    def __len__(self) -> int:
        return len(self.cells)


def class_signature(tr: Traversal) -> ClassSignature:
    """Signature of a traversal; undefined when the ray touched the skeleton."""
    if tr.touches_skeleton:
        raise SkeletonTouch("signature undefined: traversal touches the grid skeleton")
    return ClassSignature(cells=tr.visited_cells(), grid=tr.grid)


# ---------------------------------------------------------------------------
# Vertex separation (d = 2)


@dataclass(frozen=True)
class VertexSeparation:
    """Bipartition of the crossed-hyperplane intersections of a planar ray.

    Vertex (k, l) pairs the k-th vertical with the l-th horizontal crossing;
    it lands in ``s1`` when the vertical hyperplane is met first.
    """

    start_cell: CellIndex
    end_cell: CellIndex
    counts: tuple[int, int]
    s1: frozenset[tuple[int, int]]
    s2: frozenset[tuple[int, int]]


def vertex_separation(g: Geodesic, grid: GridSpec, T: float) -> VertexSeparation:
    if grid.d != 2:
        raise DimensionUnsupported("vertex separation is defined for d = 2 only")
    tr = traverse(g, grid, T)
    return vertex_separation_of(tr)


def vertex_separation_of(tr: Traversal) -> VertexSeparation:
    if tr.grid.d != 2:
        raise DimensionUnsupported("vertex separation is defined for d = 2 only")
    if tr.touches_skeleton:
        raise SkeletonTouch("vertex separation undefined on the grid skeleton")
    t_v = tr.crossing_times_of_axis(1)
    t_h = tr.crossing_times_of_axis(2)
    s1 = frozenset(
        (k, l) for k in range(len(t_v)) for l in range(len(t_h)) if t_v[k] < t_h[l]
    )
    s2 = frozenset(
        (k, l) for k in range(len(t_v)) for l in range(len(t_h)) if t_v[k] > t_h[l]
    )
    return VertexSeparation(
        start_cell=tr.segments[0].cell,
        end_cell=tr.segments[-1].cell,
        counts=(len(t_v), len(t_h)),
        s1=s1,
        s2=s2,
    )


# ---------------------------------------------------------------------------
# Exact planar predicates


def _orient(a: Point, b: Point, c: Point) -> int:
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    """p collinear with (a, b) assumed; is p within the closed segment box?"""
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(
        a[1], b[1]
    )


def _segments_intersect(p: Point, q: Point, a: Point, b: Point) -> bool:
    d1 = _orient(a, b, p)
    d2 = _orient(a, b, q)
    d3 = _orient(p, q, a)
    d4 = _orient(p, q, b)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _on_segment(a, b, p):
        return True
    if d2 == 0 and _on_segment(a, b, q):
        return True
    if d3 == 0 and _on_segment(p, q, a):
        return True
    if d4 == 0 and _on_segment(p, q, b):
        return True
    return False


def _convex_hull(points: list[Point]) -> list[Point]:
    """Monotone chain; returns CCW vertices, collinear points dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _orient(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _orient(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:  # all points collinear: keep the extreme pair
        return [pts[0], pts[-1]]
    return hull


def _point_in_hull(p: Point, hull: list[Point]) -> bool:
    """Closed membership test (boundary counts as inside)."""
    if not hull:
        return False
    if len(hull) == 1:
        return p == hull[0]
    if len(hull) == 2:
        return _orient(hull[0], hull[1], p) == 0 and _on_segment(hull[0], hull[1], p)
    for a, b in zip(hull, hull[1:] + hull[:1]):
        if _orient(a, b, p) < 0:
            return False
    return True


def _hull_edges(hull: list[Point]) -> list[tuple[Point, Point]]:
    if len(hull) < 2:
        return []
    if len(hull) == 2:
        return [(hull[0], hull[1])]
    return list(zip(hull, hull[1:] + hull[:1]))


def _hulls_disjoint(ha: list[Point], hb: list[Point]) -> bool:
    if not ha or not hb:
        return True
    for p in ha:
        if _point_in_hull(p, hb):
            return False
    for p in hb:
        if _point_in_hull(p, ha):
            return False
    for pa, qa in _hull_edges(ha):
        for pb, qb in _hull_edges(hb):
            if _segments_intersect(pa, qa, pb, qb):
                return False
    return True


# ---------------------------------------------------------------------------
# Separation families


def _check_points(points: list[Point]) -> list[Point]:
    cleaned: list[Point] = []
    for p in points:
        if len(p) != 2:
            raise ValidationError("points must be planar pairs")
        for c in p:
            if isinstance(c, float):
                raise ValidationError("point coordinates must be exact (int or Fraction)")
            if not isinstance(c, (int, Fraction)):
                raise ValidationError(f"unsupported coordinate type {type(c).__name__}")
        cleaned.append((Fraction(p[0]), Fraction(p[1])))
    if len(set(cleaned)) != len(cleaned):
        raise DuplicatePoints("point set must be pairwise distinct")
    return cleaned


@dataclass(frozen=True)
class PointSet:
    """Pairwise-distinct planar points with exact coordinates."""

    points: tuple[Point, ...]

    @staticmethod
    def of(points) -> "PointSet":
        return PointSet(tuple(_check_points(list(points))))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SeparationFamily:
    """Line-separable bipartitions, each stored as the side holding point 0."""

    partitions: frozenset[frozenset[int]]
    direction_count: int

    def __len__(self) -> int:
        return len(self.partitions)


def _canonical_direction(dx: Fraction, dy: Fraction) -> tuple[int, int]:
    """Primitive integer direction in the upper half-plane (angle in [0, pi))."""
    num = dx.numerator * dy.denominator
    den = dy.numerator * dx.denominator
    px, py = num, den
    if px == 0 and py == 0:
        raise ValidationError("zero direction")
    g = math.gcd(abs(px), abs(py))
    px //= g
    py //= g
    if py < 0 or (py == 0 and px < 0):
        px, py = -px, -py
    return px, py


def _cross(u: tuple[int, int], v: tuple[int, int]) -> int:
    return u[0] * v[1] - u[1] * v[0]


def _gap_directions(dirs: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """One direction strictly inside each angular gap of the arrangement."""
    if not dirs:
        return [(1, 0)]
    if len(dirs) == 1:
        ux, uy = dirs[0]
        return [_canonical_direction(Fraction(-uy), Fraction(ux))]
    ordered = sorted(dirs, key=cmp_to_key(lambda u, v: -_cross(u, v)))
    samples = []
    for u, v in zip(ordered, ordered[1:]):
        samples.append((u[0] + v[0], u[1] + v[1]))
    last, first = ordered[-1], ordered[0]
    samples.append((last[0] - first[0], last[1] - first[1]))
    out = []
    for sx, sy in samples:
        out.append(_canonical_direction(Fraction(sx), Fraction(sy)))
    return out


def enumerate_separations(a: PointSet) -> SeparationFamily:
    """All line-separable bipartitions via the rotating-gap sweep (exact)."""
    pts = list(a.points)
    npts = len(pts)
    dir_set = set()
    for i in range(npts):
        for j in range(i + 1, npts):
            dx = pts[j][0] - pts[i][0]
            dy = pts[j][1] - pts[i][1]
            dir_set.add(_canonical_direction(dx, dy))
    dirs = sorted(dir_set)
    partitions: set[frozenset[int]] = set()
    for w in _gap_directions(dirs):
        normal = (-w[1], w[0])
        keys = [normal[0] * p[0] + normal[1] * p[1] for p in pts]
        order = sorted(range(npts), key=lambda i: keys[i])
        if len(set(keys)) != npts:
            raise AssertionError("gap direction collided with a pair direction")
        prefix: set[int] = set()
        partitions.add(frozenset(range(npts)))  # empty cut: everything on one side
        for i in order:
            prefix.add(i)
            side = prefix if 0 in prefix else set(range(npts)) - prefix
            partitions.add(frozenset(side))
    family = SeparationFamily(frozenset(partitions), direction_count=len(dirs))
    assert len(family) <= count_bound(npts)
    return family


def separations_bruteforce(a: PointSet) -> SeparationFamily:
    """Reference oracle: a bipartition is separable iff its hulls are disjoint."""
    pts = list(a.points)
    npts = len(pts)
    if npts > 16:
        raise TooManyPoints("brute-force enumeration is capped at 16 points")
    dir_set = set()
    for i in range(npts):
        for j in range(i + 1, npts):
            dir_set.add(_canonical_direction(pts[j][0] - pts[i][0], pts[j][1] - pts[i][1]))
    hull_cache: dict[int, list[Point]] = {}

    def hull_of(mask: int) -> list[Point]:
        got = hull_cache.get(mask)
        if got is None:
            got = _convex_hull([pts[i] for i in range(npts) if mask >> i & 1])
            hull_cache[mask] = got
        return got

    full = (1 << npts) - 1
    partitions: set[frozenset[int]] = set()
    for mask in range(1, full + 1, 2):  # canonical side always contains point 0
        if _hulls_disjoint(hull_of(mask), hull_of(full ^ mask)):
            partitions.add(frozenset(i for i in range(npts) if mask >> i & 1))
    return SeparationFamily(frozenset(partitions), direction_count=len(dir_set))


def count_bound(n: int) -> int:
    """Polynomial ceiling (n(n-1)/2 + 1)(n+1) on the separation count."""
    if n < 1:
        raise ValidationError("count_bound needs n >= 1")
    return (n * (n - 1) // 2 + 1) * (n + 1)


def family_to_lines(family: SeparationFamily) -> list[str]:
    """Stable text form: one sorted index list per partition, lines sorted."""
    lines = [" ".join(str(i) for i in sorted(side)) for side in family.partitions]
    return sorted(lines)


def parse_points_csv(text: str) -> PointSet:
    """Parse 'x,y' lines with integer or rational (p/q) coordinates."""
    points = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValidationError(f"expected 'x,y' per line, got {line!r}")
        points.append((Fraction(parts[0].strip()), Fraction(parts[1].strip())))
    return PointSet.of(points)


# ---------------------------------------------------------------------------
# Signature census


@dataclass(frozen=True)
class CensusReport:
    d: int
    n: int
    horizon: float
    samples: int
    distinct_signatures: int


def random_geodesic(d: int, seed: int, index: int) -> Geodesic:
    """Deterministic uniform random ray keyed by (seed, index)."""
    origin = tuple(u01(seed, index, 11 + i) for i in range(d))
    if d == 2:
        theta = 2.0 * math.pi * u01(seed, index, 29)
        direction = (math.cos(theta), math.sin(theta))
    else:
        comps = []
        for i in range(d):
            u1 = u01(seed, index, 31 + 2 * i)
            u2 = u01(seed, index, 32 + 2 * i)
            comps.append(math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2))
        direction = tuple(comps)
    return make_geodesic(origin, direction)


def sample_off_skeleton(grid: GridSpec, T: float, seed: int, index: int) -> Traversal:
    """Random traversal, retrying the measure-zero degenerate draws."""
    for attempt in itertools.count():
        try:
            g = random_geodesic(grid.d, seed, index * 1009 + attempt)
            tr = traverse(g, grid, T)
        except GammaHGeodesic:
            continue
        if not tr.touches_skeleton:
            return tr
    raise AssertionError("unreachable")


def classes_polynomial_census(grid: GridSpec, T: float, samples: int, seed: int) -> CensusReport:
    """Distinct signatures among `samples` random off-skeleton rays."""
    seen: set[tuple] = set()
    for i in range(samples):
        tr = sample_off_skeleton(grid, T, seed, i)
        seen.add(tuple(c.coords for c in tr.visited_cells()))
    return CensusReport(
        d=grid.d, n=grid.n, horizon=T, samples=samples, distinct_signatures=len(seen)
    )


@dataclass(frozen=True)
class GrowthDiagnostics:
    reports: tuple[CensusReport, ...]
    fitted_exponent: float
    monotone: bool


def census_growth(
    d: int, n_values: list[int], T: float, samples: int, seed: int
) -> GrowthDiagnostics:
    """Census across n with a log-log slope fit of the distinct counts."""
    reports = tuple(
        classes_polynomial_census(GridSpec(d, n), T, samples, seed) for n in n_values
    )
    counts = [r.distinct_signatures for r in reports]
    xs = [math.log(n) for n in n_values]
    ys = [math.log(max(c, 1)) for c in counts]
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    denom = sum((x - xbar) ** 2 for x in xs)
    slope = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / denom if denom else 0.0
    monotone = all(a <= b for a, b in zip(counts, counts[1:]))
    return GrowthDiagnostics(reports=reports, fitted_exponent=slope, monotone=monotone)


__all__ = [
    "ClassSignature",
    "class_signature",
    "VertexSeparation",
    "vertex_separation",
    "vertex_separation_of",
    "PointSet",
    "SeparationFamily",
    "enumerate_separations",
    "separations_bruteforce",
    "count_bound",
    "family_to_lines",
    "parse_points_csv",
    "CensusReport",
    "classes_polynomial_census",
    "GrowthDiagnostics",
    "census_growth",
    "random_geodesic",
    "sample_off_skeleton",
]
