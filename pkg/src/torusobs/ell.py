"""Estimation of the smallest occupation fraction over all geodesic rays.

The estimator evaluates the occupation functional over a structured
candidate family (rays through pairs of grid vertices, nudged off the
skeleton), a seeded random family, and a derivative-free refinement from
the best candidates; the result is always an upper bound of the true
infimum.  A dense tensor-grid sweep over (origin, angle) serves as the
small-instance oracle.

Two vectorized evaluation paths keep large experiments affordable:

* rays sharing a direction and sub-cell phase differ only by a lattice
  translation, so one traversal prices all n^d vertex copies via a single
  gather over the board bits;
* arbitrary ray batches are priced by a columnar traversal (per-axis
  closed-form crossing times, one argsort per ray).

Both agree with the scalar traversal to float dust; the scalar path
remains the authority (witness values are recomputed through it).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from math import gcd
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import (
    DimensionUnsupported,
    GammaHGeodesic,
    HorizonOutOfRange,
    InvalidPolicy,
)
from .geodesic import Geodesic, Traversal, make_geodesic, occupation_time, traverse
from .grid import Checkerboard, GridSpec
from .rng import mix_key, u01

_BIG = 2.0  # sentinel time, strictly beyond any admissible horizon


@dataclass(frozen=True)
class CandidatePolicy:
    """Knobs for the candidate family; None fields resolve per grid/horizon."""

    vertex_pair_range: int | None = None  # max unfolded lattice offset K
    eta: float | None = None  # skeleton nudge; must sit in (0, 1/(2 n^2))
    random_count: int = 512
    refine_iters: int = 64  # pattern-search sweep budget per start
    refine_tolerance: float = 1e-4

    def resolve(self, grid: GridSpec, T: float) -> "ResolvedPolicy":
        n = grid.n
        k_min = math.ceil(n * T) + 1
        k = self.vertex_pair_range if self.vertex_pair_range is not None else k_min
        eta = self.eta if self.eta is not None else 1.0 / (8 * n * n)
        if k < k_min:
            raise InvalidPolicy(f"vertex_pair_range must be >= ceil(nT)+1 = {k_min}, got {k}")
        if not (0.0 < eta < 1.0 / (2 * n * n)):
            raise InvalidPolicy(f"eta must lie in (0, 1/(2n^2)), got {eta}")
        if self.random_count < 0 or self.refine_iters < 0:
            raise InvalidPolicy("counts must be nonnegative")
        if not (0.0 < self.refine_tolerance < 1.0):
            raise InvalidPolicy("refine_tolerance must lie in (0, 1)")
        return ResolvedPolicy(
            vertex_pair_range=k,
            eta=eta,
            random_count=self.random_count,
            refine_iters=self.refine_iters,
            refine_tolerance=self.refine_tolerance,
        )


@dataclass(frozen=True)
class ResolvedPolicy:
    vertex_pair_range: int
    eta: float
    random_count: int
    refine_iters: int
    refine_tolerance: float


@dataclass(frozen=True)
class EllEstimate:
    """Upper bound of the occupation infimum together with its witness ray."""

    value: float
    witness: Geodesic
    method: str  # candidates | refined | dense_sweep
    resolution: float | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "value": self.value,
                "origin": list(self.witness.origin),
                "direction": list(self.witness.direction),
                "method": self.method,
                "resolution": self.resolution,
            }
        )

    @staticmethod
    def from_json(text: str) -> "EllEstimate":
        doc = json.loads(text)
        return EllEstimate(
            value=float(doc["value"]),
            witness=Geodesic(tuple(doc["origin"]), tuple(doc["direction"])),
            method=doc["method"],
            resolution=None if doc["resolution"] is None else float(doc["resolution"]),
        )


# ---------------------------------------------------------------------------
# Vectorized occupation pricing


def batch_occupation(
    origins: np.ndarray,
    directions: np.ndarray,
    grid: GridSpec,
    bits: np.ndarray,
    T: float,
) -> np.ndarray:
    """Occupation fractions for a batch of rays (origins/directions (B, d)).

    Implements the half-open cell convention; rays exactly inside a grid
    hyperplane are priced by that convention rather than rejected, so the
    caller is responsible for avoiding measure-zero inputs where it matters.
    """
    n = grid.n
    d = grid.d
    b = origins.shape[0]
    if b == 0:
        return np.zeros(0)
    times_parts = []
    axis_parts = []
    starts = np.empty((b, d), dtype=np.int64)
    steps = np.empty((b, d), dtype=np.int64)
    for i in range(d):
        x = origins[:, i]
        v = directions[:, i]
        f = np.floor(x * n).astype(np.int64)
        np.clip(f, 0, n - 1, out=f)
        sgn = np.where(v >= 0.0, 1, -1).astype(np.int64)
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = 1.0 / (n * np.abs(v))
            boundary = np.where(sgn > 0, (f + 1) / n, f / n)
            t0 = (boundary - x) / v
        live = v != 0.0
        t0 = np.where(live, t0, np.inf)
        alpha = np.where(live, alpha, np.inf)
        # exact-boundary starts against the motion: shift to the effective cell
        fix = live & (t0 <= 0.0)
        if np.any(fix):
            f = np.where(fix, f - sgn, f)
            t0 = np.where(fix, t0 + alpha, t0)
        vmax = float(np.max(np.abs(v[live]))) if np.any(live) else 0.0
        cols = int(n * vmax * T) + 2 if vmax > 0.0 else 1
        j = np.arange(cols)
        t_axis = t0[:, None] + j[None, :] * alpha[:, None]
        t_axis = np.where(t_axis < T, t_axis, np.inf)
        times_parts.append(t_axis)
        axis_parts.append(np.full(cols, i, dtype=np.int64))
        starts[:, i] = f
        steps[:, i] = sgn
    times = np.concatenate(times_parts, axis=1)
    axis_of_col = np.concatenate(axis_parts)
    order = np.argsort(times, axis=1, kind="stable")
    t_sorted = np.take_along_axis(times, order, axis=1)
    ax_sorted = axis_of_col[order]
    m_cols = times.shape[1]
    t_clip = np.minimum(t_sorted, T)
    bounds = np.concatenate(
        [np.zeros((b, 1)), t_clip, np.full((b, 1), T)], axis=1
    )
    durations = np.diff(bounds, axis=1)  # (b, m_cols + 1)
    flat = np.zeros((b, m_cols + 1), dtype=np.int64)
    scale = 1
    for i in range(d):
        hits = (ax_sorted == i).astype(np.int64)
        prefix = np.concatenate(
            [np.zeros((b, 1), dtype=np.int64), np.cumsum(hits, axis=1)], axis=1
        )
        coord = (starts[:, i : i + 1] + steps[:, i : i + 1] * prefix) % n
        flat += coord * scale
        scale *= n
    occupied = bits[flat]
    return np.einsum("bs,bs->b", durations, occupied) / T


def translated_occupations(rep: Traversal, bits: np.ndarray) -> np.ndarray:
    """Occupation fractions of every lattice translate of one traversal.

    Entry k prices the ray whose origin is the representative's shifted by
    the k-th cell offset (flat order); crossing times are translation
    invariant, so only the board gather differs.
    """
    grid = rep.grid
    n = grid.n
    d = grid.d
    durations = np.array([max(0.0, seg.t_exit - seg.t_entry) for seg in rep.segments])
    cells = np.array([[c - 1 for c in seg.cell.coords] for seg in rep.segments])
    count = grid.cell_count()
    ks = np.arange(count, dtype=np.int64)
    flat = np.zeros((count, len(rep.segments)), dtype=np.int64)
    scale = 1
    for i in range(d):
        off = (ks // (n**i)) % n
        flat += ((cells[None, :, i] + off[:, None]) % n) * scale
        scale *= n
    return (bits[flat] @ durations) / rep.horizon


# ---------------------------------------------------------------------------
# Candidate enumeration


def primitive_offsets(k: int, d: int) -> Iterator[tuple[int, ...]]:
    """Primitive integer vectors with max-norm at most k, in lexicographic order."""
    ranges = [range(-k, k + 1)] * d

    def rec(prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if len(prefix) == d:
            g = 0
            for p in prefix:
                g = gcd(g, abs(p))
            if g == 1:
                yield prefix
            return
        for p in ranges[len(prefix)]:
            yield from rec(prefix + (p,))

    yield from rec(())


def _shift_origin(d: int, axis: int, sign: int, eta: float) -> tuple[float, ...]:
    origin = [0.0] * d
    origin[axis] = eta if sign > 0 else 1.0 - eta
    return tuple(origin)


def _vertex_origin(
    d: int, n: int, trans_flat: int, axis: int, sign: int, eta: float
) -> tuple[float, ...]:
    coords = []
    k = trans_flat
    for i in range(d):
        a = k % n
        k //= n
        x = a / n + (sign * eta if i == axis else 0.0)
        coords.append(x - math.floor(x))
    return tuple(coords)


def _random_ray(d: int, seed: int, index: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
    origin = tuple(u01(seed, index, 3 + i) for i in range(d))
    if d == 2:
        theta = 2.0 * math.pi * u01(seed, index, 17)
        direction = (math.cos(theta), math.sin(theta))
    else:
        comps = []
        for i in range(d):
            u1 = u01(seed, index, 19 + 2 * i)
            u2 = u01(seed, index, 20 + 2 * i)
            comps.append(math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2))
        norm = math.sqrt(sum(c * c for c in comps))
        if norm == 0.0:
            comps[0] = 1.0
            norm = 1.0
        direction = tuple(c / norm for c in comps)
    return origin, direction


# ---------------------------------------------------------------------------
# Pattern-search refinement


def _direction_from_angles(d: int, angles: Sequence[float]) -> tuple[float, ...]:
    if d == 2:
        (theta,) = angles
        return (math.cos(theta), math.sin(theta))
    theta, phi = angles
    return (
        math.sin(phi) * math.cos(theta),
        math.sin(phi) * math.sin(theta),
        math.cos(phi),
    )


def _angles_of_direction(direction: Sequence[float]) -> tuple[float, ...]:
    if len(direction) == 2:
        return (math.atan2(direction[1], direction[0]),)
    x, y, z = direction
    return (math.atan2(y, x), math.acos(max(-1.0, min(1.0, z))))


def _pattern_search(
    objective: Callable[[tuple[float, ...]], float],
    params0: tuple[float, ...],
    n_origin: int,
    steps0: Sequence[float],
    sweeps: int,
    tol: float,
) -> tuple[float, tuple[float, ...]]:
    """Coordinate pattern search with step halving.

    A parameter vector is (origin..., angles...); value ties are broken
    toward smaller angles, then lexicographically smaller origin.
    """

    def tie_key(val: float, params: tuple[float, ...]) -> tuple:
        return (val, params[n_origin:], params[:n_origin])

    best_val = objective(params0)
    best_params = params0
    steps = list(steps0)
    for _ in range(sweeps):
        moves = []
        for i in range(len(best_params)):
            for sgn in (1.0, -1.0):
                p = list(best_params)
                p[i] += sgn * steps[i]
                moves.append(tuple(p))
        scored = [(objective(p), p) for p in moves]
        val, p = min(scored, key=lambda e: tie_key(*e))
        if val < best_val:
            best_val, best_params = val, p
        else:
            steps = [s * 0.5 for s in steps]
            if max(steps) < tol:
                break
    return best_val, best_params


# ---------------------------------------------------------------------------
# Estimators


def _scalar_occupation(cb: Checkerboard, T: float, origin, direction) -> float:
    """Authoritative single-ray price; skeleton-bound rays price as +2."""
    try:
        g = make_geodesic(origin, direction)
        tr = traverse(g, cb.grid, T)
    except GammaHGeodesic:
        return _BIG
    return occupation_time(tr, cb)


def estimate_ell(
    cb: Checkerboard, T: float, policy: CandidatePolicy | None = None, seed: int = 0
) -> EllEstimate:
    """Upper bound of the occupation infimum at horizon T.

    Prices every lattice vertex pair within the policy's offset range
    (each line nudged off the skeleton by +-eta along every axis), a
    seeded uniform random family, and pattern-search refinements from the
    ten best candidates; returns the minimum with deterministic ties.
    """
    grid = cb.grid
    if not (0.0 < T < 1.0):
        raise HorizonOutOfRange(f"estimate_ell needs T in (0, 1), got {T}")
    if grid.d > 3:
        raise DimensionUnsupported("estimate_ell supports d in {2, 3}")
    pol = (policy or CandidatePolicy()).resolve(grid, T)
    n = grid.n
    d = grid.d
    bits = cb.cells.astype(np.float64)

    best_val = math.inf
    best_origin: tuple[float, ...] | None = None
    best_dir: tuple[float, ...] | None = None
    pool: list[tuple[float, int, tuple[float, ...], tuple[float, ...]]] = []
    pool_rank = 0

    shifts = [(axis, sign) for axis in range(d) for sign in (1, -1)]
    for offset in primitive_offsets(pol.vertex_pair_range, d):
        norm = math.sqrt(sum(p * p for p in offset))
        direction = tuple(p / norm for p in offset)
        for axis, sign in shifts:
            origin = _shift_origin(d, axis, sign, pol.eta)
            try:
                rep = traverse(Geodesic(origin, direction), grid, T)
            except GammaHGeodesic:
                continue
            values = translated_occupations(rep, bits)
            k_best = int(np.argmin(values))
            v_best = float(values[k_best])
            if v_best < best_val:
                best_val = v_best
                best_origin = _vertex_origin(d, n, k_best, axis, sign, pol.eta)
                best_dir = direction
            top = np.argpartition(values, min(10, values.size - 1))[:10]
            for k in sorted(int(t) for t in top):
                pool.append(
                    (
                        float(values[k]),
                        pool_rank,
                        _vertex_origin(d, n, k, axis, sign, pol.eta),
                        direction,
                    )
                )
                pool_rank += 1

    if pol.random_count > 0:
        origins = np.empty((pol.random_count, d))
        dirs = np.empty((pol.random_count, d))
        rays = [_random_ray(d, mix_key(seed, 0x52), i) for i in range(pol.random_count)]
        for i, (o, u) in enumerate(rays):
            origins[i] = o
            dirs[i] = u
        values = batch_occupation(origins, dirs, grid, bits, T)
        k_best = int(np.argmin(values))
        if float(values[k_best]) < best_val:
            best_val = float(values[k_best])
            best_origin, best_dir = rays[k_best]
        for k in np.argsort(values, kind="stable")[:10]:
            pool.append((float(values[k]), pool_rank, *rays[int(k)]))
            pool_rank += 1

    if best_origin is None:
        raise InvalidPolicy("candidate family is empty; increase the policy counts")

    method = "candidates"
    pool.sort(key=lambda rec: (rec[0], rec[1]))
    for val0, _, origin, direction in pool[:10]:
        if pol.refine_iters == 0:
            break
        params0 = origin + _angles_of_direction(direction)

        def objective(params: tuple[float, ...]) -> float:
            o = params[:d]
            u = _direction_from_angles(d, params[d:])
            return _scalar_occupation(cb, T, o, u)

        steps0 = [1.0 / (4 * n)] * d + [0.05] * (d - 1)
        val, params = _pattern_search(
            objective, params0, d, steps0, pol.refine_iters, pol.refine_tolerance
        )
        if val < best_val:
            best_val = val
            g = make_geodesic(params[:d], _direction_from_angles(d, params[d:]))
            best_origin, best_dir = g.origin, g.direction
            method = "refined"

    witness = make_geodesic(best_origin, best_dir)
    value = _scalar_occupation(cb, T, witness.origin, witness.direction)
    return EllEstimate(value=value, witness=witness, method=method, resolution=None)


def sweep_resolution_bound(grid: GridSpec, T: float, steps_origin: int, steps_angle: int) -> float:
    """First-order variation scale of the occupation over one sweep grid step."""
    h_origin = 1.0 / steps_origin
    h_angle = math.pi / steps_angle
    return grid.d * grid.n * h_origin + grid.d * grid.n * T * h_angle


def dense_sweep(
    cb: Checkerboard, T: float, steps_origin: int = 128, steps_angle: int = 256
) -> EllEstimate:
    """Tensor-grid minimum of the occupation over (origin, angle), d = 2.

    Origins sit at half-step offsets of a steps_origin^2 grid; angles at
    half-step offsets of steps_angle points in [0, pi).  Rays with angles
    in [pi, 2pi) retrace reversed rays of the swept family, so the grid
    covers all directions.
    """
    grid = cb.grid
    if grid.d != 2:
        raise DimensionUnsupported("dense_sweep is implemented for d = 2 only")
    if not (0.0 < T < 1.0):
        raise HorizonOutOfRange(f"dense_sweep needs T in (0, 1), got {T}")
    if steps_origin < 1 or steps_angle < 1:
        raise InvalidPolicy("sweep step counts must be positive")
    bits = cb.cells.astype(np.float64)
    axis = (np.arange(steps_origin) + 0.5) / steps_origin
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    origins = np.column_stack([gx.ravel(), gy.ravel()])
    best_val = math.inf
    best_origin = (axis[0], axis[0])
    best_theta = 0.5 * math.pi / steps_angle
    for k in range(steps_angle):
        theta = (k + 0.5) * math.pi / steps_angle
        direction = np.array([math.cos(theta), math.sin(theta)])
        dirs = np.broadcast_to(direction, origins.shape)
        values = batch_occupation(origins, dirs, grid, bits, T)
        j = int(np.argmin(values))
        if float(values[j]) < best_val:
            best_val = float(values[j])
            best_origin = (float(origins[j, 0]), float(origins[j, 1]))
            best_theta = theta
    witness = make_geodesic(best_origin, (math.cos(best_theta), math.sin(best_theta)))
    value = _scalar_occupation(cb, T, witness.origin, witness.direction)
    return EllEstimate(
        value=value,
        witness=witness,
        method="dense_sweep",
        resolution=sweep_resolution_bound(grid, T, steps_origin, steps_angle),
    )


@dataclass(frozen=True)
class MonotoneReport:
    """Occupation-infimum estimates at T and T/m with the dominance check."""

    horizon: float
    reduced_horizon: float
    divisor: int
    value_full: float
    value_reduced: float
    slack: float

    @property
    def violation(self) -> bool:
        return self.value_full < self.value_reduced - self.slack


def ell_monotone_check(
    cb: Checkerboard, T: float, m: int, policy: CandidatePolicy | None = None, seed: int = 0
) -> MonotoneReport:
    """Check the horizon-reduction direction ell(T) >= ell(T/m) on estimates."""
    if m < 2:
        raise InvalidPolicy("divisor m must be at least 2")
    if not (0.0 < T < 1.0):
        raise HorizonOutOfRange(f"ell_monotone_check needs T in (0, 1), got {T}")
    pol = policy or CandidatePolicy()
    est_full = estimate_ell(cb, T, pol, seed)
    est_reduced = estimate_ell(cb, T / m, pol, seed)
    resolved = pol.resolve(cb.grid, T)
    slack = 2.0 * resolved.refine_tolerance
    return MonotoneReport(
        horizon=T,
        reduced_horizon=T / m,
        divisor=m,
        value_full=est_full.value,
        value_reduced=est_reduced.value,
        slack=slack,
    )


__all__ = [
    "CandidatePolicy",
    "ResolvedPolicy",
    "EllEstimate",
    "estimate_ell",
    "dense_sweep",
    "sweep_resolution_bound",
    "batch_occupation",
    "translated_occupations",
    "primitive_offsets",
    "MonotoneReport",
    "ell_monotone_check",
]
