"""Shared corpus builders for the unit and acceptance suites."""

from __future__ import annotations

import math

import pytest

from torusobs.classes import random_geodesic
from torusobs.errors import GammaHGeodesic
from torusobs.geodesic import Geodesic, Traversal, make_geodesic, traverse
from torusobs.grid import GridSpec
from torusobs.rng import u01


def random_traversals(grid: GridSpec, T: float, count: int, seed: int):
    """Deterministic stream of off-hyperplane random traversals."""
    out = []
    idx = 0
    while len(out) < count:
        idx += 1
        g = random_geodesic(grid.d, seed, idx)
        try:
            out.append(traverse(g, grid, T))
        except GammaHGeodesic:
            continue
    return out


def perturbed_ray(g: Geodesic, seed: int, idx: int, rho: float, phi: float) -> Geodesic:
    """Planar ray near g: origin jitter up to rho, angle jitter up to phi."""
    dx = (2.0 * u01(seed, idx, 101) - 1.0) * rho
    dy = (2.0 * u01(seed, idx, 102) - 1.0) * rho
    dth = (2.0 * u01(seed, idx, 103) - 1.0) * phi
    theta = math.atan2(g.direction[1], g.direction[0]) + dth
    return make_geodesic(
        (g.origin[0] + dx, g.origin[1] + dy), (math.cos(theta), math.sin(theta))
    )


def same_signature_pairs(
    grid: GridSpec, T: float, count: int, seed: int, max_tries: int = 60
) -> list[tuple[Traversal, Traversal]]:
    """Pairs of off-skeleton traversals sharing their full cell signature."""
    pairs = []
    idx = 0
    while len(pairs) < count:
        idx += 1
        base = random_geodesic(grid.d, seed, idx)
        try:
            t1 = traverse(base, grid, T)
        except GammaHGeodesic:
            continue
        if t1.touches_skeleton or t1.crossing_count == 0:
            continue
        sig = t1.visited_cells()
        for k in range(max_tries):
            g2 = perturbed_ray(base, seed ^ 0xA5A5, idx * 101 + k, 1.0 / (2 * grid.n), 0.3)
            try:
                t2 = traverse(g2, grid, T)
            except GammaHGeodesic:
                continue
            if t2.touches_skeleton:
                continue
            if t2.visited_cells() == sig:
                pairs.append((t1, t2))
                break
    return pairs


@pytest.fixture(scope="session")
def small_corpus():
    """A light version of the traversal corpus used by the acceptance gate."""
    corpus = []
    for d, n in [(2, 2), (2, 5), (2, 17), (3, 2), (3, 5)]:
        for T in (0.3, 0.9):
            corpus.extend(random_traversals(GridSpec(d, n), T, 60, seed=d * 1000 + n))
    return corpus
