import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torusobs.errors import DimensionTooLarge, InvalidProbability, ValidationError
from torusobs.grid import (
    CellIndex,
    board_from_json,
    board_to_json,
    cell_bits,
    cell_of,
    flat_index,
    make_grid,
    measure,
    read_board,
    sample_checkerboard,
    unflatten_index,
    write_board,
)
from torusobs.rng import u01_matrix


def test_make_grid_counts():
    assert make_grid(2, 5).cell_count() == 25
    assert make_grid(3, 2).cell_count() == 8


def test_make_grid_overflow():
    with pytest.raises(DimensionTooLarge):
        make_grid(2, 2**40)
    with pytest.raises(ValidationError):
        make_grid(0, 3)
    with pytest.raises(ValidationError):
        make_grid(2, 0)


def test_cell_of_examples():
    g = make_grid(2, 2)
    assert cell_of(g, (0.25, 0.75)).coords == (1, 2)
    assert cell_of(g, (1.25, -0.25)).coords == (1, 2)
    assert cell_of(make_grid(2, 4), (0.5, 0.5)).coords == (3, 3)


def test_cell_of_rejects_nonfinite():
    with pytest.raises(ValidationError):
        cell_of(make_grid(2, 2), (math.inf, 0.0))


@given(
    st.integers(min_value=1, max_value=9),
    st.lists(st.integers(min_value=-50, max_value=50), min_size=2, max_size=2),
    st.integers(min_value=-3, max_value=3),
)
def test_canonicalize_periodicity(n, coords, k):
    shifted = [c + n * k for c in coords]
    assert CellIndex.canonicalize(coords, n) == CellIndex.canonicalize(shifted, n)


@given(
    st.integers(min_value=2, max_value=7),
    st.integers(min_value=-192, max_value=192),
    st.integers(min_value=-192, max_value=192),
    st.integers(min_value=-2, max_value=2),
)
def test_cell_of_periodic(n, i, j, shift):
    # dyadic coordinates keep the shifted sums exactly representable
    x, y = i / 64.0, j / 64.0
    g = make_grid(2, n)
    assert cell_of(g, (x, y)) == cell_of(g, (x + shift, y - shift * n))


def test_flat_index_roundtrip():
    g = make_grid(3, 4)
    for k in range(g.cell_count()):
        coords = unflatten_index(k, 3, 4)
        assert flat_index(coords, 4) == k
    # first coordinate varies fastest
    assert flat_index((2, 1, 1), 4) == 1
    assert flat_index((1, 2, 1), 4) == 4


def test_sampling_extremes_and_errors():
    g = make_grid(2, 6)
    assert sample_checkerboard(g, 0.0, 9).measure() == 0.0
    assert sample_checkerboard(g, 1.0, 9).measure() == 1.0
    with pytest.raises(InvalidProbability):
        sample_checkerboard(g, -0.1, 0)
    with pytest.raises(InvalidProbability):
        sample_checkerboard(g, 1.01, 0)


def test_measure_example():
    g = make_grid(2, 5)
    cb = sample_checkerboard(g, 0.0, 1)
    cells = cb.cells.copy()
    cells.flags.writeable = True
    cells[:3] = 1
    cb2 = type(cb)(grid=g, epsilon=0.12, seed=1, cells=cells)
    assert measure(cb2) == pytest.approx(0.12)


def test_sampling_determinism_and_frozen_bits():
    g = make_grid(2, 4)
    a = sample_checkerboard(g, 0.5, 7)
    b = sample_checkerboard(g, 0.5, 7)
    assert np.array_equal(a.cells, b.cells)
    # frozen stream regression guard (little-endian packed, base64)
    assert board_to_json(a).find('"cells": "jpU="') != -1
    assert not np.array_equal(a.cells, sample_checkerboard(g, 0.5, 8).cells)


def test_cell_bits_match_board():
    g = make_grid(2, 9)
    cb = sample_checkerboard(g, 0.37, 123)
    idx = np.arange(g.cell_count(), dtype=np.uint64)
    assert np.array_equal(cell_bits(g, 0.37, 123, idx), cb.cells)


def test_board_file_roundtrip(tmp_path):
    g = make_grid(2, 11)
    cb = sample_checkerboard(g, 1 / 3, 987654321)
    path = tmp_path / "board.json"
    write_board(cb, str(path))
    back = read_board(str(path))
    assert back.grid == cb.grid
    assert back.epsilon == cb.epsilon
    assert back.seed == cb.seed
    assert np.array_equal(back.cells, cb.cells)
    assert board_to_json(back) == board_to_json(cb)


def test_binomial_concentration_n32():
    # oracle first: exact binomial(1024, 1/2) mass of |X/1024 - 0.5| <= 0.06
    lo = math.ceil(1024 * 0.44)
    hi = math.floor(1024 * 0.56)
    inside = sum(math.comb(1024, k) for k in range(lo, hi + 1))
    p_inside = inside / 2**1024
    assert p_inside > 0.999
    g = make_grid(2, 32)
    seeds = np.arange(1000, dtype=np.uint64)
    mat = u01_matrix(seeds, np.arange(g.cell_count(), dtype=np.uint64)) < 0.5
    measures = mat.mean(axis=1)
    frac = float(np.mean(np.abs(measures - 0.5) <= 0.06))
    assert frac >= 0.95


def test_cell_independence_surrogate():
    g = make_grid(2, 10)
    seeds = np.arange(10_000, dtype=np.uint64)
    pairs = [(0, 1), (0, 99), (17, 18), (5, 55), (33, 77)]
    flat = np.array(sorted({i for p in pairs for i in p}), dtype=np.uint64)
    pos = {int(v): j for j, v in enumerate(flat)}
    bits = (u01_matrix(seeds, flat) < 0.5).astype(float)
    for a, b in pairs:
        corr = np.corrcoef(bits[:, pos[a]], bits[:, pos[b]])[0, 1]
        assert abs(corr) < 0.05


def test_mean_measure_matches_epsilon():
    g = make_grid(2, 10)
    seeds = np.arange(10_000, dtype=np.uint64)
    bits = u01_matrix(seeds, np.arange(100, dtype=np.uint64)) < 0.3
    assert abs(float(bits.mean()) - 0.3) < 0.01
