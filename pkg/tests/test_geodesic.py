import csv
import io
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusobs.errors import (
    GammaHGeodesic,
    GridMismatch,
    HorizonOutOfRange,
    NonpositiveHorizon,
    ValidationError,
)
from torusobs.geodesic import (
    crossings_to_csv,
    make_geodesic,
    occupation_time,
    occupation_weights,
    reduce_horizon,
    segments_to_csv,
    traverse,
)
from torusobs.grid import Checkerboard, make_grid, sample_checkerboard

SQ2 = math.sqrt(2.0)
G2 = make_grid(2, 2)


def board_with(grid, cells_on):
    cb = sample_checkerboard(grid, 0.0, 0)
    bits = cb.cells.copy()
    bits.flags.writeable = True
    for coords in cells_on:
        from torusobs.grid import flat_index

        bits[flat_index(coords, grid.n)] = 1
    return Checkerboard(grid=grid, epsilon=0.0, seed=0, cells=bits)


def diagonal_example():
    return traverse(make_geodesic((0.1, 0.2), (1, 1)), G2, 0.7)


def test_axis_aligned_example():
    tr = traverse(make_geodesic((0.25, 0.25), (1, 0)), G2, 0.5)
    cells = [seg.cell.coords for seg in tr.segments]
    assert cells == [(1, 1), (2, 1)]
    assert tr.segments[0].t_entry == 0.0
    assert tr.segments[0].t_exit == pytest.approx(0.25, abs=1e-15)
    assert tr.segments[1].t_exit == 0.5
    assert tr.counts == (1, 0)
    assert [c.axis for c in tr.crossings] == [1]
    assert tr.alphas[1] is None


def test_diagonal_example():
    tr = diagonal_example()
    cells = [seg.cell.coords for seg in tr.segments]
    assert cells == [(1, 1), (1, 2), (2, 2)]
    assert tr.segments[0].t_exit == pytest.approx(0.3 * SQ2, abs=1e-14)
    assert tr.segments[1].t_exit == pytest.approx(0.4 * SQ2, abs=1e-14)
    t20 = tr.crossing_times_of_axis(2)[0]
    t10 = tr.crossing_times_of_axis(1)[0]
    assert t20 == pytest.approx(0.3 * SQ2, abs=1e-14)
    assert t10 == pytest.approx(0.4 * SQ2, abs=1e-14)
    assert tr.alphas[0] == pytest.approx(0.5 * SQ2, abs=1e-14)
    assert tr.alphas[1] == pytest.approx(0.5 * SQ2, abs=1e-14)


def test_gamma_h_rejection():
    with pytest.raises(GammaHGeodesic):
        traverse(make_geodesic((0.0, 0.3), (0, 1)), G2, 0.5)
    # off-lattice origin on the frozen axis is fine
    tr = traverse(make_geodesic((0.3, 0.0), (0, 1)), G2, 0.5)
    assert tr.segments[0].cell.coords == (1, 1)


def test_horizon_validation():
    g = make_geodesic((0.1, 0.2), (1, 1))
    for bad in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(HorizonOutOfRange):
            traverse(g, G2, bad)


def test_occupation_examples():
    tr = diagonal_example()
    full = sample_checkerboard(G2, 1.0, 3)
    empty = sample_checkerboard(G2, 0.0, 3)
    assert occupation_time(tr, full) == pytest.approx(1.0, abs=1e-12)
    assert occupation_time(tr, empty) == 0.0
    only12 = board_with(G2, [(1, 2)])
    assert occupation_time(tr, only12) == pytest.approx(0.1 * SQ2 / 0.7, abs=1e-12)


def test_occupation_grid_mismatch():
    tr = diagonal_example()
    other = sample_checkerboard(make_grid(2, 3), 0.5, 1)
    with pytest.raises(GridMismatch):
        occupation_time(tr, other)


def test_weights_examples():
    tr = traverse(make_geodesic((0.25, 0.25), (1, 0)), G2, 0.5)
    w = {cell.coords: v for cell, v in occupation_weights(tr).items()}
    assert w[(1, 1)] == pytest.approx(0.5, abs=1e-12)
    assert w[(2, 1)] == pytest.approx(0.5, abs=1e-12)

    wd = {cell.coords: v for cell, v in occupation_weights(diagonal_example()).items()}
    assert wd[(1, 1)] == pytest.approx(0.3 * SQ2 / 0.7, abs=1e-12)
    assert wd[(1, 2)] == pytest.approx(0.1 * SQ2 / 0.7, abs=1e-12)
    assert wd[(2, 2)] == pytest.approx((0.7 - 0.4 * SQ2) / 0.7, abs=1e-12)
    assert math.fsum(wd.values()) == pytest.approx(1.0, abs=1e-12)


def test_weights_accumulate_repeat_visits():
    # wraps around the x axis within T < 1 and re-enters its starting column
    g = make_grid(2, 2)
    tr = traverse(make_geodesic((0.45, 0.2), (1, 0)), g, 0.9)
    cells = [seg.cell.coords for seg in tr.segments]
    assert cells == [(1, 1), (2, 1), (1, 1)]
    w = {cell.coords: v for cell, v in occupation_weights(tr).items()}
    assert w[(1, 1)] == pytest.approx((0.05 + 0.35) / 0.9, abs=1e-12)
    assert math.fsum(w.values()) == pytest.approx(1.0, abs=1e-12)


def test_reduce_horizon():
    assert reduce_horizon(0.5) == (0.5, 1)
    t, m = reduce_horizon(2.5)
    assert m == 3 and t == pytest.approx(2.5 / 3)
    assert reduce_horizon(1.0) == (0.5, 2)
    with pytest.raises(NonpositiveHorizon):
        reduce_horizon(0.0)
    with pytest.raises(NonpositiveHorizon):
        reduce_horizon(-1.0)


def test_geodesic_validation():
    with pytest.raises(ValidationError):
        make_geodesic((0.1, 0.1), (0, 0))
    with pytest.raises(ValidationError):
        traverse(make_geodesic((0.1, 0.1, 0.1), (1, 0, 0)), G2, 0.5)


def test_corpus_invariants(small_corpus):
    for tr in small_corpus:
        T = tr.horizon
        d, n = tr.grid.d, tr.grid.n
        durations = [seg.t_exit - seg.t_entry for seg in tr.segments]
        assert tr.segments[0].t_entry == 0.0
        assert tr.segments[-1].t_exit == T
        for a, b in zip(tr.segments, tr.segments[1:]):
            assert a.t_exit == b.t_entry
        assert abs(math.fsum(durations) - T) <= 1e-12 * T
        assert max(durations) <= math.sqrt(d) / n + 1e-12

        # crossing arithmetic and spacing sandwich
        for axis in range(1, d + 1):
            times = tr.crossing_times_of_axis(axis)
            if not times:
                continue
            alpha = tr.alphas[axis - 1]
            k = len(times) - 1
            for j, t in enumerate(times):
                assert abs(t - (times[0] + j * alpha)) <= 1e-10
            if k >= 1:
                assert T / (k * (1.0 + 2.0 / k)) <= alpha <= T / k

        # merged list strictly increasing, consistent with the per-axis order
        if not tr.touches_skeleton:
            ts = [c.time for c in tr.crossings]
            assert all(a < b for a, b in zip(ts, ts[1:]))
        seen = {}
        for c in tr.crossings:
            assert seen.get(c.axis, -1) == c.occurrence - 1
            seen[c.axis] = c.occurrence

        # cell-count floor from the per-cell dwell bound
        assert len(tr.segments) >= n * T / math.sqrt(d) - 1e-9

        # weights bounded by the dwell-fraction ceiling
        for w in occupation_weights(tr).values():
            assert w <= (T + 1.0) / T * math.sqrt(d) / n + 1e-12


@settings(max_examples=60, deadline=None)
@given(
    st.floats(min_value=0.0, max_value=0.999, exclude_max=True),
    st.floats(min_value=0.0, max_value=0.999, exclude_max=True),
    st.floats(min_value=0.0, max_value=2 * math.pi),
    st.integers(min_value=2, max_value=9),
    st.floats(min_value=0.05, max_value=0.95),
)
def test_partition_property(x, y, theta, n, T):
    g = make_grid(2, n)
    try:
        tr = traverse(make_geodesic((x, y), (math.cos(theta), math.sin(theta))), g, T)
    except GammaHGeodesic:
        return
    durations = [seg.t_exit - seg.t_entry for seg in tr.segments]
    assert abs(math.fsum(durations) - T) <= 1e-12 * T
    assert min(durations) >= 0.0


def test_csv_exports():
    tr = diagonal_example()
    seg_rows = list(csv.reader(io.StringIO(segments_to_csv(tr))))
    assert seg_rows[0] == ["seg_index", "i1", "i2", "t_entry", "t_exit"]
    assert len(seg_rows) == 1 + len(tr.segments)
    assert float(seg_rows[1][4]) == tr.segments[0].t_exit  # 17 digits round-trip
    cross_rows = list(csv.reader(io.StringIO(crossings_to_csv(tr))))
    assert cross_rows[0] == ["order", "axis_type", "occurrence", "time"]
    assert [r[1] for r in cross_rows[1:]] == ["2", "1"]
    assert float(cross_rows[1][3]) == tr.crossings[0].time
