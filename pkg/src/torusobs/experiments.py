"""Experiment orchestration: the convergence-in-probability study of the
occupation infimum over growing grid subdivisions, the occupation-variance
study, and SVG rendering of boards with geodesics.

Every trial is a pure function of a seed derived as mix(master, n, trial),
so a worker pool of any size reproduces the single-threaded output byte
for byte: results are always aggregated in (n, trial) order.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classes import sample_off_skeleton
from .ell import CandidatePolicy, estimate_ell
from .errors import DimensionUnsupported, ValidationError
from .geodesic import Geodesic, traverse
from .grid import Checkerboard, GridSpec, sample_checkerboard, unflatten_index
from .largedev import chebyshev_check
from .rng import mix_key

HISTOGRAM_BINS = 50


@dataclass(frozen=True)
class ConvergenceConfig:
    d: int
    T: float
    epsilon: float
    delta: float
    n_values: tuple[int, ...]
    trials_per_n: int
    master_seed: int
    policy: CandidatePolicy = field(default_factory=CandidatePolicy)

    def __post_init__(self) -> None:
        if not (0.0 < self.T < 1.0):
            raise ValidationError("config horizon must lie in (0, 1) after reduction")
        if self.delta <= 0.0:
            raise ValidationError("delta must be positive")
        if list(self.n_values) != sorted(set(self.n_values)):
            raise ValidationError("n_values must be strictly increasing")
        if self.trials_per_n < 1:
            raise ValidationError("need at least one trial per n")

    @staticmethod
    def from_json(text: str) -> "ConvergenceConfig":
        import json

        doc = json.loads(text)
        policy = CandidatePolicy(**doc.get("policy", {}))
        return ConvergenceConfig(
            d=int(doc["d"]),
            T=float(doc["T"]),
            epsilon=float(doc["epsilon"]),
            delta=float(doc["delta"]),
            n_values=tuple(int(n) for n in doc["n_values"]),
            trials_per_n=int(doc["trials_per_n"]),
            master_seed=int(doc["master_seed"]),
            policy=policy,
        )


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    trials: int
    mean_estimate: float
    p_above: float  # estimate >= epsilon + delta
    p_below: float  # estimate <= epsilon - delta
    p_deviation: float  # |estimate - epsilon| >= delta
    wall_time: float


@dataclass(frozen=True)
class ConvergenceReport:
    """Per-n deviation statistics of the upper-bound estimator.

    The estimator bounds the true infimum from above, so ``p_above``
    over-reports the upward deviation event and ``p_below`` under-reports
    the downward one; ``wall_time`` is informational and excluded from the
    CSV serialization to keep it byte-reproducible.
    """

    config: ConvergenceConfig
    rows: tuple[ConvergenceRow, ...]
    histograms: dict[int, tuple[tuple[float, ...], tuple[int, ...]]]
    estimates: dict[int, tuple[float, ...]]


def trial_seed(master_seed: int, n: int, trial: int) -> int:
    return mix_key(master_seed, n, trial)


def _run_trial(cfg: ConvergenceConfig, n: int, trial: int) -> float:
    seed = trial_seed(cfg.master_seed, n, trial)
    grid = GridSpec(cfg.d, n)
    cb = sample_checkerboard(grid, cfg.epsilon, seed)
    est = estimate_ell(cb, cfg.T, cfg.policy, seed=mix_key(seed, 0xE11))
    return est.value


def run_convergence(cfg: ConvergenceConfig, workers: int = 1) -> ConvergenceReport:
    """Sample boards per (n, trial), estimate the infimum, aggregate deviations.

    Any trial failure aborts the run, annotated with its (n, trial, seed):
    silently dropping trials would bias the probability estimates.
    """
    rows = []
    histograms: dict[int, tuple[tuple[float, ...], tuple[int, ...]]] = {}
    estimates: dict[int, tuple[float, ...]] = {}
    edges = np.linspace(0.0, 1.0, HISTOGRAM_BINS + 1)
    for n in cfg.n_values:
        start = time.perf_counter()
        trials = list(range(cfg.trials_per_n))
        try:
            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    values = list(pool.map(lambda t: _run_trial(cfg, n, t), trials))
            else:
                values = [_run_trial(cfg, n, t) for t in trials]
        except Exception as exc:
            seeds = [trial_seed(cfg.master_seed, n, t) for t in trials]
            raise RuntimeError(
                f"trial failure at n={n} (seeds {seeds[0]}..{seeds[-1]}): {exc}"
            ) from exc
        arr = np.array(values)
        counts, _ = np.histogram(arr, bins=edges)
        histograms[n] = (tuple(edges.tolist()), tuple(int(c) for c in counts))
        estimates[n] = tuple(values)
        rows.append(
            ConvergenceRow(
                n=n,
                trials=cfg.trials_per_n,
                mean_estimate=float(arr.mean()),
                p_above=float(np.mean(arr >= cfg.epsilon + cfg.delta)),
                p_below=float(np.mean(arr <= cfg.epsilon - cfg.delta)),
                p_deviation=float(np.mean(np.abs(arr - cfg.epsilon) >= cfg.delta)),
                wall_time=time.perf_counter() - start,
            )
        )
    return ConvergenceReport(
        config=cfg, rows=tuple(rows), histograms=histograms, estimates=estimates
    )


def report_to_csv(report: ConvergenceReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["n", "trials", "mean_estimate", "p_above", "p_below", "p_deviation"]
    )
    for row in report.rows:
        writer.writerow(
            [
                row.n,
                row.trials,
                f"{row.mean_estimate:.17g}",
                f"{row.p_above:.17g}",
                f"{row.p_below:.17g}",
                f"{row.p_deviation:.17g}",
            ]
        )
    return buf.getvalue()


def histogram_to_csv(report: ConvergenceReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "bin_low", "bin_high", "count"])
    for n in sorted(report.histograms):
        edges, counts = report.histograms[n]
        for lo, hi, c in zip(edges, edges[1:], counts):
            writer.writerow([n, f"{lo:.17g}", f"{hi:.17g}", c])
    return buf.getvalue()


def run_variance_study(
    grid: GridSpec, T: float, epsilon: float, geodesic_count: int, trials: int, seed: int
) -> str:
    """Occupation-variance rows for random geodesics on one grid, as CSV."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["d", "n", "geodesic", "epsilon", "trials", "exact_var", "bound", "empirical_var"]
    )
    for i in range(geodesic_count):
        tr = sample_off_skeleton(grid, T, seed, i)
        rep = chebyshev_check(tr, grid, epsilon, trials, mix_key(seed, 0xC4EB, i))
        writer.writerow(
            [
                grid.d,
                grid.n,
                i,
                f"{epsilon:.17g}",
                trials,
                f"{rep.exact_variance:.17g}",
                f"{rep.paper_style_bound:.17g}",
                f"{rep.empirical_variance:.17g}",
            ]
        )
    return buf.getvalue()


_PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e")
_CANVAS = 512.0


def render_board(cb: Checkerboard, geodesics: list[Geodesic], T: float) -> str:
    """Deterministic SVG: black domain cells, gray grid, wrapped ray segments."""
    grid = cb.grid
    if grid.d != 2:
        raise DimensionUnsupported("rendering is implemented for d = 2 only")
    n = grid.n
    side = _CANVAS / n
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(_CANVAS)}" '
        f'height="{int(_CANVAS)}" viewBox="0 0 {int(_CANVAS)} {int(_CANVAS)}">',
        f'<rect width="{int(_CANVAS)}" height="{int(_CANVAS)}" fill="white"/>',
    ]
    for k in range(grid.cell_count()):
        if not cb.cells[k]:
            continue
        i1, i2 = unflatten_index(k, 2, n)
        x = (i1 - 1) * side
        y = _CANVAS - i2 * side
        out.append(
            f'<rect x="{x:.4f}" y="{y:.4f}" width="{side:.4f}" height="{side:.4f}" '
            f'fill="black"/>'
        )
    for k in range(n + 1):
        c = k * side
        out.append(
            f'<line x1="{c:.4f}" y1="0" x2="{c:.4f}" y2="{_CANVAS:.1f}" '
            f'stroke="#888888" stroke-width="1"/>'
        )
        out.append(
            f'<line x1="0" y1="{c:.4f}" x2="{_CANVAS:.1f}" y2="{c:.4f}" '
            f'stroke="#888888" stroke-width="1"/>'
        )
    for gi, g in enumerate(geodesics):
        color = _PALETTE[gi % len(_PALETTE)]
        tr = traverse(g, grid, T)
        for seg in tr.segments:
            # anchor at the segment midpoint: endpoints computed from it never
            # wrap-flip across the torus seam even at exact cell boundaries
            dt = seg.t_exit - seg.t_entry
            mid = g.wrapped_position(seg.t_entry + 0.5 * dt)
            entry = tuple(p - 0.5 * dt * u for p, u in zip(mid, g.direction))
            exit_pt = tuple(p + 0.5 * dt * u for p, u in zip(mid, g.direction))
            x1, y1 = entry[0] * _CANVAS, (1.0 - entry[1]) * _CANVAS
            x2, y2 = exit_pt[0] * _CANVAS, (1.0 - exit_pt[1]) * _CANVAS
            out.append(
                f'<line x1="{x1:.4f}" y1="{y1:.4f}" x2="{x2:.4f}" y2="{y2:.4f}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


__all__ = [
    "ConvergenceConfig",
    "ConvergenceRow",
    "ConvergenceReport",
    "run_convergence",
    "report_to_csv",
    "histogram_to_csv",
    "run_variance_study",
    "render_board",
    "trial_seed",
    "HISTOGRAM_BINS",
]
