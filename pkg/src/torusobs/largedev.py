"""Concentration checks for weighted sums of i.i.d. Bernoulli variables.

Y = sum(lambda_i * X_i) with sum(lambda_i) = 1 and lambda_i <= c/m has
tails P(|Y - eps| >= delta) bounded by a constant times exp(-delta^2 m/c).
The Monte Carlo estimator is cross-checked against exact enumeration over
all 2^m outcomes, and the exponential rate is probed with a log-linear
decay fit.  The same variance identity drives the occupation-functional
Chebyshev check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateFit, InvalidSpec, TooManyVariables
from .geodesic import Traversal, occupation_weights
from .grid import GridSpec, flat_index
from .rng import mix_key, u01_array, u01_matrix

# |Y - eps| >= delta is a closed event; the guard keeps outcomes that land
# exactly on the threshold from being lost to float summation error.
_EVENT_GUARD = 1e-12

_CHUNK_ELEMENTS = 1 << 20  # keep per-chunk arrays cache-friendly


@dataclass(frozen=True)
class WeightedSumSpec:
    """m nonnegative weights summing to 1, each at most c/m, mean epsilon."""

    m: int
    weights: tuple[float, ...]
    c: float
    epsilon: float

    def __post_init__(self) -> None:
        if self.m < 3:
            raise InvalidSpec("need at least m = 3 variables")
        if len(self.weights) != self.m:
            raise InvalidSpec("weight count must equal m")
        if any(w < 0.0 for w in self.weights):
            raise InvalidSpec("weights must be nonnegative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise InvalidSpec("weights must sum to 1")
        if self.c < 1.0:
            raise InvalidSpec("need c >= 1")
        if max(self.weights) > self.c / self.m + 1e-15:
            raise InvalidSpec("weights must satisfy max(weights) <= c/m")
        if not (0.0 <= self.epsilon <= 1.0):
            raise InvalidSpec("epsilon must lie in [0, 1]")

    @staticmethod
    def uniform(m: int, epsilon: float, c: float = 1.0) -> "WeightedSumSpec":
        return WeightedSumSpec(m=m, weights=(1.0 / m,) * m, c=c, epsilon=epsilon)


@dataclass(frozen=True)
class TailEstimate:
    empirical: float
    envelope: float
    trials: int


def tail_probability(
    spec: WeightedSumSpec, delta: float, trials: int, seed: int
) -> TailEstimate:
    """Monte Carlo estimate of P(|Y - eps| >= delta) with per-trial streams."""
    if delta < 0.0:
        raise InvalidSpec("delta must be nonnegative")
    if trials < 1:
        raise InvalidSpec("need at least one trial")
    weights = np.asarray(spec.weights)
    threshold = delta - _EVENT_GUARD
    hits = 0
    chunk = max(1, _CHUNK_ELEMENTS // spec.m)
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        count = hi - lo
        # counter = trial * m + variable index, one uniform per variable
        counters = (
            np.arange(lo, hi, dtype=np.uint64)[:, None] * np.uint64(spec.m)
            + np.arange(spec.m, dtype=np.uint64)[None, :]
        )
        bits = u01_array(seed, counters.ravel()).reshape(count, spec.m) < spec.epsilon
        y = bits @ weights
        hits += int(np.count_nonzero(np.abs(y - spec.epsilon) >= threshold))
    envelope = math.exp(-delta * delta * spec.m / spec.c)
    return TailEstimate(empirical=hits / trials, envelope=envelope, trials=trials)


def tail_exact(spec: WeightedSumSpec, delta: float) -> float:
    """Exact tail by summing over all 2^m outcomes (m <= 24)."""
    if spec.m > 24:
        raise TooManyVariables("exact enumeration is capped at m = 24")
    if delta < 0.0:
        raise InvalidSpec("delta must be nonnegative")
    sums = np.zeros(1)
    ones = np.zeros(1, dtype=np.int64)
    for w in spec.weights:
        sums = np.concatenate([sums, sums + w])
        ones = np.concatenate([ones, ones + 1])
    eps = spec.epsilon
    if eps in (0.0, 1.0):
        probs = np.where(ones == (spec.m if eps == 1.0 else 0), 1.0, 0.0)
    else:
        probs = np.exp(ones * math.log(eps) + (spec.m - ones) * math.log(1.0 - eps))
    event = np.abs(sums - eps) >= delta - _EVENT_GUARD
    return float(probs[event].sum())


@dataclass(frozen=True)
class DecayFitReport:
    ms: tuple[int, ...]
    tails: tuple[float, ...]
    excluded_ms: tuple[int, ...]
    slope: float
    slope_threshold: float
    passed: bool


def decay_fit(
    specs: Sequence[WeightedSumSpec], delta: float, trials: int, seed: int
) -> DecayFitReport:
    """Least-squares slope of log(tail) against m, checked against -delta^2/(2c)."""
    if len(specs) < 4:
        raise InvalidSpec("decay fit needs at least 4 specs")
    if len({s.m for s in specs}) != len(specs):
        raise DegenerateFit("spec family must have distinct m values")
    tails = []
    kept_ms = []
    excluded = []
    for i, spec in enumerate(specs):
        est = tail_probability(spec, delta, trials, mix_key(seed, i))
        if est.empirical > 0.0:
            kept_ms.append(spec.m)
            tails.append(est.empirical)
        else:
            excluded.append(spec.m)
    if len(kept_ms) < 2:
        raise DegenerateFit(f"only {len(kept_ms)} nonzero tails, cannot fit a slope")
    slope = float(np.polyfit(kept_ms, np.log(tails), 1)[0])
    c_max = max(s.c for s in specs)
    threshold = -delta * delta / (2.0 * c_max)
    return DecayFitReport(
        ms=tuple(kept_ms),
        tails=tuple(tails),
        excluded_ms=tuple(excluded),
        slope=slope,
        slope_threshold=threshold,
        passed=slope <= threshold,
    )


@dataclass(frozen=True)
class ChebyshevReport:
    exact_variance: float
    paper_style_bound: float
    empirical_variance: float
    trials: int

    @property
    def within_bound(self) -> bool:
        return self.exact_variance <= self.paper_style_bound + 1e-15


def chebyshev_check(
    tr: Traversal, grid: GridSpec, epsilon: float, trials: int, seed: int
) -> ChebyshevReport:
    """Exact vs empirical variance of the occupation functional on random boards.

    Exact: eps(1-eps) * sum(w^2) from the traversal weights.  The closed-form
    ceiling eps(1-eps) * (T+1)/T * sqrt(d)/n dominates it for any traversal.
    The empirical variance resamples only the visited cells, which matches
    full-board sampling bit for bit thanks to the counter-based streams.
    """
    weights = occupation_weights(tr)
    cells = sorted(weights.keys(), key=lambda c: c.coords)
    w = np.array([weights[c] for c in cells])
    exact = epsilon * (1.0 - epsilon) * float(np.dot(w, w))
    bound = (
        epsilon
        * (1.0 - epsilon)
        * (tr.horizon + 1.0)
        / tr.horizon
        * math.sqrt(grid.d)
        / grid.n
    )
    flat = np.array([flat_index(c.coords, grid.n) for c in cells], dtype=np.uint64)
    total = 0.0
    total_sq = 0.0
    chunk = max(1, _CHUNK_ELEMENTS // max(1, len(cells)))
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        board_seeds = np.array(
            [mix_key(seed, t) for t in range(lo, hi)], dtype=np.uint64
        )
        # same per-cell stream as sample_checkerboard: key = mix(board_seed, flat)
        bits = u01_matrix(board_seeds, flat) < epsilon
        m_vals = bits @ w
        total += float(m_vals.sum())
        total_sq += float((m_vals * m_vals).sum())
    mean = total / trials
    empirical = total_sq / trials - mean * mean
    if trials > 1:
        empirical *= trials / (trials - 1)
    return ChebyshevReport(
        exact_variance=exact,
        paper_style_bound=bound,
        empirical_variance=empirical,
        trials=trials,
    )


__all__ = [
    "WeightedSumSpec",
    "TailEstimate",
    "tail_probability",
    "tail_exact",
    "DecayFitReport",
    "decay_fit",
    "ChebyshevReport",
    "chebyshev_check",
]
