"""Counter-based pseudo-random primitives.

All randomness in the package flows through a 64-bit avalanche mixer
(splitmix64 finalizer).  A draw is a pure function of its key parts, so
sampling order never matters: chunked or parallel fills reproduce the
serial result bit for bit on any platform.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    x = (x + _GAMMA) & MASK64
    x ^= x >> 30
    x = (x * _MUL1) & MASK64
    x ^= x >> 27
    x = (x * _MUL2) & MASK64
    x ^= x >> 31
    return x


def mix_key(*parts: int) -> int:
    """Chain-mix integer parts into a single 64-bit key."""
    h = 0
    for p in parts:
        h = mix64(h ^ (p & MASK64))
    return h


def u01(*parts: int) -> float:
    """Uniform double in [0, 1) keyed by the given parts (53 mantissa bits)."""
    return (mix_key(*parts) >> 11) * 2.0**-53


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer; `x` must be uint64.

    Works on a copy of the input, in place, to keep temporaries (and
    memory traffic) down on large batches.
    """
    x = x + np.uint64(_GAMMA)
    tmp = np.empty_like(x)
    np.right_shift(x, np.uint64(30), out=tmp)
    np.bitwise_xor(x, tmp, out=x)
    np.multiply(x, np.uint64(_MUL1), out=x)
    np.right_shift(x, np.uint64(27), out=tmp)
    np.bitwise_xor(x, tmp, out=x)
    np.multiply(x, np.uint64(_MUL2), out=x)
    np.right_shift(x, np.uint64(31), out=tmp)
    np.bitwise_xor(x, tmp, out=x)
    return x


def mix_key_array(seed: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized mix_key(seed, c) for an array of counters."""
    h = np.uint64(mix64(seed & MASK64))
    return mix64_array(h ^ counters.astype(np.uint64))


def u01_array(seed: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized u01(seed, c) for an array of counters."""
    return (mix_key_array(seed, counters) >> np.uint64(11)) * 2.0**-53


def u01_matrix(seeds: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """(len(seeds), len(counters)) uniforms; entry [s, c] equals u01(seeds[s], c)."""
    h = mix64_array(seeds.astype(np.uint64))
    keys = mix64_array(h[:, None] ^ counters.astype(np.uint64)[None, :])
    return (keys >> np.uint64(11)) * 2.0**-53
