"""Counter-based random streams.

Every stochastic component derives its own independent stream from a tuple of
integer keys (e.g. ``(seed, iteration, particle)``) so that the order in which
components draw never changes any other component's randomness.  Streams are
backed by Philox, which is counter-based: the same key tuple always yields the
same stream, independent of process or thread interleaving.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def fold_key(*keys: int) -> int:
    """Mix an arbitrary tuple of integers into a single 64-bit key."""
    acc = 0x5851F42D4C957F2D
    for k in keys:
        acc = _splitmix64(acc ^ (int(k) & _MASK64))
    return acc


def stream(*keys: int) -> np.random.Generator:
    """Independent generator keyed by the given integers."""
    k0 = fold_key(*keys)
    k1 = _splitmix64(k0)
    bitgen = np.random.Philox(key=np.array([k0, k1], dtype=np.uint64))
    return np.random.Generator(bitgen)


def unit_interval(*keys: int) -> float:
    """One deterministic uniform draw in [0, 1) for the given key tuple."""
    return float(stream(*keys).random())


# -- vectorized counter-based draws (hot path) ------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _vec_splitmix64(x: np.ndarray) -> np.ndarray:
    """Elementwise splitmix64 finalizer; matches :func:`_splitmix64` exactly."""
    x = (x + _GOLDEN).astype(np.uint64)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def key_block(base: int, count: int) -> np.ndarray:
    """Keys equal to fold_key(*base_keys, i) for i in range(count), given
    base = fold_key(*base_keys)."""
    return _vec_splitmix64(np.uint64(base) ^ np.arange(count, dtype=np.uint64))


def uniform_matrix(keys: np.ndarray, length: int) -> np.ndarray:
    """(len(keys), length) matrix of uniforms; row i is the counter-based
    stream of keys[i].  Used for the per-particle selection draws, where
    creating one Generator per particle would dominate the phase."""
    counters = keys[:, None] + np.arange(1, length + 1, dtype=np.uint64) * _GOLDEN
    bits = _vec_splitmix64(counters)
    return (bits >> np.uint64(11)) * (1.0 / (1 << 53))
