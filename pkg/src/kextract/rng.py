"""Counter-based SplitMix64 generator.

Word ``i`` (0-based) of the stream seeded with ``seed`` is
``mix64(seed + (i + 1) * GOLDEN_GAMMA) mod 2**64`` where ``mix64`` is the
SplitMix64 finalizer.  Because every word is a pure function of
``(seed, i)`` the stream can be generated in any order or in parallel and is
identical on every platform.
"""

from __future__ import annotations

import numpy as np

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MUL_1 = 0xBF58476D1CE4E5B9
MIX_MUL_2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_MUL_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MUL_2) & MASK64
    return z ^ (z >> 31)


def splitmix64(seed: int, index: int) -> int:
    """Scalar reference for word ``index`` of the stream ``seed``."""
    return mix64(seed + (index + 1) * GOLDEN_GAMMA)


def splitmix64_words(seeds, count: int) -> np.ndarray:
    """Words ``0..count-1`` for each seed; shape ``(len(seeds), count)``.

    ``seeds`` may be an int or an iterable of ints; arbitrary Python ints are
    reduced modulo 2**64.
    """
    seeds = np.atleast_1d(np.asarray([int(s) & MASK64 for s in np.atleast_1d(seeds)], dtype=np.uint64))
    counters = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = seeds[:, None] + counters[None, :] * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_MUL_1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_MUL_2)
        z = z ^ (z >> np.uint64(31))
    return z


def uniform_colors(seeds, count: int, m: int) -> np.ndarray:
    """``count`` uniform m-bit values per seed, taken from the top bits of each word."""
    words = splitmix64_words(seeds, count)
    if m == 0:
        return np.zeros(words.shape, dtype=np.uint32)
    return (words >> np.uint64(64 - m)).astype(np.uint32)
