"""Deciding and witnessing (K, D, Delta)-balancedness.

A table is balanced when every rectangle ``B x [N1]`` with ``|B| >= K`` holds
at most ``Delta * |A|/M * |B| * N1`` cells colored from ``A``, for every color
set with ``|A| >= M/D``.  It suffices to check ``|B| = K`` and ``|A| = M/D``:
from an oversized violating pair, the K heaviest rows and then the M/D
heaviest colors still violate, because keeping the top part of a list never
lowers its average.

All comparisons are exact.  ``count > t`` for a rational ``t`` is decided as
``count > floor(t)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np
from numpy.random import PCG64, Generator, SeedSequence
from scipy.stats import binomtest

from ._parallel import pmap
from .errors import check_guard
from .params import Params, as_fraction
from .table import ColorSet, RowSet, Table, row_histograms

EXACT_GUARD = 10**7
FULL_GUARD = 10**7
SAMPLE_CHUNK = 4096
_CHUNK = 1 << 14
_WORK = 1 << 21


@dataclass(frozen=True)
class Violation:
    rows: RowSet
    colors: ColorSet
    a_cell_count: int
    threshold: Fraction

    def to_json(self) -> dict:
        return {
            "rows": self.rows.to_list(),
            "colors": self.colors.to_list(),
            "count": self.a_cell_count,
            "threshold_num": self.threshold.numerator,
            "threshold_den": self.threshold.denominator,
        }


def effective_delta(params: Params, scale=1) -> Fraction:
    return params.Delta * as_fraction(scale)


def threshold(params: Params, b_size: int, a_size: int, scale=1) -> Fraction:
    """Delta * |A|/M * |B| * N1, the largest admissible A-cell count."""
    return effective_delta(params, scale) * a_size * b_size * params.N1 / params.M


def _floor_threshold(params: Params, b_size: int, a_size: int, scale=1) -> int:
    t = math.floor(threshold(params, b_size, a_size, scale))
    # counts never exceed |B| * N1, so clamping keeps int64 safe
    return min(t, b_size * params.N1)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def count_a_cells(table: Table, rows: RowSet, colors: ColorSet) -> int:
    if not len(rows) or not len(colors):
        return 0
    hist = table.histograms()
    return int(hist[np.ix_(rows.to_list(), colors.to_list())].sum())


def _combination_chunks(n: int, r: int, size: int = _CHUNK) -> Iterator[np.ndarray]:
    combos = itertools.combinations(range(n), r)
    while True:
        chunk = list(itertools.islice(combos, size))
        if not chunk:
            return
        yield np.array(chunk, dtype=np.int64).reshape(len(chunk), r)


def _indicator(combos: np.ndarray, universe: int) -> np.ndarray:
    ind = np.zeros((combos.shape[0], universe), dtype=np.int64)
    np.put_along_axis(ind, combos, 1, axis=1)
    return ind


def _exact_work(params: Params) -> int:
    return math.comb(params.N, params.K) * math.comb(params.M, params.color_set_size)


def _top_sum(values: np.ndarray, top: int, axis: int) -> np.ndarray:
    size = values.shape[axis]
    part = np.partition(values, size - top, axis=axis)
    return np.take(part, np.arange(size - top, size), axis=axis).sum(axis=axis)


def balanced_mask(cells: np.ndarray, params: Params, scale=1, limit: int | None = None) -> np.ndarray:
    """Exact balance verdicts for a batch of tables ``(T, N, N1)``.

    For each color set of size M/D, the worst row set of size K is its K
    heaviest rows, so a table is balanced iff no color set's top-K row sum
    exceeds the threshold.
    """
    p = params
    check_guard("exact balance check", _exact_work(p), EXACT_GUARD, limit)
    cells = np.asarray(cells)
    hist = row_histograms(cells, p.M)
    thr = _floor_threshold(p, p.K, p.color_set_size, scale)
    ok = np.ones(cells.shape[0], dtype=bool)
    per_chunk = max(1, _CHUNK // p.N)
    for combos in _combination_chunks(p.M, p.color_set_size, per_chunk):
        ind = _indicator(combos, p.M)
        step = max(1, _WORK // (p.N * len(combos)))
        for start in range(0, cells.shape[0], step):
            rows = hist[start : start + step] @ ind.T
            worst = _top_sum(rows, p.K, axis=1)
            ok[start : start + step] &= ~(worst > thr).any(axis=1)
    return ok


def is_balanced_exact(table: Table, scale=1, limit: int | None = None) -> Violation | None:
    """First violating pair with ``|B| = K``, ``|A| = M/D``, or None if balanced.

    Pairs are ordered by B (lexicographic as sorted tuples), then by A.
    ``scale`` multiplies Delta, e.g. ``Fraction(103, 100)``.
    """
    p = table.params
    if balanced_mask(table.cells[None], p, scale, limit)[0]:
        return None
    hist = table.histograms()
    thr = _floor_threshold(p, p.K, p.color_set_size, scale)
    for b_combos in _combination_chunks(p.N, p.K):
        color_counts = hist[b_combos].sum(axis=1)
        worst = _top_sum(color_counts, p.color_set_size, axis=1)
        hits = np.flatnonzero(worst > thr)
        if hits.size == 0:
            continue
        b = b_combos[hits[0]]
        counts_b = color_counts[hits[0]]
        for a_combos in _combination_chunks(p.M, p.color_set_size):
            totals = counts_b[a_combos].sum(axis=1)
            a_hits = np.flatnonzero(totals > thr)
            if a_hits.size:
                a = a_combos[a_hits[0]]
                return Violation(
                    RowSet(p.N, b),
                    ColorSet(p.M, a),
                    int(totals[a_hits[0]]),
                    threshold(p, p.K, p.color_set_size, scale),
                )
    raise AssertionError("fast verdict found a violation the witness search missed")


def _mask_bits(count: int, width: int) -> np.ndarray:
    masks = np.arange(count, dtype=np.int64)
    return ((masks[:, None] >> np.arange(width)) & 1).astype(np.int64)


def is_balanced_full(table: Table, scale=1, limit: int | None = None) -> Violation | None:
    """Literal definition: every ``|B| >= K`` and every ``|A| >= M/D``.

    Exponential in N and M; meant as the oracle for :func:`is_balanced_exact`.
    The returned witness is the first in (B bitmask, A bitmask) order.
    """
    p = table.params
    check_guard("full balance check", (1 << p.N) * (1 << p.M), FULL_GUARD, limit)
    hist = table.histograms()
    a_bits = _mask_bits(1 << p.M, p.M)
    a_pop = a_bits.sum(axis=1)
    a_ok = a_pop * p.D >= p.M
    thr = np.array(
        [[_floor_threshold(p, b, a, scale) for a in range(p.M + 1)] for b in range(p.N + 1)],
        dtype=np.int64,
    )
    for start in range(0, 1 << p.N, 4096):
        b_masks = np.arange(start, min(1 << p.N, start + 4096), dtype=np.int64)
        b_bits = (b_masks[:, None] >> np.arange(p.N)) & 1
        b_pop = b_bits.sum(axis=1)
        counts = (b_bits @ hist) @ a_bits.T
        limits = thr[b_pop][:, a_pop]
        viol = (counts > limits) & (b_pop >= p.K)[:, None] & a_ok[None, :]
        hit = np.flatnonzero(viol.ravel())
        if hit.size:
            bi, ai = divmod(int(hit[0]), viol.shape[1])
            b_mask, a_mask = int(b_masks[bi]), ai
            return Violation(
                RowSet.from_mask(p.N, b_mask),
                ColorSet.from_mask(p.M, a_mask),
                int(counts[bi, ai]),
                threshold(p, int(b_pop[bi]), int(a_pop[ai]), scale),
            )
    return None


@dataclass(frozen=True)
class Estimate:
    violations: int
    samples: int
    ci_low: float
    ci_high: float

    @property
    def rate(self) -> float:
        return self.violations / self.samples

    def to_json(self) -> dict:
        return {
            "rate": self.rate,
            "violations": self.violations,
            "samples": self.samples,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


def _random_subsets(rng: Generator, count: int, universe: int, size: int) -> np.ndarray:
    keys = rng.random((count, universe))
    picks = np.argsort(keys, axis=1)[:, :size]
    mask = np.zeros((count, universe), dtype=np.int64)
    np.put_along_axis(mask, picks, 1, axis=1)
    return mask


def sampled_balance_estimate(
    table: Table, samples: int, rng_seed: int, scale=1, threads: int = 1
) -> Estimate:
    """Fraction of random (B, A) pairs of exact sizes that violate balance.

    Chunk ``i`` of ``SAMPLE_CHUNK`` samples draws from the PCG64 stream
    seeded by ``SeedSequence([rng_seed, i])``, so the result does not depend
    on ``threads``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    p = table.params
    hist = table.histograms()
    thr = _floor_threshold(p, p.K, p.color_set_size, scale)

    def run(chunk: int) -> int:
        size = min(SAMPLE_CHUNK, samples - chunk * SAMPLE_CHUNK)
        rng = Generator(PCG64(SeedSequence([rng_seed & (2**64 - 1), chunk])))
        b = _random_subsets(rng, size, p.N, p.K)
        a = _random_subsets(rng, size, p.M, p.color_set_size)
        counts = np.einsum("sn,nm,sm->s", b, hist, a)
        return int((counts > thr).sum())

    chunks = range(math.ceil(samples / SAMPLE_CHUNK))
    bad = sum(pmap(run, chunks, threads))
    low, high = wilson_interval(bad, samples)
    return Estimate(bad, samples, low, high)


def bad_rows(table: Table, colors: ColorSet, scale=1) -> RowSet:
    """Rows holding more than Delta * |A|/M * N1 cells colored from ``colors``."""
    p = table.params
    if len(colors) < p.color_set_size:
        raise ValueError(f"need |A| >= M/D = {p.color_set_size}, got {len(colors)}")
    per_row = table.histograms()[:, colors.to_list()].sum(axis=1)
    thr = _floor_threshold(p, 1, len(colors), scale)
    return RowSet(p.N, np.flatnonzero(per_row > thr))
