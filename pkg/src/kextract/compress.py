"""Combinatorial side of the compression argument.

A seed ``y`` whose cell ``(x, y)`` lands in a small color set ``A`` can be
named by its rank among the A-cells of row ``x``.  On a good row there are few
such cells, so the rank is shorter than the seed itself.  True Kolmogorov
complexity is uncomputable; ``A`` is supplied by the caller (or taken as the
table's most frequent colors) and :func:`complexity_proxy` is a reporting aid
only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby
from typing import Protocol

import numpy as np

from .balance import bad_rows, threshold
from .table import ColorSet, Table


@dataclass(frozen=True)
class RankCertificate:
    row: int
    colors: ColorSet
    rank: int
    rank_space: int

    @property
    def bit_length(self) -> int:
        """ceil(log2(max(rank_space, 1)))."""
        return max(self.rank_space - 1, 0).bit_length()

    def to_json(self) -> dict:
        return {
            "row": self.row,
            "colors": self.colors.to_list(),
            "rank": self.rank,
            "rank_space": self.rank_space,
            "bit_length": self.bit_length,
        }

    @classmethod
    def from_json(cls, data: dict, M: int) -> RankCertificate:
        return cls(int(data["row"]), ColorSet(M, data["colors"]), int(data["rank"]), int(data["rank_space"]))


def _a_seeds(table: Table, x: int, colors: ColorSet) -> np.ndarray:
    row = table.cells[x]
    return np.flatnonzero(colors.mask()[row])


def encode_seed_rank(table: Table, x: int, colors: ColorSet, y: int) -> RankCertificate:
    if table[x, y] not in colors:
        raise ValueError(f"cell ({x}, {y}) has color {table[x, y]}, not in {colors.to_list()}")
    seeds = _a_seeds(table, x, colors)
    return RankCertificate(x, colors, int(np.searchsorted(seeds, y)), len(seeds))


def decode_seed_rank(table: Table, cert: RankCertificate) -> int:
    seeds = _a_seeds(table, cert.row, cert.colors)
    if not 0 <= cert.rank < len(seeds):
        raise ValueError(f"rank {cert.rank} outside [0, {len(seeds)})")
    return int(seeds[cert.rank])


@dataclass(frozen=True)
class RowRank:
    row: int
    rank_space: int
    bit_length: int
    compresses: bool


@dataclass(frozen=True)
class RankBoundReport:
    colors: ColorSet
    threshold: Fraction
    rows: list[RowRank]

    @property
    def max_rank_space(self) -> int:
        return max((r.rank_space for r in self.rows), default=0)

    @property
    def all_compress(self) -> bool:
        return all(r.compresses for r in self.rows)


def good_row_rank_bound(table: Table, colors: ColorSet) -> RankBoundReport:
    """Rank-space sizes on every good row (rows outside :func:`bad_rows`).

    ``compresses`` marks rows where the rank takes fewer than n1 bits.
    """
    p = table.params
    cap = 2.0 ** (p.m - p.d + p.c_lemma1)
    if len(colors) > cap:
        raise ValueError(f"|A| = {len(colors)} exceeds 2^(m-d+c) = {cap:g}")
    bad = bad_rows(table, colors)
    per_row = table.histograms()[:, colors.to_list()].sum(axis=1)
    rows = []
    for x in range(p.N):
        if x in bad:
            continue
        space = int(per_row[x])
        bits = max(space - 1, 0).bit_length()
        rows.append(RowRank(x, space, bits, space < p.N1))
    return RankBoundReport(colors, threshold(table.params, 1, len(colors)), rows)


def most_frequent_colors(table: Table, count: int | None = None) -> ColorSet:
    """The ``count`` (default M/D) most frequent colors; ties go to the smaller color."""
    p = table.params
    count = p.color_set_size if count is None else count
    totals = table.histograms().sum(axis=0)
    order = sorted(range(p.M), key=lambda c: (-int(totals[c]), c))
    return ColorSet(p.M, order[:count])


def exists_escaping_advice(table: Table, x: int, colors: ColorSet) -> int | None:
    """Smallest seed whose cell in row ``x`` avoids ``colors``."""
    outside = np.flatnonzero(~colors.mask()[table.cells[x]])
    return int(outside[0]) if outside.size else None


class ComplexityEstimator(Protocol):
    def __call__(self, bits: str) -> float: ...


HEADER_BITS = 2


def _gamma_length(v: int) -> int:
    return 2 * v.bit_length() - 1


def coding_estimate(bits: str) -> float:
    """Heuristic description length of a 0/1 string, in bits.

    Minimum of the literal string, a zeroth-order code (ones count plus the
    binomial entropy bound) and an Elias-gamma run-length code, plus a
    2-bit mode header.  It is not a bound on Kolmogorov complexity in either
    direction.
    """
    n = len(bits)
    if n == 0:
        return float(HEADER_BITS)
    ones = bits.count("1")
    p = ones / n
    entropy = 0.0 if p in (0.0, 1.0) else -n * (p * math.log2(p) + (1 - p) * math.log2(1 - p))
    zeroth = entropy + math.log2(n + 1)
    runs = 1 + sum(_gamma_length(len(list(g))) for _, g in groupby(bits))
    return HEADER_BITS + min(float(n), zeroth, float(runs))


def complexity_proxy(bits: str, estimator: ComplexityEstimator | None = None) -> float:
    """Estimated complexity of ``bits`` using ``estimator`` (default :func:`coding_estimate`)."""
    return (estimator or coding_estimate)(bits)
