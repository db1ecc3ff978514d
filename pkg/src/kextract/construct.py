"""Building balanced tables: rejection sampling, lexicographic brute force,
and the empirical success rate of a random table."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import pmap
from .balance import balanced_mask, is_balanced_exact, wilson_interval
from .errors import ExhaustedError
from .params import Params, existence_log_bound
from .table import Table, enumerate_cell_batches, random_cells

BATCH = 1024


@dataclass(frozen=True)
class Construction:
    table: Table
    tries_used: int


def _batches(start: int, stop: int, size: int = BATCH) -> list[range]:
    return [range(s, min(stop, s + size)) for s in range(start, stop, size)]


def probabilistic_construct(
    params: Params, rng_seed: int, max_tries: int, threads: int = 1
) -> Construction:
    """Random tables with seeds ``rng_seed, rng_seed + 1, ...`` until one is balanced.

    Raises :class:`ExhaustedError` after ``max_tries`` failures.
    """
    if max_tries < 1:
        raise ValueError("max_tries must be >= 1")
    # one batch per worker per round keeps early exits cheap
    for round_ in _batches(0, max_tries, BATCH * max(1, threads)):
        chunks = _batches(round_.start, round_.stop)

        def verdicts(chunk: range) -> np.ndarray:
            return balanced_mask(random_cells(params, [rng_seed + i for i in chunk]), params)

        for chunk, ok in zip(chunks, pmap(verdicts, chunks, threads)):
            hits = np.flatnonzero(ok)
            if hits.size:
                attempt = chunk.start + int(hits[0])
                table = Table(params, random_cells(params, [rng_seed + attempt])[0])
                if is_balanced_exact(table) is not None:
                    raise AssertionError("batch verdict disagrees with the exact checker")
                return Construction(table, attempt + 1)
    raise ExhaustedError(f"no balanced table within {max_tries} tries", max_tries)


def brute_force_construct(params: Params, limit: int | None = None) -> Table | None:
    """Lexicographically first balanced table, or None if there is none.

    The result depends on ``params`` alone.
    """
    # small first batches keep an early hit cheap when M/D color sets are many
    for cells in enumerate_cell_batches(params, limit=limit, first_batch=16):
        hits = np.flatnonzero(balanced_mask(cells, params))
        if hits.size:
            return Table(params, cells[hits[0]])
    return None


@dataclass(frozen=True)
class RateReport:
    balanced: int
    trials: int
    ci_low: float
    ci_high: float
    log_bound: float
    bound_meaningful: bool

    @property
    def rate(self) -> float:
        return self.balanced / self.trials

    @property
    def ci_halfwidth(self) -> float:
        return (self.ci_high - self.ci_low) / 2

    @property
    def guaranteed_rate(self) -> float | None:
        """1 - exp(log_bound) when the bound certifies, else None."""
        if self.log_bound >= 0:
            return None
        return -math.expm1(self.log_bound)

    @property
    def consistent(self) -> bool:
        floor = self.guaranteed_rate
        return floor is None or self.rate >= floor - self.ci_halfwidth

    def to_json(self) -> dict:
        return {
            "rate": self.rate,
            "balanced": self.balanced,
            "trials": self.trials,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "log_bound": self.log_bound,
            "bound_meaningful": self.bound_meaningful,
            "guaranteed_rate": self.guaranteed_rate,
            "consistent": self.consistent,
        }


def empirical_balance_rate(
    params: Params, trials: int, rng_seed: int, threads: int = 1
) -> RateReport:
    """Balanced fraction of ``trials`` random tables (seeds ``rng_seed + i``)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if params.delta > 0:
        bound = existence_log_bound(params)
        log_bound, meaningful = bound.value, bound.meaningful
    else:
        log_bound, meaningful = math.inf, False
    chunks = _batches(0, trials)

    def count(chunk: range) -> int:
        cells = random_cells(params, [rng_seed + i for i in chunk])
        return int(balanced_mask(cells, params).sum())

    balanced = sum(pmap(count, chunks, threads))
    low, high = wilson_interval(balanced, trials)
    return RateReport(balanced, trials, low, high, log_bound, meaningful)
