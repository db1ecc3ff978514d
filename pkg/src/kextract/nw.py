"""A toy Nisan-Wigderson generator and the smallest-seed table construction.

Output bit ``i`` is the parity of the seed restricted to design set ``S_i``.
Seeds are 0/1 sequences of length ``t``; their lexicographic order is the
order of the integers they spell MSB first.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np
from numpy.random import PCG64, Generator, SeedSequence

from ._parallel import pmap
from .balance import balanced_mask
from .circuit import SOUNDNESS_SCALE, build_balance_circuit, evaluate_batch
from .errors import ExhaustedError, check_guard
from .params import Params
from .table import Table, bits_to_cells

SEED_GUARD = 1 << 20
SEED_BATCH = 1 << 13


@dataclass(frozen=True)
class NwDesign:
    t: int
    l: int
    r: int
    sets: tuple[tuple[int, ...], ...]

    @property
    def count(self) -> int:
        return len(self.sets)

    def index_matrix(self) -> np.ndarray:
        return np.array(self.sets, dtype=np.int64).reshape(self.count, self.l)

    def violations(self) -> list[str]:
        out = []
        for i, s in enumerate(self.sets):
            if len(set(s)) != self.l or any(not 0 <= j < self.t for j in s):
                out.append(f"set {i} is not an {self.l}-subset of [0, {self.t})")
        for (i, a), (j, b) in combinations(enumerate(map(set, self.sets)), 2):
            if len(a & b) > self.r:
                out.append(f"sets {i} and {j} share {len(a & b)} > {self.r} positions")
        return out

    def to_json(self) -> dict:
        return {"t": self.t, "l": self.l, "r": self.r, "sets": [list(s) for s in self.sets]}

    @classmethod
    def from_json(cls, data: dict) -> NwDesign:
        return cls(int(data["t"]), int(data["l"]), int(data["r"]), tuple(tuple(s) for s in data["sets"]))


def greedy_design(t: int, l: int, r: int, count: int) -> NwDesign:
    """First ``count`` l-subsets of [t], in lexicographic order, that meet
    every previously kept set in at most ``r`` positions."""
    if not 0 <= l <= t:
        raise ValueError(f"need 0 <= l <= t, got l={l}, t={t}")
    kept: list[tuple[int, ...]] = []
    masks: list[int] = []
    if count > 0:
        for cand in combinations(range(t), l):
            mask = sum(1 << j for j in cand)
            if all((mask & other).bit_count() <= r for other in masks):
                kept.append(cand)
                masks.append(mask)
                if len(kept) == count:
                    break
    if len(kept) < count:
        raise ExhaustedError(f"greedy design found only {len(kept)} of {count} sets", len(kept))
    return NwDesign(t, l, r, tuple(kept))


def nw_bit(seed: Sequence[int], i: int, design: NwDesign) -> int:
    """Parity of the seed on ``S_i``; reads exactly ``l`` seed positions."""
    if not 0 <= i < design.count:
        raise IndexError(f"output index {i} outside [0, {design.count})")
    if len(seed) != design.t:
        raise ValueError(f"seed has length {len(seed)}, design needs {design.t}")
    bit = 0
    for j in design.sets[i]:
        bit ^= int(seed[j]) & 1
    return bit


def seed_bits(seed) -> np.ndarray:
    if isinstance(seed, str):
        return np.frombuffer(seed.encode("ascii"), dtype=np.uint8) - ord("0")
    return np.asarray(seed, dtype=np.uint8)


def nw_gen(seed, design: NwDesign) -> np.ndarray:
    """All ``count`` output bits for one seed, or for a batch ``(T, t)``."""
    bits = seed_bits(seed)
    if bits.shape[-1] != design.t:
        raise ValueError(f"seed has length {bits.shape[-1]}, design needs {design.t}")
    if design.count == 0:
        return np.zeros(bits.shape[:-1] + (0,), dtype=np.uint8)
    return (np.take(bits, design.index_matrix(), axis=-1).sum(axis=-1) & 1).astype(np.uint8)


def seeds_from_ints(values: np.ndarray, t: int) -> np.ndarray:
    """Integers to MSB-first seed bit rows ``(T, t)``."""
    shifts = np.arange(t - 1, -1, -1, dtype=np.int64)
    return ((np.asarray(values, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.uint8)


def seed_to_str(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def design_for(params: Params, t: int, l: int, r: int) -> NwDesign:
    return greedy_design(t, l, r, params.encoded_bits)


class _Acceptor:
    """Balance test for NW tables at 1.03 Delta, direct or through the circuit."""

    def __init__(self, params: Params, mode: str, scale: Fraction) -> None:
        if mode not in ("direct", "circuit"):
            raise ValueError(f"unknown mode {mode!r}")
        self.params = params
        self.mode = mode
        self.scale = scale
        self.circuit = build_balance_circuit(params) if mode == "circuit" else None

    def __call__(self, outputs: np.ndarray) -> np.ndarray:
        if self.circuit is not None:
            return evaluate_batch(self.circuit, outputs)
        return balanced_mask(bits_to_cells(outputs, self.params), self.params, self.scale)


@dataclass(frozen=True)
class SeedResult:
    seed: np.ndarray
    seed_index: int
    table: Table
    design: NwDesign

    @property
    def seed_str(self) -> str:
        return seed_to_str(self.seed)


def accepted_seeds(
    params: Params,
    t: int,
    l: int,
    r: int,
    mode: str = "direct",
    scale: Fraction = SOUNDNESS_SCALE,
    threads: int = 1,
    limit: int | None = None,
) -> np.ndarray:
    """Acceptance verdict for every seed, indexed by the seed's integer value."""
    check_guard("NW seed enumeration", 1 << t, SEED_GUARD, limit)
    design = design_for(params, t, l, r)
    accept = _Acceptor(params, mode, scale)

    def run(start: int) -> np.ndarray:
        values = np.arange(start, min(1 << t, start + SEED_BATCH))
        return accept(nw_gen(seeds_from_ints(values, t), design))

    return np.concatenate(pmap(run, range(0, 1 << t, SEED_BATCH), threads))


def derandomized_construct(
    params: Params,
    t: int,
    l: int,
    r: int,
    mode: str = "direct",
    threads: int = 1,
    limit: int | None = None,
) -> SeedResult | None:
    """Smallest seed whose NW output is a (K, D, 1.03 Delta)-balanced table.

    ``mode="circuit"`` accepts through the balance circuit G instead, which
    implies balance at 1.03 Delta.  Batches are scanned in seed order and the
    first batch containing a hit wins, so the answer does not depend on
    ``threads``.
    """
    check_guard("NW seed enumeration", 1 << t, SEED_GUARD, limit)
    design = design_for(params, t, l, r)
    accept = _Acceptor(params, mode, SOUNDNESS_SCALE)
    group = SEED_BATCH * max(1, threads)
    for base in range(0, 1 << t, group):
        starts = range(base, min(1 << t, base + group), SEED_BATCH)

        def run(start: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
            seeds = seeds_from_ints(np.arange(start, min(1 << t, start + SEED_BATCH)), t)
            outputs = nw_gen(seeds, design)
            return seeds, outputs, accept(outputs)

        for start, (seeds, outputs, ok) in zip(starts, pmap(run, starts, threads)):
            hits = np.flatnonzero(ok)
            if hits.size:
                h = int(hits[0])
                value = start + h
                cells = bits_to_cells(outputs[h], params)
                return SeedResult(seeds[h], value, Table(params, cells), design)
    return None


def empirical_seed_success_rate(
    params: Params,
    t: int,
    l: int,
    r: int,
    sample: int,
    rng_seed: int,
    scale: Fraction = SOUNDNESS_SCALE,
) -> float:
    """Fraction of ``sample`` uniformly random seeds whose table passes at ``scale * Delta``.

    Seeds come from PCG64 seeded with ``rng_seed``, so two calls with the same
    ``rng_seed`` and different ``scale`` test the same seeds.
    """
    if sample < 1:
        raise ValueError("sample must be >= 1")
    check_guard("NW seed enumeration", 1 << t, SEED_GUARD)
    design = design_for(params, t, l, r)
    rng = Generator(PCG64(SeedSequence(rng_seed)))
    seeds = rng.integers(0, 2, size=(sample, t), dtype=np.uint8)
    outputs = nw_gen(seeds, design)
    ok = balanced_mask(bits_to_cells(outputs, params), params, scale)
    return float(ok.mean())

