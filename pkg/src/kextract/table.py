"""Extractor tables E: [N] x [N1] -> [M] and the row/color subsets they are tested on.

Cells are kept as an immutable ``(N, N1)`` unsigned array.  The canonical
bit encoding is row-major with each color written MSB first: bit
``((x * N1) + y) * m + b`` is bit ``b`` of cell ``(x, y)``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import check_guard
from .params import Params
from .rng import uniform_colors

MAGIC = b"BTBL"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sB5Hd")

ENUMERATION_GUARD = 1 << 24


class BitSet:
    """An immutable subset of ``range(universe)`` stored as an int bit vector."""

    __slots__ = ("universe", "bits", "_card")

    def __init__(self, universe: int, items: Iterable[int] = ()) -> None:
        bits = 0
        for i in items:
            i = int(i)
            if not 0 <= i < universe:
                raise ValueError(f"element {i} outside [0, {universe})")
            bits |= 1 << i
        self.universe = universe
        self.bits = bits
        self._card = bits.bit_count()

    @classmethod
    def from_mask(cls, universe: int, bits: int):
        if bits >> universe:
            raise ValueError(f"mask {bits:#x} has bits outside [0, {universe})")
        return cls(universe, (i for i in range(universe) if bits >> i & 1))

    @classmethod
    def full(cls, universe: int):
        return cls(universe, range(universe))

    def __len__(self) -> int:
        return self._card

    def __iter__(self) -> Iterator[int]:
        return (i for i in range(self.universe) if self.bits >> i & 1)

    def __contains__(self, i) -> bool:
        return 0 <= i < self.universe and bool(self.bits >> i & 1)

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and (self.universe, self.bits) == (other.universe, other.bits)

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.universe, self.bits))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.universe}, {list(self)})"

    def mask(self) -> np.ndarray:
        out = np.zeros(self.universe, dtype=bool)
        out[list(self)] = True
        return out

    def to_list(self) -> list[int]:
        return list(self)


class RowSet(BitSet):
    """A set B of table rows."""


class ColorSet(BitSet):
    """A set A of colors."""


def _cell_dtype(m: int):
    return np.uint8 if m <= 8 else np.uint16 if m <= 16 else np.uint32


@dataclass(frozen=True, eq=False)
class Table:
    params: Params
    cells: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        p = self.params
        cells = np.asarray(self.cells)
        if cells.shape != (p.N, p.N1):
            raise ValueError(f"cells have shape {cells.shape}, expected {(p.N, p.N1)}")
        if cells.size and (cells.min() < 0 or cells.max() >= p.M):
            raise ValueError(f"cell colors must lie in [0, {p.M})")
        cells = cells.astype(_cell_dtype(p.m), copy=True)
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Table)
            and self.params == other.params
            and np.array_equal(self.cells, other.cells)
        )

    def __getitem__(self, xy: tuple[int, int]) -> int:
        return extract(self, *xy)

    def histograms(self) -> np.ndarray:
        """Per-row color counts, shape ``(N, M)``."""
        return row_histograms(self.cells, self.params.M)


def row_histograms(cells: np.ndarray, M: int) -> np.ndarray:
    """Color counts per row for one table ``(N, N1)`` or a batch ``(T, N, N1)``."""
    cells = np.asarray(cells)
    flat = cells.reshape(-1, cells.shape[-1]).astype(np.int64)
    rows = flat.shape[0]
    idx = (np.arange(rows, dtype=np.int64)[:, None] * M + flat).ravel()
    hist = np.bincount(idx, minlength=rows * M).reshape(rows, M)
    return hist.reshape(cells.shape[:-1] + (M,))


def extract(table: Table, x: int, y: int) -> int:
    p = table.params
    if not (0 <= x < p.N and 0 <= y < p.N1):
        raise IndexError(f"cell ({x}, {y}) outside [{p.N}] x [{p.N1}]")
    return int(table.cells[x, y])


def cells_to_bits(cells: np.ndarray, m: int) -> np.ndarray:
    """Encode cells (any leading batch shape, last two dims N x N1) MSB first."""
    cells = np.asarray(cells, dtype=np.int64)
    lead = cells.shape[:-2]
    flat = cells.reshape(lead + (-1,))
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    bits = (flat[..., None] >> shifts) & 1
    return bits.reshape(lead + (-1,)).astype(np.uint8)


def bits_to_cells(bits: np.ndarray, params: Params) -> np.ndarray:
    """Inverse of :func:`cells_to_bits`; accepts a batch ``(T, N*N1*m)``."""
    p = params
    bits = np.asarray(bits, dtype=np.int64)
    lead = bits.shape[:-1]
    if bits.shape[-1] != p.encoded_bits:
        raise ValueError(f"expected {p.encoded_bits} bits, got {bits.shape[-1]}")
    weights = 1 << np.arange(p.m - 1, -1, -1, dtype=np.int64)
    cells = (bits.reshape(lead + (p.N * p.N1, p.m)) * weights).sum(axis=-1)
    return cells.reshape(lead + (p.N, p.N1))


def encode_bits(table: Table) -> np.ndarray:
    """The ``N * N1 * m`` bit encoding of ``table`` as a uint8 0/1 array."""
    return cells_to_bits(table.cells, table.params.m)


def decode_bits(params: Params, bits) -> Table:
    if isinstance(bits, str):
        bits = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    return Table(params, bits_to_cells(np.asarray(bits), params))


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def constant_table(params: Params, color: int = 0) -> Table:
    return Table(params, np.full((params.N, params.N1), color))


def latin_table(params: Params) -> Table:
    """E(x, y) = (x + y) mod M."""
    p = params
    x = np.arange(p.N)[:, None]
    y = np.arange(p.N1)[None, :]
    return Table(p, (x + y) % p.M)


def random_cells(params: Params, seeds) -> np.ndarray:
    """Cells of ``random_table(params, s)`` for each seed, shape ``(T, N, N1)``."""
    p = params
    colors = uniform_colors(seeds, p.N * p.N1, p.m)
    return colors.reshape(-1, p.N, p.N1)


def random_table(params: Params, rng_seed: int) -> Table:
    """Independent uniform cells drawn from the SplitMix64 stream ``rng_seed``.

    Cell ``(x, y)`` takes the top ``m`` bits of stream word ``x * N1 + y``.
    """
    return Table(params, random_cells(params, [rng_seed])[0])


def enumerate_tables(params: Params, limit: int | None = None) -> Iterator[Table]:
    """Every table, in lexicographic order of the bit encoding."""
    batches = enumerate_cell_batches(params, limit=limit)
    return (Table(params, cells) for batch in batches for cells in batch)


def enumerate_cell_batches(
    params: Params, batch_size: int = 1 << 14, limit: int | None = None, first_batch: int | None = None
) -> Iterator[np.ndarray]:
    """Lexicographic table enumeration as cell batches ``(T, N, N1)``.

    Batches start at ``first_batch`` tables (default ``batch_size``) and
    double up to ``batch_size``.  The guard is checked eagerly, before the
    first batch is requested.
    """
    bits = params.encoded_bits
    total = 1 << bits
    check_guard("table enumeration", total, ENUMERATION_GUARD, limit)
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)

    def batches() -> Iterator[np.ndarray]:
        start, size = 0, max(1, min(first_batch or batch_size, batch_size))
        while start < total:
            codes = np.arange(start, min(total, start + size), dtype=np.int64)
            yield bits_to_cells((codes[:, None] >> shifts) & 1, params)
            start += size
            size = min(2 * size, batch_size)

    return batches()


def save_table(table: Table, path: str | Path) -> None:
    Path(path).write_bytes(table_to_bytes(table))


def table_to_bytes(table: Table) -> bytes:
    p = table.params
    if not isinstance(p.d, int):
        raise ValueError("table files need an integer d")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, p.n, p.n1, p.m, p.k, p.d, float(p.delta))
    return header + np.packbits(encode_bits(table)).tobytes()


def table_from_bytes(data: bytes, c_lemma1: int = 1) -> Table:
    if len(data) < _HEADER.size:
        raise ValueError("truncated table file")
    magic, version, n, n1, m, k, d, delta = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported table format version {version}")
    params = Params(n=n, n1=n1, m=m, k=k, d=d, delta=delta, c_lemma1=c_lemma1)
    payload = data[_HEADER.size :]
    need = math.ceil(params.encoded_bits / 8)
    if len(payload) != need:
        raise ValueError(f"payload has {len(payload)} bytes, expected {need}")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[: params.encoded_bits]
    return decode_bits(params, bits)


def load_table(path: str | Path) -> Table:
    return table_from_bytes(Path(path).read_bytes())
