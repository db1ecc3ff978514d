"""The constant-depth balance-checking circuit G.

Input wires ``0 .. W-1`` carry the table encoding (W = N * N1 * m); gate ``i``
drives wire ``W + i``.  For every pair (B, A) with ``|B| = K`` and
``|A| = M/D`` the circuit forms the K * N1 indicator bits "cell is an A-cell"
(ordered by row rank in B, then seed) and feeds them to one approximate
threshold gadget with ``a = (1/0.99) * Delta * K * N1 / D`` and accuracy
0.01.  A top AND combines all gadgets.

The gadget is kept abstract: it evaluates as the exact comparison
``ones <= a``, which is one of the behaviours the approximate-counting
contract allows, and it is charged ``D_GADGET`` levels of depth.  NOT gates,
color-equality ANDs and indicator ORs are shared between pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import numpy as np

from .balance import is_balanced_exact
from .errors import check_guard
from .params import Params
from .table import Table, encode_bits

D_GADGET = 3
GADGET_EPS = Fraction(1, 100)
COMPLETENESS_FACTOR = Fraction(100, 99)
SOUNDNESS_SCALE = Fraction(103, 100)
CIRCUIT_GUARD = 10**5


class GateKind(str, Enum):
    AND = "AND"
    OR = "OR"
    NOT = "NOT"
    APPROX_THRESHOLD = "APPROX_THRESHOLD"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    inputs: tuple[int, ...]
    a: Fraction | None = None
    eps: Fraction | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind.value, "inputs": list(self.inputs)}
        if self.kind is GateKind.APPROX_THRESHOLD:
            out["a"] = [self.a.numerator, self.a.denominator]
            out["eps"] = [self.eps.numerator, self.eps.denominator]
        return out

    @classmethod
    def from_json(cls, data: dict) -> Gate:
        kind = GateKind(data["kind"])
        a = Fraction(*data["a"]) if "a" in data else None
        eps = Fraction(*data["eps"]) if "eps" in data else None
        return cls(kind, tuple(data["inputs"]), a, eps)


@dataclass
class Circuit:
    input_width: int
    gates: list[Gate]
    output: int
    d_gadget: int = D_GADGET
    pair_count: int = 0
    _depth: int | None = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.gates)

    @property
    def depth(self) -> int:
        """Longest input-to-output path; a gadget counts as ``d_gadget`` levels."""
        if self._depth is None:
            w = self.input_width
            depth = [0] * (w + len(self.gates))
            for i, gate in enumerate(self.gates):
                step = self.d_gadget if gate.kind is GateKind.APPROX_THRESHOLD else 1
                depth[w + i] = step + max((depth[j] for j in gate.inputs), default=0)
            self._depth = depth[self.output]
        return self._depth

    def stats(self) -> dict:
        return {
            "input_width": self.input_width,
            "size": self.size,
            "depth": self.depth,
            "d_gadget": self.d_gadget,
            "pair_count": self.pair_count,
            "gadgets": sum(g.kind is GateKind.APPROX_THRESHOLD for g in self.gates),
        }

    def to_json(self) -> dict:
        return {
            "input_width": self.input_width,
            "output": self.output,
            "d_gadget": self.d_gadget,
            "pair_count": self.pair_count,
            "gates": [g.to_json() for g in self.gates],
        }

    @classmethod
    def from_json(cls, data: dict) -> Circuit:
        circuit = cls(
            int(data["input_width"]),
            [Gate.from_json(g) for g in data["gates"]],
            int(data["output"]),
            int(data.get("d_gadget", D_GADGET)),
            int(data.get("pair_count", 0)),
        )
        circuit.check_wiring()
        return circuit

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> Circuit:
        return cls.from_json(json.loads(Path(path).read_text()))

    def check_wiring(self) -> None:
        """Every gate reads only inputs or earlier gates; the output exists."""
        w = self.input_width
        for i, gate in enumerate(self.gates):
            for j in gate.inputs:
                if not 0 <= j < w + i:
                    raise ValueError(f"gate {i} reads wire {j}, not yet defined")
            if gate.kind is GateKind.NOT and len(gate.inputs) != 1:
                raise ValueError(f"NOT gate {i} has {len(gate.inputs)} inputs")
        if not 0 <= self.output < w + len(self.gates):
            raise ValueError(f"output wire {self.output} does not exist")


def completeness_threshold(params: Params) -> Fraction:
    """a = (1/0.99) * Delta * (1/D) * K * N1."""
    p = params
    return COMPLETENESS_FACTOR * p.Delta * Fraction(p.K * p.N1, p.D)


def gate_count_bound(params: Params) -> int:
    p = params
    pairs = math.comb(p.N, p.K) * math.comb(p.M, p.color_set_size)
    per_pair = p.K * p.N1 * (p.color_set_size * (p.m + 1) + 1) + 1
    return pairs * per_pair + 1


class _Builder:
    def __init__(self, params: Params) -> None:
        self.p = params
        self.width = params.encoded_bits
        self.gates: list[Gate] = []
        self._not: dict[int, int] = {}
        self._eq: dict[tuple[int, int], int] = {}
        self._ind: dict[tuple[int, tuple[int, ...]], int] = {}

    def add(self, gate: Gate) -> int:
        self.gates.append(gate)
        return self.width + len(self.gates) - 1

    def negated(self, wire: int) -> int:
        if wire not in self._not:
            self._not[wire] = self.add(Gate(GateKind.NOT, (wire,)))
        return self._not[wire]

    def color_equals(self, cell: int, color: int) -> int:
        key = (cell, color)
        if key not in self._eq:
            m = self.p.m
            literals = []
            for b in range(m):
                wire = cell * m + b
                bit = color >> (m - 1 - b) & 1
                literals.append(wire if bit else self.negated(wire))
            self._eq[key] = self.add(Gate(GateKind.AND, tuple(literals)))
        return self._eq[key]

    def indicator(self, cell: int, colors: tuple[int, ...]) -> int:
        key = (cell, colors)
        if key not in self._ind:
            tests = tuple(self.color_equals(cell, c) for c in colors)
            self._ind[key] = self.add(Gate(GateKind.OR, tests))
        return self._ind[key]


def build_balance_circuit(params: Params, limit: int | None = None) -> Circuit:
    p = params
    pairs = math.comb(p.N, p.K) * math.comb(p.M, p.color_set_size)
    check_guard("balance circuit pairs", pairs, CIRCUIT_GUARD, limit)
    a = completeness_threshold(p)
    builder = _Builder(p)
    gadgets = []
    for rows in combinations(range(p.N), p.K):
        for colors in combinations(range(p.M), p.color_set_size):
            bundle = tuple(
                builder.indicator(x * p.N1 + y, colors) for x in rows for y in range(p.N1)
            )
            gadgets.append(builder.add(Gate(GateKind.APPROX_THRESHOLD, bundle, a, GADGET_EPS)))
    output = builder.add(Gate(GateKind.AND, tuple(gadgets)))
    circuit = Circuit(builder.width, builder.gates, output, D_GADGET, pairs)
    if circuit.size > gate_count_bound(p):
        raise AssertionError(f"circuit has {circuit.size} gates, over the structural bound")
    return circuit


def _as_bits(value) -> np.ndarray:
    if isinstance(value, str):
        return np.frombuffer(value.encode("ascii"), dtype=np.uint8) - ord("0")
    return np.asarray(value, dtype=np.uint8)


def evaluate_batch(circuit: Circuit, inputs) -> np.ndarray:
    """Evaluate on a batch of inputs ``(T, W)``; returns a bool array ``(T,)``."""
    inputs = _as_bits(inputs)
    if inputs.ndim != 2 or inputs.shape[1] != circuit.input_width:
        raise ValueError(f"expected inputs of width {circuit.input_width}, got shape {inputs.shape}")
    w = circuit.input_width
    values = np.empty((w + len(circuit.gates), inputs.shape[0]), dtype=bool)
    values[:w] = inputs.T.astype(bool)
    for i, gate in enumerate(circuit.gates):
        ins = values[list(gate.inputs)]
        if gate.kind is GateKind.AND:
            values[w + i] = ins.all(axis=0)
        elif gate.kind is GateKind.OR:
            values[w + i] = ins.any(axis=0)
        elif gate.kind is GateKind.NOT:
            values[w + i] = ~ins[0]
        else:
            values[w + i] = ins.sum(axis=0) <= math.floor(gate.a)
    return values[circuit.output]


def evaluate(circuit: Circuit, bits) -> int:
    bits = _as_bits(bits)
    if bits.ndim != 1 or bits.shape[0] != circuit.input_width:
        raise ValueError(f"expected {circuit.input_width} input bits, got {bits.shape}")
    return int(evaluate_batch(circuit, bits[None])[0])


@dataclass(frozen=True)
class SandwichReport:
    circuit_accepts: bool
    balanced_at_delta: bool
    balanced_at_scaled: bool
    breaches: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.breaches

    def to_json(self) -> dict:
        return {
            "circuit_accepts": self.circuit_accepts,
            "balanced_at_delta": self.balanced_at_delta,
            "balanced_at_1.03delta": self.balanced_at_scaled,
            "breaches": list(self.breaches),
        }


def check_soundness_completeness(
    params: Params, table: Table, circuit: Circuit | None = None
) -> SandwichReport:
    """Cross-check G against the exact checker at Delta and at 1.03 Delta."""
    circuit = circuit or build_balance_circuit(params)
    accepts = bool(evaluate(circuit, encode_bits(table)))
    at_delta = is_balanced_exact(table) is None
    at_scaled = is_balanced_exact(table, scale=SOUNDNESS_SCALE) is None
    breaches = []
    if accepts and not at_scaled:
        breaches.append("soundness: G accepts a table that is not (K, D, 1.03 Delta)-balanced")
    if at_delta and not accepts:
        breaches.append("completeness: G rejects a (K, D, Delta)-balanced table")
    return SandwichReport(accepts, at_delta, at_scaled, tuple(breaches))
