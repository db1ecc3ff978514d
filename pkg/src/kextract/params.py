"""Parameter bundle, regime validation and the closed-form bounds.

Exponents are stored (``n``, ``n1``, ``m``, ``k``, ``d``, ``delta``) and the
powers of two are derived.  ``delta`` may be fractional; the threshold factor
``Delta`` is then rounded *up* to a dyadic rational with 32 fractional bits so
that every balance comparison is exact integer arithmetic.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import mpmath

DELTA_FRACTION_BITS = 32
DEFAULT_C_LEMMA1 = 1
DEFAULT_LOG_N_COEFF = 1


def _as_exponent(value: float | int) -> float | int:
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


@dataclass(frozen=True)
class Params:
    n: int
    n1: int
    m: int
    k: int
    d: int | float
    delta: float | int
    c_lemma1: int = DEFAULT_C_LEMMA1

    def __post_init__(self) -> None:
        object.__setattr__(self, "d", _as_exponent(self.d))
        object.__setattr__(self, "delta", _as_exponent(self.delta))

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def N1(self) -> int:
        return 1 << self.n1

    @property
    def M(self) -> int:
        return 1 << self.m

    @property
    def K(self) -> int:
        return 1 << self.k

    @property
    def D(self) -> int:
        if not isinstance(self.d, int):
            raise ValueError(f"D = 2^d is not an integer for d = {self.d}")
        return 1 << self.d

    @property
    def Delta(self) -> Fraction:
        """2^delta, exact for integer delta, else rounded up to a 32-bit dyadic."""
        return dyadic_power_of_two(self.delta)

    @property
    def Delta_float(self) -> float:
        return 2.0 ** self.delta

    @property
    def color_set_size(self) -> int:
        """M/D, the size of the color sets the checkers quantify over."""
        return self.M // self.D

    @property
    def encoded_bits(self) -> int:
        """N * N1 * m, the length of a table encoding."""
        return self.N * self.N1 * self.m

    def with_(self, **changes) -> Params:
        fields = asdict(self)
        fields.update(changes)
        return Params(**fields)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "n1": self.n1,
            "m": self.m,
            "k": self.k,
            "d": self.d,
            "delta": self.delta,
            "c_lemma1": self.c_lemma1,
        }

    @classmethod
    def from_json(cls, data: dict) -> Params:
        return cls(
            n=int(data["n"]),
            n1=int(data["n1"]),
            m=int(data["m"]),
            k=int(data["k"]),
            d=data["d"],
            delta=data["delta"],
            c_lemma1=int(data.get("c_lemma1", DEFAULT_C_LEMMA1)),
        )

    @classmethod
    def load(cls, path: str | Path) -> Params:
        return cls.from_json(json.loads(Path(path).read_text()))


def dyadic_power_of_two(exponent: float | int) -> Fraction:
    if isinstance(exponent, int) or float(exponent).is_integer():
        e = int(exponent)
        return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)
    with mpmath.workdps(60):
        scaled = mpmath.ceil(mpmath.power(2, mpmath.mpf(exponent) + DELTA_FRACTION_BITS))
    return Fraction(int(scaled), 1 << DELTA_FRACTION_BITS)


@dataclass(frozen=True)
class ConstraintViolation:
    constraint: str
    values: dict

    def __str__(self) -> str:
        vals = ", ".join(f"{k}={v}" for k, v in self.values.items())
        return f"{self.constraint} ({vals})"


def validate(params: Params) -> list[ConstraintViolation]:
    """All violated regime constraints; an empty list means ``params`` is valid."""
    p = params
    out: list[ConstraintViolation] = []

    def bad(name: str, **values) -> None:
        out.append(ConstraintViolation(name, values))

    for name in ("n", "n1", "m", "k"):
        value = getattr(p, name)
        if not isinstance(value, int) or value < 0:
            bad(f"{name} is a nonnegative integer", **{name: value})
    if not isinstance(p.d, int):
        bad("d is an integer", d=p.d)
    elif p.d < 0:
        bad("d >= 0", d=p.d)
    if out:
        return out
    if not p.m < p.n:
        bad("m < n", m=p.m, n=p.n)
    if not p.k <= p.n:
        bad("K <= N", K=p.K, N=p.N)
    if not p.d <= p.m:
        bad("D <= M", D=p.D, M=p.M)
    if p.delta < 0:
        bad("Delta >= 1", Delta=p.Delta_float)
    return out


def chernoff_upper_tail(mu: float, t: float) -> float:
    """min(1, exp(-t ln(t/3) mu)); vacuous (1.0) for t <= 3."""
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    exponent = -t * math.log(t / 3) * mu
    if exponent >= 0:
        return 1.0
    return math.exp(exponent)


@dataclass(frozen=True)
class LogBound:
    value: float
    meaningful: bool

    @property
    def certifies(self) -> bool:
        return self.value < 0


def existence_log_bound(params: Params) -> LogBound:
    """Natural log of the union bound on a random table failing to be balanced.

    K ln N + (M/D)(1 + ln D) - (Delta-1) ln((Delta-1)/3) K N1 / D, evaluated in
    log space.  ``meaningful`` is False when Delta - 1 <= 3, where the last
    term cannot help.
    """
    p = params
    if p.delta <= 0:
        raise ValueError(f"Delta must exceed 1, got 2^{p.delta}")
    shifted = p.Delta_float - 1.0
    ln2 = math.log(2.0)
    colors = 2.0 ** (p.m - p.d)
    value = math.fsum(
        [
            p.K * p.n * ln2,
            colors * (1.0 + p.d * ln2),
            -shifted * math.log(shifted / 3.0) * p.K * 2.0 ** (p.n1 - p.d),
        ]
    )
    return LogBound(value, shifted > 3.0)


@dataclass(frozen=True)
class BoundsInput:
    sigma: Fraction | float
    h: int
    n: int
    m: int

    def __post_init__(self) -> None:
        if not 0 < self.sigma < 1:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if self.h < 0:
            raise ValueError(f"h must be >= 0, got {self.h}")
        if not 0 < self.m < self.n:
            raise ValueError(f"need 0 < m < n, got m={self.m}, n={self.n}")

    @property
    def H(self) -> int:
        return (1 << (self.h + 1)) - 1


@dataclass(frozen=True)
class AdviceBound:
    main_term: Fraction
    correction: float

    @property
    def net(self) -> float:
        return float(self.main_term) - self.correction


def as_fraction(x) -> Fraction:
    """Exact rational for ``x``; floats are read through their shortest repr (1.03 -> 103/100)."""
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(repr(float(x)))


def advice_lower_bound(inp: BoundsInput, log_coeff: float = DEFAULT_LOG_N_COEFF) -> AdviceBound:
    """Rate loss forced on any extractor using ``h`` advice bits.

    ``main_term = (1 - sigma)/H`` is exact (a float sigma is read through its
    shortest decimal repr); ``correction = (h + log_coeff * log2 n)/m``.
    """
    main = (1 - as_fraction(inp.sigma)) / inp.H
    correction = (inp.h + log_coeff * math.log2(inp.n)) / inp.m
    return AdviceBound(main, correction)


def theorem4_params(n: int, h: int, m: int, c: int = DEFAULT_C_LEMMA1) -> Params:
    """Small-advice parameters: delta = n / 2^(h/2), d = delta + c, n1 = h, k = m."""
    delta = n / 2.0 ** (0.5 * h)
    return Params(n=n, n1=h, m=m, k=m, d=delta + c, delta=delta, c_lemma1=c)
