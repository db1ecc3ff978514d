"""Self-delimiting encodings of bit strings.

Strings are Python ``str`` over ``"0"``/``"1"``.  A pair is written as the
doubled binary length of ``x2``, the terminator ``01``, then ``x1`` and ``x2``.
``bin(0)`` is the empty string, so an empty ``x2`` costs only the terminator.
"""

from __future__ import annotations

from typing import Sequence


class DecodeError(ValueError):
    pass


def _check_bits(s: str) -> None:
    if s.strip("01"):
        raise ValueError(f"not a bit string: {s!r}")


def double_bits(u: str) -> str:
    _check_bits(u)
    return "".join(b + b for b in u)


def undouble_bits(v: str) -> str:
    if len(v) % 2:
        raise DecodeError("doubled string has odd length")
    pairs = [v[i : i + 2] for i in range(0, len(v), 2)]
    if any(p[0] != p[1] for p in pairs):
        raise DecodeError("doubled string contains a mixed pair")
    return "".join(p[0] for p in pairs)


def binary(n: int) -> str:
    return format(n, "b") if n else ""


def encode_pair(x1: str, x2: str) -> str:
    _check_bits(x1)
    _check_bits(x2)
    return double_bits(binary(len(x2))) + "01" + x1 + x2


def pair_length(len1: int, len2: int) -> int:
    """|x1| + |x2| + 2 * ceil(log2(|x2| + 1)) + 2."""
    return len1 + len2 + 2 * len2.bit_length() + 2


def _read_prefix(code: str) -> tuple[int, int]:
    """Length of x2 and the position just past the terminator."""
    length = 0
    i = 0
    while True:
        pair = code[i : i + 2]
        if len(pair) < 2:
            raise DecodeError("missing 01 terminator")
        if pair == "01":
            return length, i + 2
        if pair == "10":
            raise DecodeError(f"malformed length prefix at position {i}")
        length = 2 * length + int(pair[0])
        i += 2


def decode_pair(code: str) -> tuple[str, str]:
    _check_bits(code)
    len2, start = _read_prefix(code)
    body = code[start:]
    if len(body) < len2:
        raise DecodeError(f"payload has {len(body)} bits, x2 alone needs {len2}")
    split = len(body) - len2
    return body[:split], body[split:]


def encode_tuple(parts: Sequence[str]) -> str:
    """Right-nested pairs: (x1, (x2, (... x_k)))."""
    if not parts:
        raise ValueError("need at least one string")
    code = parts[-1]
    for part in reversed(parts[:-1]):
        code = encode_pair(part, code)
    return code


def decode_tuple(code: str, k: int) -> list[str]:
    if k < 1:
        raise ValueError("k must be >= 1")
    out = []
    for _ in range(k - 1):
        head, code = decode_pair(code)
        out.append(head)
    out.append(code)
    return out
