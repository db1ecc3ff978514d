"""Exceptions and combinatorial-size guards shared across the package."""

from __future__ import annotations

import os

GUARD_ENV = "BTBL_GUARD_LIMIT"


class GuardExceeded(RuntimeError):
    """An exhaustive operation would exceed its configured work limit."""

    def __init__(self, what: str, work: int, limit: int) -> None:
        super().__init__(f"{what}: work {work} exceeds guard limit {limit}")
        self.what = what
        self.work = work
        self.limit = limit


class ExhaustedError(RuntimeError):
    """A search ran out of candidates before succeeding."""

    def __init__(self, message: str, attempts: int) -> None:
        super().__init__(message)
        self.attempts = attempts


def guard_limit(default: int) -> int:
    """Return the guard limit, honouring the ``BTBL_GUARD_LIMIT`` override."""
    raw = os.environ.get(GUARD_ENV)
    if raw:
        return int(float(raw))
    return default


def check_guard(what: str, work: int, default: int, limit: int | None = None) -> None:
    limit = guard_limit(default) if limit is None else limit
    if work > limit:
        raise GuardExceeded(what, work, limit)
