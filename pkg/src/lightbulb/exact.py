"""Exact rational helpers for thresholds such as ceil(rho * d)."""
from __future__ import annotations

from fractions import Fraction


def to_fraction(x) -> Fraction:
    # the decimal a user typed (0.6), not the binary float closest to it
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def ceil_times(x, d: int, divisor: int = 1) -> int:
    """ceil(x * d / divisor) computed exactly."""
    q = to_fraction(x) * d / divisor
    return -((-q.numerator) // q.denominator)


def ceil_rho_d(rho, d: int) -> int:
    return ceil_times(rho, d)
