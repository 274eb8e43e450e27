"""Small helpers for switching between exact-rational and float evaluation."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np


def to_number(value, exact: bool):
    """Coerce ``value`` to a Fraction (exact) or float.

    Floats headed for exact mode go through their shortest repr, so ``0.3``
    becomes ``3/10`` rather than the nearest binary fraction.
    """
    if exact:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, Rational):
            return Fraction(value)
        if isinstance(value, str):
            return Fraction(value)
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


def check_open_probability(p, name: str = "p") -> None:
    if not 0 < p < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {p}")


def zeros(n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(n, dtype=object)
        out[:] = [Fraction(0)] * n
        return out
    return np.zeros(n, dtype=float)


def format_prob(value) -> str:
    """17 significant digits for floats, ``num/den`` for Fractions."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return format(float(value), ".17g")
