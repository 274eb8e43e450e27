"""Exact combinatorial and special-function primitives.

Everything here works on Python integers and :class:`fractions.Fraction`
so that the integer identities behind the closed-form distribution can be
checked without rounding. Functions that also accept floats (``jacobi``,
``hyp2f1_terminating``) return the numeric kind of their argument.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Union

from .errors import DomainError

__all__ = [
    "binomial",
    "pochhammer",
    "jacobi",
    "jacobi_hypergeometric",
    "hyp2f1_terminating",
    "q_number",
    "q_number_direct",
    "r_number",
    "r_number_direct",
    "as_half_integer",
]

Number = Union[int, Fraction, float]


def binomial(n: int, k: int) -> int:
    """Binomial coefficient C(n, k), zero outside ``0 <= k <= n``."""
    if n < 0:
        raise ValueError(f"binomial requires n >= 0, got n={n}")
    if k < 0 or k > n:
        return 0
    k = min(k, n - k)
    result = 1
    for i in range(1, k + 1):
        # exact at every step: result * (n - k + i) is divisible by i
        result = result * (n - k + i) // i
    return result


def pochhammer(x: Number, n: int) -> Number:
    """Rising factorial ``x (x+1) ... (x+n-1)``; 1 for ``n == 0``."""
    if n < 0:
        raise ValueError(f"pochhammer requires n >= 0, got n={n}")
    if isinstance(x, Rational) and not isinstance(x, int):
        x = Fraction(x)
    result: Number = 1
    for i in range(n):
        result = result * (x + i)
    return result


def hyp2f1_terminating(neg_n: int, b: Number, c: Number, z: Number) -> Number:
    """Terminating Gauss series 2F1(-n, b; c; z).

    Evaluated term by term using the ratio of consecutive terms, so exact
    inputs give an exact result.

    Raises:
        DomainError: if a denominator Pochhammer factor vanishes before the
            series terminates.
    """
    if neg_n > 0:
        raise ValueError(f"first parameter must be a non-positive integer, got {neg_n}")
    n = -neg_n
    b = _exact(b)
    c = _exact(c)
    z = _exact(z)
    total: Number = 1
    term: Number = 1
    for j in range(n):
        if c + j == 0:
            raise DomainError(f"2F1 pole: c={c} hits zero at term {j + 1} of {n}")
        term = term * (neg_n + j) * (b + j) / ((c + j) * (j + 1)) * z
        total = total + term
    return total


def jacobi(n: int, alpha: int, beta: int, x: Number) -> Number:
    """Jacobi polynomial P_n^(alpha, beta)(x) by the three-term recurrence.

    Rational ``x`` is evaluated in exact arithmetic, float ``x`` in binary
    floating point; the same recurrence serves both.
    """
    if n < 0 or alpha < 0 or beta < 0:
        raise ValueError("jacobi requires n, alpha, beta >= 0")
    x = _exact(x)
    if n == 0:
        return x * 0 + 1
    prev = x * 0 + 1
    cur = (alpha + 1) + (alpha + beta + 2) * (x - 1) / 2
    ab = alpha + beta
    for k in range(2, n + 1):
        s = 2 * k + ab
        lead = 2 * k * (k + ab) * (s - 2)
        mid = (s - 1) * (s * (s - 2) * x + alpha * alpha - beta * beta)
        tail = 2 * (k + alpha - 1) * (k + beta - 1) * s
        prev, cur = cur, (mid * cur - tail * prev) / lead
    return cur


def jacobi_hypergeometric(n: int, alpha: int, beta: int, x: Number) -> Number:
    """Jacobi polynomial from its 2F1 representation (independent of the recurrence)."""
    x = _exact(x)
    scale = Fraction(pochhammer(alpha + 1, n), _factorial(n))
    return scale * hyp2f1_terminating(-n, 1 + alpha + beta + n, alpha + 1, (1 - x) / 2)


def as_half_integer(n) -> Fraction:
    """Normalise an integer, a Fraction, or a ``(numerator, 2)`` pair.

    Only integers and half-integers are accepted; floats are rejected so no
    rounding can sneak into the combinatorics.
    """
    if isinstance(n, tuple):
        num, den = n
        if den not in (1, 2):
            raise ValueError(f"expected a (numerator, 2) pair, got {n!r}")
        value = Fraction(num, den)
    elif isinstance(n, (int, Fraction)):
        value = Fraction(n)
    else:
        raise TypeError(f"half-integer argument must be int, Fraction or (num, 2) pair, not {type(n).__name__}")
    if value.denominator not in (1, 2):
        raise ValueError(f"{n!r} is not an integer or half-integer")
    return value


def q_number(n, k: int) -> int:
    """Q(n, k) = 2^(2(n-k)) C(2n-k, k) for integer or half-integer n.

    Q(n, -1) is 0 by convention. For half-integer n this is the extension
    for which R(n, k) == Q(n + 1/2, k).
    """
    n = as_half_integer(n)
    if k == -1:
        return 0
    if k < 0 or k > 2 * n:
        raise ValueError(f"q_number requires 0 <= k <= 2n, got n={n}, k={k}")
    top = int(2 * n) - k
    coeff = binomial(top, k)
    if coeff == 0:
        return 0
    return coeff << int(2 * (n - k))


def q_number_direct(n: int, k: int) -> int:
    """Q(n, k) as the defining double-binomial sum over j (integer n only)."""
    if k == -1:
        return 0
    return sum(binomial(2 * n + 1, 2 * j) * binomial(n - j, k) for j in range(n - k + 1))


def r_number(n: int, k: int) -> int:
    """R(n, k) = 2^(2(n-k)+1) C(2n-k+1, k); R(n, -1) is 0."""
    if k == -1:
        return 0
    if k < 0 or k > 2 * n + 1:
        raise ValueError(f"r_number requires 0 <= k <= 2n+1, got n={n}, k={k}")
    coeff = binomial(2 * n - k + 1, k)
    if coeff == 0:
        return 0
    return coeff << (2 * (n - k) + 1)


def r_number_direct(n: int, k: int) -> int:
    """R(n, k) as the defining double-binomial sum over j."""
    if k == -1:
        return 0
    return sum(binomial(2 * n + 2, 2 * j + 1) * binomial(n - j, k) for j in range(n - k + 1))


def _factorial(n: int) -> int:
    result = 1
    for i in range(2, n + 1):
        result *= i
    return result


def _exact(x):
    # ints become Fractions so that "/" stays exact
    if isinstance(x, Rational) and not isinstance(x, Fraction):
        return Fraction(x)
    return x
