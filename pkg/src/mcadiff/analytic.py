"""Closed-form distribution, generating function, moments and diffusion
coefficients of the position/direction chain started from the symmetric
initial condition (direction +1 or -1 with probability 1/2 each).

The marginal P_t(x) is evaluated from terminating sums whose terms are all
non-negative for p <= 1/2::

    (1 - 2p)^m 2F1(-m, b; c; p^2 / (2p - 1))
        = sum_k C(m, k) (b)_k / (c)_k  p^(2k) (1 - 2p)^(m - k)

so no cancellation occurs in the physical range. At p = 1/2 only the last
term survives and the distribution reduces to binomial coefficients. The
Jacobi-polynomial form is kept as an exact second backend.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from ._numeric import check_open_probability, to_number, zeros
from .combinatorics import binomial, jacobi
from .distribution import Distribution
from .errors import DomainError, RealizabilityWarning

__all__ = [
    "EXACT_DEFAULT_MAX_T",
    "ALTERNATING_FLOAT_MAX_T",
    "ALTERNATING_MAX_T",
    "PgfKernel",
    "MomentReport",
    "closed_form_prob",
    "closed_form_dist",
    "half_probability",
    "variance",
    "directional_moments",
    "pgf_eval",
    "diffusion_coefficient",
    "calibrate_p",
    "type2_diffusion_coefficient",
    "type2_calibrate_ps",
    "type2_dispersion",
    "type2_dispersion_exact",
    "normal_pdf",
    "tv_distance_to_normal",
    "is_nonmonotonic",
    "regression_p",
    "xi_to_p",
]

EXACT_DEFAULT_MAX_T = 64
# For p > 1/2 the sums alternate. Plain float is trusted up to this t
# (about 1e-11 absolute at p = 0.9); beyond it, float requests are answered
# with mpmath at a working precision that grows with t, and refused past
# ALTERNATING_MAX_T.
ALTERNATING_FLOAT_MAX_T = 20
ALTERNATING_MAX_T = 200

HALF = Fraction(1, 2)


# --------------------------------------------------------------------------
# closed-form distribution


def closed_form_prob(
    t: int,
    x: int,
    p,
    exact: Optional[bool] = None,
    backend: str = "sum",
):
    """P_t(x) for the symmetric initial condition.

    Args:
        t: step index, ``t >= 0``.
        x: position; zero outside ``[-t, t]``.
        p: rotation probability in (0, 1).
        exact: rational (True) or float (False) evaluation. Defaults to exact
            for ``t <= 64``.
        backend: ``"sum"`` (non-negative terminating sums, default) or
            ``"jacobi"`` (Jacobi-polynomial form, exact only, p != 1/2).
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if exact is None:
        exact = t <= EXACT_DEFAULT_MAX_T
    pe = to_number(p, True) if exact else to_number(p, False)
    check_open_probability(pe)
    x = abs(x)
    if x > t:
        return Fraction(0) if exact else 0.0
    if t == 0:
        return Fraction(1) if exact else 1.0
    if backend == "jacobi":
        if not exact:
            raise ValueError("the jacobi backend is exact-only")
        if pe == HALF:
            raise DomainError("the jacobi form is singular at p = 1/2")
        return _prob_jacobi(t, x, pe)
    if backend != "sum":
        raise ValueError(f"unknown backend {backend!r}")
    if pe == HALF:
        return half_probability(t, x, exact)
    if exact:
        return _prob_sum(t, x, pe)
    if pe < 0.5:
        return _prob_log(t, x, pe)
    return _prob_alternating_float(t, x, pe)


def closed_form_dist(t: int, p, exact: Optional[bool] = None, backend: str = "sum") -> Distribution:
    """Full marginal over ``[-t, t]``; built from x >= 0 by symmetry."""
    if exact is None:
        exact = t <= EXACT_DEFAULT_MAX_T
    half = [closed_form_prob(t, x, p, exact, backend) for x in range(t + 1)]
    probs = zeros(2 * t + 1, exact)
    for x, q in enumerate(half):
        probs[t + x] = q
        probs[t - x] = q
    return Distribution(t, -t, probs, exact)


def half_probability(t: int, x: int, exact: bool = True):
    """P_t(x) at p = 1/2 from binomial coefficients.

    Parity cases (t = 2n or 2n+1, x = 2j or 2j+1)::

        P_{2n+1}(2j)   = C(2n, n+j)     / 2^(2n+1)
        P_{2n}(2j)     = C(2n, n+j)     / 2^(2n+1)
        P_{2n}(2j+1)   = C(2n-1, n+j)   / 2^(2n)
        P_{2n+1}(2j+1) = C(2n+1, n+j+1) / 2^(2n+2)

    These include the edge values P_t(t) = 2^-(t+1).
    """
    x = abs(x)
    if x > t:
        num, den = 0, 1
    elif t == 0:
        num, den = 1, 1
    else:
        n, odd_t = divmod(t, 2)
        j, odd_x = divmod(x, 2)
        if not odd_x:
            num, den = binomial(2 * n, n + j), 1 << (2 * n + 1)
        elif not odd_t:
            num, den = binomial(2 * n - 1, n + j), 1 << (2 * n)
        else:
            num, den = binomial(2 * n + 1, n + j + 1), 1 << (2 * n + 2)
    return Fraction(num, den) if exact else num / den


def _terms_exact(m: int, b: int, c: int, p):
    """sum_k C(m,k) (b)_k/(c)_k p^(2k) (1-2p)^(m-k) in the arithmetic of ``p``."""
    if m < 0:
        return 0
    p2 = p * p
    s = 1 - 2 * p
    coeff = p * 0 + 1
    s_pows = [coeff]
    for _ in range(m):
        s_pows.append(s_pows[-1] * s)
    total = coeff * 0
    p2k = coeff
    for k in range(m + 1):
        total += coeff * p2k * s_pows[m - k]
        coeff = coeff * (m - k) * (b + k) / ((k + 1) * (c + k))
        p2k = p2k * p2
    return total


def _log_terms(m: int, b: int, c: int, p: float) -> float:
    """log of the same sum, for 0 < p < 1/2 (all terms positive)."""
    if m < 0:
        return -math.inf
    if m == 0:
        return 0.0
    k = np.arange(m, dtype=float)
    log_ratio = np.log((m - k) / (k + 1)) + np.log((b + k) / (c + k)) + 2 * math.log(p) - math.log1p(-2 * p)
    logs = m * math.log1p(-2 * p) + np.concatenate(([0.0], np.cumsum(log_ratio)))
    top = logs.max()
    return float(top + math.log(np.exp(logs - top).sum()))


def _parity_case(t: int, x: int):
    n, odd_t = divmod(t, 2)
    j, odd_x = divmod(x, 2)
    return n, j, odd_t, odd_x


def _prob_sum(t: int, x: int, p):
    """Interior and edge values from the non-negative sums; exact or float p."""
    if x == t:
        return p**t / 2
    n, j, odd_t, odd_x = _parity_case(t, x)
    s = 1 - 2 * p
    if odd_t and not odd_x:
        return (1 - p) * p ** (2 * j) * binomial(j + n, 2 * j) * _terms_exact(n - j, 1 + j + n, 1 + 2 * j, p)
    if not odd_t and not odd_x:
        return (
            p ** (2 * j)
            * (
                binomial(j + n, 2 * j) * _terms_exact(n - j, 1 + j + n, 1 + 2 * j, p)
                + binomial(n + j - 1, 2 * j) * s * _terms_exact(n - j - 1, j + n, 1 + 2 * j, p)
            )
            / 2
        )
    if not odd_t and odd_x:
        return (1 - p) * p ** (2 * j + 1) * binomial(j + n, 2 * j + 1) * _terms_exact(n - j - 1, 1 + j + n, 2 + 2 * j, p)
    return (
        p ** (2 * j + 1)
        * (
            binomial(j + n, 2 * j + 1) * s * _terms_exact(n - j - 1, 1 + j + n, 2 + 2 * j, p)
            + binomial(j + n + 1, 2 * j + 1) * _terms_exact(n - j, 2 + j + n, 2 + 2 * j, p)
        )
        / 2
    )


def _prob_log(t: int, x: int, p: float) -> float:
    """Float evaluation in log space for 0 < p < 1/2."""
    if x == t:
        return math.exp(t * math.log(p)) / 2
    n, j, odd_t, odd_x = _parity_case(t, x)
    lp = math.log(p)
    lq = math.log1p(-p)
    ls = math.log1p(-2 * p)

    def lc(a, b):
        c = binomial(a, b)
        return math.log(c) if c else -math.inf

    if odd_t and not odd_x:
        return math.exp(lq + 2 * j * lp + lc(j + n, 2 * j) + _log_terms(n - j, 1 + j + n, 1 + 2 * j, p))
    if not odd_t and not odd_x:
        a = lc(j + n, 2 * j) + _log_terms(n - j, 1 + j + n, 1 + 2 * j, p)
        b = lc(n + j - 1, 2 * j) + ls + _log_terms(n - j - 1, j + n, 1 + 2 * j, p)
        return 0.5 * math.exp(2 * j * lp + a) + 0.5 * math.exp(2 * j * lp + b)
    if not odd_t and odd_x:
        return math.exp(lq + (2 * j + 1) * lp + lc(j + n, 2 * j + 1) + _log_terms(n - j - 1, 1 + j + n, 2 + 2 * j, p))
    a = lc(j + n, 2 * j + 1) + ls + _log_terms(n - j - 1, 1 + j + n, 2 + 2 * j, p)
    b = lc(j + n + 1, 2 * j + 1) + _log_terms(n - j, 2 + j + n, 2 + 2 * j, p)
    return 0.5 * math.exp((2 * j + 1) * lp + a) + 0.5 * math.exp((2 * j + 1) * lp + b)


def _prob_alternating_float(t: int, x: int, p: float) -> float:
    if t <= ALTERNATING_FLOAT_MAX_T:
        return float(_prob_sum(t, x, p))
    if t <= ALTERNATING_MAX_T:
        # roughly t/3 decimal digits cancel at p = 0.9; t/2 guard digits
        with mpmath.workdps(20 + t // 2):
            return float(_prob_sum(t, x, mpmath.mpf(p)))
    raise DomainError(
        f"refusing to evaluate P_t(x) for p={p} > 1/2 at t={t} > {ALTERNATING_MAX_T}: "
        "the alternating sum cancels catastrophically"
    )


def _prob_jacobi(t: int, x: int, p: Fraction) -> Fraction:
    if x == t:
        return p**t / 2
    n, j, odd_t, odd_x = _parity_case(t, x)
    s = 1 - 2 * p
    arg = 2 * p * p / s + 1
    if odd_t and not odd_x:
        return (1 - p) * p ** (2 * j) * s ** (n - j) * jacobi(n - j, 2 * j, 0, arg)
    if not odd_t and not odd_x:
        return (1 - p) ** 2 * p ** (2 * j) * s ** (n - j - 1) * Fraction(n, n - j) * jacobi(n - j - 1, 2 * j, 1, arg)
    if not odd_t and odd_x:
        return (1 - p) * p ** (2 * j + 1) * s ** (n - j - 1) * jacobi(n - j - 1, 2 * j + 1, 0, arg)
    return (
        (1 - p) ** 2
        * p ** (2 * j + 1)
        * s ** (n - j - 1)
        * Fraction(2 * n + 1, 2 * (n - j))
        * jacobi(n - j - 1, 2 * j + 1, 1, arg)
    )


# --------------------------------------------------------------------------
# moments


@dataclass
class MomentReport:
    t: int
    mean: object
    variance: object
    mu1_plus: object
    mu1_minus: object
    mu2_plus: object
    mu2_minus: object


def _coerce(p):
    """Keep rationals exact, everything else float."""
    if isinstance(p, (Fraction, int)) and not isinstance(p, bool):
        return Fraction(p)
    if isinstance(p, str):
        return Fraction(p)
    return float(p)


def variance(t: int, p):
    """Dispersion of X_t: p^2/(2(1-p)^2) (-1 + 2(1-p)t/p + (2p-1)^t)."""
    p = _coerce(p)
    check_open_probability(p)
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return p * p / (2 * (1 - p) ** 2) * (-1 + 2 * (1 - p) * t / p + (2 * p - 1) ** t)


def directional_moments(t: int, p) -> MomentReport:
    """First and second partial moments sum_x x^n P_t(x, +-1)."""
    p = _coerce(p)
    check_open_probability(p)
    mu1 = p / (4 - 4 * p) * (1 - (2 * p - 1) ** t)
    mu2 = variance(t, p) / 2
    zero = Fraction(0) if isinstance(p, Fraction) else 0.0
    return MomentReport(t, zero, 2 * mu2, mu1, -mu1, mu2, mu2)


# --------------------------------------------------------------------------
# generating function


@dataclass
class PgfKernel:
    """Eigen-data of the 2x2 transfer matrix b(z) = [[p z, 1-p], [1-p, p/z]]."""

    p: float
    z: float
    q: float
    m: float
    r: float
    lam1: float
    lam2: float

    @classmethod
    def build(cls, p: float, z: float) -> "PgfKernel":
        check_open_probability(p)
        if not z > 0:
            raise DomainError(f"generating function evaluated only for z > 0, got z={z}")
        q = p * (z + 1 / z)
        m2 = q * q - 8 * p + 4
        if m2 < 0:
            raise DomainError(f"m(z) is imaginary at z={z}, p={p}")
        m = math.sqrt(m2)
        return cls(p, z, q, m, p * (z - 1 / z), (q + m) / 2, (q - m) / 2)


def pgf_eval(z: float, t: int, p: float) -> tuple[float, float]:
    """(G_t^+(z), G_t^-(z)) from the eigenvalue solution."""
    k = PgfKernel.build(float(p), float(z))
    if k.m == 0:
        raise DomainError("degenerate eigenvalues (m(z) = 0)")
    l1, l2, p, z = k.lam1, k.lam2, k.p, k.z
    diff = l1**t - l2**t
    g_plus = (-(l1**t) * l2 + l1 * l2**t + (1 - p + p * z) * diff) / (2 * k.m)
    g_minus = (l1 ** (t + 1) - l2 ** (t + 1) + (1 - p - p * z) * diff) / (2 * k.m)
    return g_plus, g_minus


# --------------------------------------------------------------------------
# diffusion coefficients and comparisons


def diffusion_coefficient(p):
    """D_c(p) = p / (2 (1 - p)) in cell^2 / step."""
    p = _coerce(p)
    check_open_probability(p)
    if p > HALF:
        warnings.warn(f"p={p} > 1/2 is not realisable by the automaton", RealizabilityWarning, stacklevel=2)
    return p / (2 * (1 - p))


def calibrate_p(target_dc):
    """Inverse of :func:`diffusion_coefficient`: p = 2D / (1 + 2D)."""
    d = _coerce(target_dc)
    if not d > 0:
        raise ValueError(f"target diffusion coefficient must be positive, got {target_dc}")
    p = 2 * d / (1 + 2 * d)
    if p > HALF:
        warnings.warn(f"calibrated p={p} > 1/2 is not realisable by the automaton", RealizabilityWarning, stacklevel=2)
    return p


def _check_ps(ps):
    if not 0 <= ps <= 1:
        raise ValueError(f"ps must lie in [0, 1], got {ps}")


def type2_diffusion_coefficient(ps):
    """Step-skipping automaton: (1 - ps) D_c(1/2)."""
    ps = _coerce(ps)
    _check_ps(ps)
    return (1 - ps) * diffusion_coefficient(HALF if isinstance(ps, Fraction) else 0.5)


def type2_calibrate_ps(target_dc):
    """Skip probability giving ``target_dc``; requires 0 < D <= 1/2."""
    d = _coerce(target_dc)
    if not 0 < d <= HALF:
        raise ValueError(f"the step-skipping automaton reaches only 0 < D <= 1/2, got {target_dc}")
    return 1 - 2 * d


def type2_dispersion(t: int, ps):
    """(1 - ps) D_{X_t}(1/2), the large-t description of the skipping rule."""
    ps = _coerce(ps)
    _check_ps(ps)
    half = HALF if isinstance(ps, Fraction) else 0.5
    return (1 - ps) * variance(t, half)


def type2_dispersion_exact(t: int, ps):
    """Exact dispersion of the skipping rule as simulated here.

    Step 0 always applies; a skip drawn at odd step s suppresses steps s and
    s + 1. The chain is paused while skipped, so X_t is the chain at a random
    effective time tau >= 1 with E[tau] = 1 + (t - 1)(1 - ps). Since the
    p = 1/2 dispersion tau - 1/2 is linear in tau, the mixture variance is
    1/2 + (t - 1)(1 - ps) for t >= 1.
    """
    ps = _coerce(ps)
    _check_ps(ps)
    if t == 0:
        return ps * 0
    return HALF + (t - 1) * (1 - ps) if isinstance(ps, Fraction) else 0.5 + (t - 1) * (1 - ps)


def normal_pdf(x, t: int, p: float):
    """Gaussian with the asymptotic dispersion t p / (1 - p)."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    check_open_probability(p)
    p = float(p)
    return np.sqrt((1 - p) / (2 * math.pi * t * p)) * np.exp(-(1 - p) * np.asarray(x, dtype=float) ** 2 / (2 * t * p))


def tv_distance_to_normal(t: int, p: float) -> float:
    """(1/2) sum_x |P_t(x) - f_t(x)| over the lattice points -t..t."""
    dist = closed_form_dist(t, p, exact=False)
    return 0.5 * float(np.abs(dist.probs - normal_pdf(dist.xs, t, p)).sum())


def is_nonmonotonic(dist: Distribution) -> bool:
    """True if P(x) increases somewhere on x >= 0."""
    right = dist.to_float().on_range(0, max(dist.support_max, 0))
    return bool(np.any(np.diff(right) > 0))


def regression_p(r: float) -> float:
    """Empirical quadratic model p = -0.35 r^2 + 0.86 r, r = D_c(p)/D_c(1/2)."""
    return -0.35 * r * r + 0.86 * r


def xi_to_p(xi: float) -> float:
    """Rotated-fraction parameter of integer-alphabet automata to p (xi = 2p)."""
    if not 0 < xi <= 1:
        raise ValueError(f"xi must lie in (0, 1], got {xi}")
    return xi / 2
