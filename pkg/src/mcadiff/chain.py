"""Exact evolution and sampling of the position/direction Markov chain.

The chain state is the joint law P_t(x, d) of the particle coordinate and
its direction d = +1/-1. One step moves x by d with probability p (keeping
d), or leaves x in place and reverses d with probability 1 - p.
This module is the ground-truth oracle the closed forms are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._numeric import check_open_probability, to_number, zeros
from .distribution import Distribution

__all__ = [
    "ChainState",
    "Trajectory",
    "init",
    "step",
    "evolve",
    "evolve_series",
    "marginal",
    "raw_moment",
    "sample_path",
    "sample_endpoints",
]


@dataclass
class ChainState:
    time: int
    support_min: int
    probs_plus: np.ndarray
    probs_minus: np.ndarray
    exact: bool = False

    def total(self):
        if self.exact:
            return sum(self.probs_plus, Fraction(0)) + sum(self.probs_minus, Fraction(0))
        return float(self.probs_plus.sum() + self.probs_minus.sum())

    def prob(self, x: int, d: int):
        i = x - self.support_min
        arr = self.probs_plus if d > 0 else self.probs_minus
        if 0 <= i < len(arr):
            return arr[i]
        return Fraction(0) if self.exact else 0.0


@dataclass
class Trajectory:
    """Sample path; ``steps[t] == (x_t, d_t)`` with ``x_0 == 0``."""

    steps: list = field(default_factory=list)

    @property
    def xs(self) -> np.ndarray:
        return np.array([s[0] for s in self.steps], dtype=np.int64)

    @property
    def ds(self) -> np.ndarray:
        return np.array([s[1] for s in self.steps], dtype=np.int64)


def init(eps=Fraction(1, 2), exact: bool = True) -> ChainState:
    """Point mass at x = 0 with direction +1 drawn with probability ``eps``."""
    eps = to_number(eps, exact)
    if not 0 <= eps <= 1:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    plus = zeros(1, exact)
    minus = zeros(1, exact)
    plus[0] = eps
    minus[0] = 1 - eps
    return ChainState(0, 0, plus, minus, exact)


def step(state: ChainState, p) -> ChainState:
    """Apply the master equation once.

    P_{t+1}(x, d) = p P_t(x - d, d) + (1 - p) P_t(x, -d)
    """
    p = to_number(p, state.exact)
    check_open_probability(p)
    n = len(state.probs_plus)
    plus = zeros(n + 2, state.exact)
    minus = zeros(n + 2, state.exact)
    # new index i <-> x = support_min - 1 + i
    plus[2:] += p * state.probs_plus
    plus[1:-1] += (1 - p) * state.probs_minus
    minus[:-2] += p * state.probs_minus
    minus[1:-1] += (1 - p) * state.probs_plus
    return _trim(ChainState(state.time + 1, state.support_min - 1, plus, minus, state.exact))


def evolve(eps, p, t: int, exact: bool = True) -> ChainState:
    """``t`` steps from :func:`init` (``eps``)."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    state = init(eps, exact)
    p = to_number(p, exact)
    check_open_probability(p)
    for _ in range(t):
        state = step(state, p)
    return state


def evolve_series(eps, p, t_max: int, exact: bool = True):
    """Yield the states for t = 0, 1, ..., t_max."""
    state = init(eps, exact)
    p = to_number(p, exact)
    check_open_probability(p)
    yield state
    for _ in range(t_max):
        state = step(state, p)
        yield state


def marginal(state: ChainState) -> Distribution:
    """Position marginal P_t(x) = P_t(x, +1) + P_t(x, -1)."""
    return Distribution(state.time, state.support_min, state.probs_plus + state.probs_minus, state.exact)


def raw_moment(state: ChainState, n: int, direction: int | None = None):
    """Moments of X_t.

    With ``direction`` given this is the partial raw moment
    sum_x x^n P_t(x, direction). Without it, the n-th raw moment of the
    marginal is returned, except that ``n == 2`` gives the central moment
    (the dispersion), matching how the dispersion is defined for the chain.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if direction is None:
        dist = marginal(state)
        return dist.variance() if n == 2 else dist.moment(n)
    if direction not in (1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    arr = state.probs_plus if direction > 0 else state.probs_minus
    dist = Distribution(state.time, state.support_min, arr, state.exact)
    return dist.moment(n)


def sample_path(p: float, eps: float, t: int, rng: np.random.Generator) -> Trajectory:
    """Draw one trajectory of length ``t + 1``; one uniform per step."""
    check_open_probability(p)
    if not 0 <= eps <= 1:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    d = 1 if rng.random() < eps else -1
    x = 0
    steps = [(x, d)]
    for u in rng.random(t):
        if u < p:
            x += d
        else:
            d = -d
        steps.append((x, d))
    return Trajectory(steps)


def sample_endpoints(p: float, eps: float, t: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorised endpoints X_t of ``size`` independent paths."""
    check_open_probability(p)
    d = np.where(rng.random(size) < eps, 1, -1).astype(np.int64)
    x = np.zeros(size, dtype=np.int64)
    for _ in range(t):
        move = rng.random(size) < p
        x += np.where(move, d, 0)
        d = np.where(move, d, -d)
    return x


def _trim(state: ChainState) -> ChainState:
    nz = np.flatnonzero((state.probs_plus != 0) | (state.probs_minus != 0))
    if nz.size == 0:
        return state
    lo, hi = int(nz[0]), int(nz[-1])
    if lo == 0 and hi == len(state.probs_plus) - 1:
        return state
    return ChainState(
        state.time,
        state.support_min + lo,
        state.probs_plus[lo : hi + 1].copy(),
        state.probs_minus[lo : hi + 1].copy(),
        state.exact,
    )
