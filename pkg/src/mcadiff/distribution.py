"""Marginal position distribution on a contiguous integer support."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._numeric import zeros


@dataclass
class Distribution:
    """Probabilities ``probs[i] = P(X = support_min + i)`` at step ``time``.

    ``probs`` is a float array in floating mode and an object array of
    Fractions in exact mode.
    """

    time: int
    support_min: int
    probs: np.ndarray
    exact: bool = False

    @property
    def support_max(self) -> int:
        return self.support_min + len(self.probs) - 1

    @property
    def xs(self) -> np.ndarray:
        return np.arange(self.support_min, self.support_min + len(self.probs))

    def prob(self, x: int):
        i = x - self.support_min
        if 0 <= i < len(self.probs):
            return self.probs[i]
        return Fraction(0) if self.exact else 0.0

    def total(self):
        return sum(self.probs, Fraction(0)) if self.exact else float(np.sum(self.probs))

    def moment(self, n: int, center=0):
        if self.exact:
            return _exact_moment(self.xs, self.probs, n, Fraction(center))
        xs = self.xs - center
        return float(np.sum(xs.astype(float) ** n * self.probs))

    def mean(self):
        return self.moment(1)

    def variance(self):
        return self.moment(2, center=self.mean())

    def on_range(self, lo: int, hi: int) -> np.ndarray:
        """Dense probability vector over ``[lo, hi]``, zero-padded."""
        out = zeros(hi - lo + 1, self.exact)
        a = max(lo, self.support_min)
        b = min(hi, self.support_max)
        if a <= b:
            out[a - lo : b - lo + 1] = self.probs[a - self.support_min : b - self.support_min + 1]
        return out

    def to_float(self) -> "Distribution":
        if not self.exact:
            return self
        return Distribution(self.time, self.support_min, np.array([float(q) for q in self.probs]), False)

    def as_dict(self) -> dict:
        return {int(x): q for x, q in zip(self.xs, self.probs)}

    def tv_distance(self, other: "Distribution") -> float:
        lo = min(self.support_min, other.support_min)
        hi = max(self.support_max, other.support_max)
        a = self.to_float().on_range(lo, hi)
        b = other.to_float().on_range(lo, hi)
        return 0.5 * float(np.abs(a - b).sum())

    def trimmed(self) -> "Distribution":
        """Drop exact-zero mass at both ends so ``support_min`` carries mass."""
        nz = [i for i, q in enumerate(self.probs) if q != 0]
        if not nz:
            return self
        lo, hi = nz[0], nz[-1]
        return Distribution(self.time, self.support_min + lo, self.probs[lo : hi + 1].copy(), self.exact)

    @classmethod
    def from_samples(cls, samples, time: int) -> "Distribution":
        """Empirical histogram of integer samples."""
        samples = np.asarray(samples, dtype=np.int64)
        lo = int(samples.min())
        counts = np.bincount(samples - lo)
        return cls(time, lo, counts / counts.sum(), False)


def _exact_moment(xs, probs, n: int, center: Fraction) -> Fraction:
    # one common denominator, then plain integer sums: far fewer gcds than
    # adding Fractions term by term
    probs = [Fraction(q) for q in probs]
    den = math.lcm(*(q.denominator for q in probs), center.denominator)
    c = center.numerator * (den // center.denominator)
    # (x - center)^n q = (x den - c)^n / den^n * num / qden
    total = sum((int(x) * den - c) ** n * q.numerator * (den // q.denominator) for x, q in zip(xs, probs))
    return Fraction(total, den ** (n + 1))
