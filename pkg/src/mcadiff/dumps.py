"""CSV dumps shared by the chain and the closed forms.

Distribution dump: header ``t,x,prob``, one row per support point.
Moment dump: header ``t,mean,variance,mu1_plus,mu2_plus``.
"""

from __future__ import annotations

import csv
from fractions import Fraction
from typing import Iterable, TextIO

import numpy as np

from ._numeric import format_prob
from .distribution import Distribution

DIST_HEADER = ["t", "x", "prob"]
MOMENT_HEADER = ["t", "mean", "variance", "mu1_plus", "mu2_plus"]


def write_distributions(dists: Iterable[Distribution], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(DIST_HEADER)
    for dist in dists:
        for x, q in zip(dist.xs, dist.probs):
            w.writerow([dist.time, int(x), format_prob(q)])


def read_distributions(fh: TextIO) -> list[Distribution]:
    """Inverse of :func:`write_distributions`; ``num/den`` cells come back exact."""
    rows = list(csv.reader(fh))
    if not rows or rows[0] != DIST_HEADER:
        raise ValueError(f"expected header {','.join(DIST_HEADER)}")
    by_t: dict[int, list[tuple[int, str]]] = {}
    for t, x, q in rows[1:]:
        by_t.setdefault(int(t), []).append((int(x), q))
    out = []
    for t, cells in by_t.items():
        cells.sort()
        exact = "/" in cells[0][1]
        xs = [x for x, _ in cells]
        if xs != list(range(xs[0], xs[0] + len(xs))):
            raise ValueError(f"support at t={t} is not contiguous")
        if exact:
            probs = np.empty(len(cells), dtype=object)
            probs[:] = [Fraction(q) for _, q in cells]
        else:
            probs = np.array([float(q) for _, q in cells])
        out.append(Distribution(t, xs[0], probs, exact))
    return out


def write_moments(reports, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(MOMENT_HEADER)
    for r in reports:
        w.writerow([r.t, format_prob(r.mean), format_prob(r.variance), format_prob(r.mu1_plus), format_prob(r.mu2_plus)])
