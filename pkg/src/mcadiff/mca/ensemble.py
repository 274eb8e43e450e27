"""Single-particle tracking, ensemble dispersion and diffusion estimates.

A lone particle only ever sees the block that contains it, and every block
decision is a counter hash of (seed, layer, step, block). Tracking therefore
evaluates just that one block per step and reproduces a full-grid run
bit for bit, at a cost independent of the grid size.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass

import numba as nb
import numpy as np

from . import rng
from .grid import Grid, RuleParams

__all__ = [
    "ParticleTrace",
    "DispersionSeries",
    "DiffusionEstimate",
    "track_particle",
    "ensemble_dispersion",
    "estimate_diffusion",
    "auto_width",
    "set_threads",
]

DEFAULT_CHUNKS = 100
MIN_TRIALS = 100

if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ and "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is often too old; prefer layers that need no extra runtime
    nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@dataclass
class ParticleTrace:
    """Positions of one particle; ``d[i]`` is +1 when the particle sits in the
    left column of its block at step ``start_time + i``."""

    start_time: int
    cols: np.ndarray
    rows: np.ndarray
    x: np.ndarray

    @property
    def d(self) -> np.ndarray:
        t = self.start_time + np.arange(len(self.cols))
        return np.where(self.cols % 2 == t % 2, 1, -1)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("t,col,row,x,d\n")
        for i, (c, r, x, d) in enumerate(zip(self.cols, self.rows, self.x, self.d)):
            out.write(f"{self.start_time + i},{c},{r},{x},{d}\n")
        return out.getvalue()


@nb.njit(cache=True, nogil=True)
def _advance(seed, layer, width, height, col, row, t, p, type2, ps):
    """One step of a lone particle; returns (col, row, dx)."""
    if type2 and rng.is_skipped(seed, layer, t, ps):
        return col, row, 0
    s = t & 1
    lx = (col - s) % 2
    ly = (row - s) % 2
    bc = ((col - s) % width) // 2
    br = ((row - s) % height) // 2
    code = rng.block_decision(seed, layer, t, br * (width // 2) + bc, p)
    if code == rng.NO_ROTATION:
        return col, row, 0
    # clockwise on screen: (0,0)->(1,0)->(1,1)->(0,1)->(0,0)
    if code == rng.CW:
        nx = 1 - ly
        ny = lx
    else:
        nx = ly
        ny = 1 - lx
    return (col + nx - lx) % width, (row + ny - ly) % height, nx - lx


@nb.njit(cache=True, nogil=True)
def _track(seed, layer, width, height, col, row, t0, steps, p, type2, ps, cols, rows, xs):
    x = 0
    cols[0] = col
    rows[0] = row
    xs[0] = 0
    for i in range(steps):
        col, row, dx = _advance(seed, layer, width, height, col, row, t0 + i, p, type2, ps)
        x += dx
        cols[i + 1] = col
        rows[i + 1] = row
        xs[i + 1] = x


@nb.njit(cache=True, nogil=True, parallel=True)
def _ensemble(seed, width, height, steps, trials, chunk, p, type2, ps, s1, s2, s3, s4, endpoints):
    nchunks = s1.shape[0]
    for c in nb.prange(nchunks):
        lo = c * chunk
        hi = min(trials, lo + chunk)
        for trial in range(lo, hi):
            ts = rng.trial_seed(seed, trial)
            h = rng.start_hash(ts)
            col = np.int64(h % np.uint64(width))
            row = np.int64((h >> np.uint64(32)) % np.uint64(height))
            x = 0
            for t in range(steps):
                col, row, dx = _advance(ts, 0, width, height, col, row, t, p, type2, ps)
                x += dx
                xf = np.float64(x)
                s1[c, t + 1] += x
                s2[c, t + 1] += x * x
                s3[c, t + 1] += xf * xf * xf
                s4[c, t + 1] += xf * xf * xf * xf
            endpoints[trial] = x


def track_particle(grid: Grid, rule: RuleParams, steps: int, layer: int = 0) -> ParticleTrace:
    """Trace the only particle of ``layer`` for ``steps`` steps from ``grid.time``.

    The grid itself is not modified.
    """
    if grid.popcount(layer) != 1:
        raise ValueError(f"layer {layer} must hold exactly one particle, found {grid.popcount(layer)}")
    (col, row), = grid.particles(layer)
    cols = np.empty(steps + 1, dtype=np.int64)
    rows = np.empty(steps + 1, dtype=np.int64)
    xs = np.empty(steps + 1, dtype=np.int64)
    _track(
        np.uint64(grid.seed), layer, grid.width, grid.height, int(col), int(row), grid.time, steps,
        rule.p, rule.is_type2, rule.skip_p, cols, rows, xs,
    )
    return ParticleTrace(grid.time, cols, rows, xs)


@dataclass
class DispersionSeries:
    """Per-step sample dispersion of the x displacement over independent trials.

    The ``chunk_*`` arrays hold per-chunk power sums (trials are split into a
    fixed number of chunks); they feed the bootstrap in
    :func:`estimate_diffusion`.
    """

    times: np.ndarray
    dispersion: np.ndarray
    std_error: np.ndarray
    trials: int
    chunk_counts: np.ndarray
    chunk_s1: np.ndarray
    chunk_s2: np.ndarray
    endpoints: np.ndarray
    rule: RuleParams
    seed: int
    width: int
    height: int

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("t,dispersion,std_error\n")
        for t, d, e in zip(self.times, self.dispersion, self.std_error):
            out.write(f"{t},{format(float(d), '.17g')},{format(float(e), '.17g')}\n")
        return out.getvalue()


def auto_width(dc: float, steps: int) -> int:
    """Smallest even size >= 6 sqrt(2 D_c t), so wraparound stays negligible."""
    w = math.ceil(6 * math.sqrt(2 * dc * max(steps, 1)))
    w = max(w, 2)
    return w + (w % 2)


def set_threads(n: int | None) -> None:
    if n is not None:
        nb.set_num_threads(n)


def ensemble_dispersion(
    rule: RuleParams,
    steps: int,
    trials: int,
    seed: int,
    width: int | None = None,
    height: int | None = None,
    chunks: int = DEFAULT_CHUNKS,
) -> DispersionSeries:
    """Run ``trials`` independent single-particle grids for ``steps`` steps.

    Trial ``i`` uses the grid seed ``trial_seed(seed, i)`` and starts at a
    hashed uniform cell, so the initial direction is +1 or -1 with
    probability 1/2. Sums are accumulated in fixed chunks (integers for the
    first two powers), so the output does not depend on the thread count.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if width is None:
        dc = rule.p / (2 * (1 - rule.p)) * (1 - rule.skip_p)
        width = auto_width(dc, steps)
    height = width if height is None else height
    Grid(width, height)  # validates dimensions
    nchunks = min(chunks, trials)
    chunk = -(-trials // nchunks)
    nchunks = -(-trials // chunk)
    s1 = np.zeros((nchunks, steps + 1), dtype=np.int64)
    s2 = np.zeros((nchunks, steps + 1), dtype=np.int64)
    s3 = np.zeros((nchunks, steps + 1), dtype=np.float64)
    s4 = np.zeros((nchunks, steps + 1), dtype=np.float64)
    endpoints = np.zeros(trials, dtype=np.int64)
    _ensemble(
        np.uint64(seed), width, height, steps, trials, chunk, rule.p, rule.is_type2, rule.skip_p,
        s1, s2, s3, s4, endpoints,
    )
    counts = np.array([min(trials, (c + 1) * chunk) - c * chunk for c in range(nchunks)], dtype=np.int64)
    n = float(trials)
    # exact integer totals, then one conversion
    t1 = np.array([int(v) for v in s1.sum(axis=0, dtype=object)], dtype=object)
    t2 = np.array([int(v) for v in s2.sum(axis=0, dtype=object)], dtype=object)
    mean = np.array([float(v) / n for v in t1])
    ex2 = np.array([float(v) / n for v in t2])
    ex3 = s3.sum(axis=0) / n
    ex4 = s4.sum(axis=0) / n
    var_pop = np.array([float(v2 * trials - v1 * v1) / (n * n) for v1, v2 in zip(t1, t2)])
    dispersion = var_pop * n / (n - 1)
    m4 = ex4 - 4 * mean * ex3 + 6 * mean**2 * ex2 - 3 * mean**4
    se2 = (m4 - var_pop**2 * (n - 3) / (n - 1)) / n
    std_error = np.sqrt(np.clip(se2, 0.0, None))
    return DispersionSeries(
        np.arange(steps + 1), dispersion, std_error, trials, counts, s1, s2, endpoints, rule, int(seed), width, height
    )


@dataclass
class DiffusionEstimate:
    k: float
    ci_low: float
    ci_high: float
    window: tuple[int, int]
    dx: float
    dt: float
    seed: int

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "window": [int(self.window[0]), int(self.window[1])],
            "dx": self.dx,
            "dt": self.dt,
            "seed": int(self.seed),
        }


def estimate_diffusion(
    series: DispersionSeries,
    fit_window: tuple[int, int],
    dx: float = 1.0,
    dt: float = 1.0,
    n_boot: int = 1000,
    confidence: float = 0.95,
) -> DiffusionEstimate:
    """Mean of D_t / (2t) over the window, scaled by dx^2/dt.

    The interval is a percentile bootstrap over trial chunks, seeded from the
    series seed so it is reproducible.
    """
    t0, t1 = fit_window
    t0 = max(int(t0), 1)
    t1 = int(t1)
    if t1 < t0 or t1 > series.times[-1]:
        raise ValueError(f"fit window [{t0}, {t1}] is empty or outside the series (t <= {series.times[-1]})")
    if not (dx > 0 and dt > 0):
        raise ValueError("dx and dt must be positive")
    scale = dx * dx / dt
    ts = np.arange(t0, t1 + 1)
    k = float(np.mean(series.dispersion[ts] / (2 * ts))) * scale

    gen = np.random.default_rng(np.random.SeedSequence([series.seed & 0xFFFFFFFFFFFFFFFF, 0x5EED]))
    nchunks = len(series.chunk_counts)
    weights = gen.multinomial(nchunks, np.full(nchunks, 1.0 / nchunks), size=n_boot).astype(float)
    n = weights @ series.chunk_counts.astype(float)
    a = weights @ series.chunk_s1[:, ts].astype(float)
    b = weights @ series.chunk_s2[:, ts].astype(float)
    var = (b - a * a / n[:, None]) / (n[:, None] - 1)
    boot = np.mean(var / (2 * ts), axis=1) * scale
    alpha = (1 - confidence) / 2
    lo, hi = np.quantile(boot, [alpha, 1 - alpha])
    return DiffusionEstimate(k, float(lo), float(hi), (t0, t1), float(dx), float(dt), series.seed)
