"""Bit-packed toroidal grid for the Margolus-neighbourhood automaton.

Each layer is a ``(height, nwords)`` array of uint64 with cell ``(col, row)``
stored at bit ``col % 64`` of word ``col // 64``. Rows increase downward.
Blocks of the even partition are anchored at even (col, row); the odd
partition is anchored at odd indices and wraps around the torus. Step ``t``
uses the partition with parity ``t % 2``.

Within a block the cells are NW = (c, r), NE = (c+1, r), SW = (c, r+1),
SE = (c+1, r+1). Clockwise means NW -> NE -> SE -> SW -> NW on screen.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng

__all__ = [
    "RuleParams",
    "Grid",
    "new_grid",
    "rotate_block",
    "step",
    "block_of",
]

_EVEN_BITS = np.uint64(0x5555555555555555)
_ONE = np.uint64(1)


@dataclass(frozen=True)
class RuleParams:
    """Rotation rule for one layer.

    ``type1``: each block rotates CW with probability ``p``, CCW with
    probability ``p`` (0 < p <= 1/2), otherwise stays.
    ``type2``: blocks always rotate (p = 1/2), but at every odd step the
    whole layer skips the next two steps with probability ``ps``.
    """

    variant: str = "type1"
    p: float = 0.5
    ps: float = 0.0

    def __post_init__(self):
        if self.variant == "type1":
            if not 0 < self.p <= 0.5:
                raise ValueError(f"type1 rule needs 0 < p <= 1/2, got p={self.p}")
        elif self.variant == "type2":
            if not 0 <= self.ps <= 1:
                raise ValueError(f"type2 rule needs 0 <= ps <= 1, got ps={self.ps}")
            object.__setattr__(self, "p", 0.5)
        else:
            raise ValueError(f"unknown rule variant {self.variant!r}")

    @classmethod
    def type1(cls, p: float) -> "RuleParams":
        return cls("type1", float(p), 0.0)

    @classmethod
    def type2(cls, ps: float) -> "RuleParams":
        return cls("type2", 0.5, float(ps))

    @property
    def is_type2(self) -> bool:
        return self.variant == "type2"

    @property
    def skip_p(self) -> float:
        return self.ps if self.is_type2 else 0.0


@dataclass
class Grid:
    width: int
    height: int
    layers: list = field(default_factory=list)
    time: int = 0
    seed: int = 0
    dx: float = 1.0
    dt: float = 1.0

    def __post_init__(self):
        _check_dims(self.width, self.height)
        if not (self.dx > 0 and self.dt > 0):
            raise ValueError("dx and dt must be positive")
        nw = _nwords(self.width)
        for words in self.layers:
            if words.shape != (self.height, nw) or words.dtype != np.uint64:
                raise ValueError(f"layer must be a ({self.height}, {nw}) uint64 array")

    @property
    def nwords(self) -> int:
        return _nwords(self.width)

    @classmethod
    def from_bitmaps(cls, bitmaps: Sequence[np.ndarray], seed: int = 0, dx: float = 1.0, dt: float = 1.0) -> "Grid":
        bitmaps = [np.asarray(b, dtype=bool) for b in bitmaps]
        height, width = bitmaps[0].shape
        if any(b.shape != (height, width) for b in bitmaps):
            raise ValueError("all layers must share one shape")
        _check_dims(width, height)
        return cls(width, height, [_pack(b) for b in bitmaps], 0, seed, dx, dt)

    @classmethod
    def random(
        cls, width: int, height: int, densities: Sequence[float], seed: int = 0, dx: float = 1.0, dt: float = 1.0
    ) -> "Grid":
        """Independent Bernoulli fill per layer, reproducible from ``seed``."""
        _check_dims(width, height)
        gen = np.random.default_rng(seed)
        bitmaps = []
        for rho in densities:
            if not 0 <= rho <= 1:
                raise ValueError(f"density must lie in [0, 1], got {rho}")
            bitmaps.append(gen.random((height, width)) < rho)
        return cls.from_bitmaps(bitmaps, seed, dx, dt)

    def bitmap(self, layer: int = 0) -> np.ndarray:
        return _unpack(self.layers[layer], self.width)

    def popcount(self, layer: int = 0) -> int:
        return int(np.unpackbits(self.layers[layer].view(np.uint8)).sum())

    def particles(self, layer: int = 0) -> np.ndarray:
        """``(n, 2)`` array of occupied ``(col, row)`` cells."""
        rows, cols = np.nonzero(self.bitmap(layer))
        return np.column_stack([cols, rows])

    def copy(self) -> "Grid":
        return Grid(self.width, self.height, [w.copy() for w in self.layers], self.time, self.seed, self.dx, self.dt)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            (self.width, self.height, self.time, self.seed) == (other.width, other.height, other.time, other.seed)
            and len(self.layers) == len(other.layers)
            and all(np.array_equal(a, b) for a, b in zip(self.layers, other.layers))
        )

    def dumps(self) -> str:
        """Text form: ``MCA <width> <height> <layers>`` then one 0/1 raster per
        layer, rasters separated by blank lines."""
        out = io.StringIO()
        out.write(f"MCA {self.width} {self.height} {len(self.layers)}\n")
        for i in range(len(self.layers)):
            if i:
                out.write("\n")
            for row in self.bitmap(i):
                out.write("".join("1" if c else "0" for c in row))
                out.write("\n")
        return out.getvalue()

    @classmethod
    def loads(cls, text: str, seed: int = 0, dx: float = 1.0, dt: float = 1.0) -> "Grid":
        lines = text.splitlines()
        head = lines[0].split()
        if len(head) != 4 or head[0] != "MCA":
            raise ValueError(f"bad grid header {lines[0]!r}")
        width, height, nlayers = map(int, head[1:])
        rows = [ln.strip() for ln in lines[1:] if ln.strip()]
        if len(rows) != height * nlayers:
            raise ValueError(f"expected {height * nlayers} raster rows, found {len(rows)}")
        bitmaps = []
        for i in range(nlayers):
            block = rows[i * height : (i + 1) * height]
            if any(len(r) != width or set(r) - {"0", "1"} for r in block):
                raise ValueError("raster rows must be width characters of 0/1")
            bitmaps.append(np.array([[c == "1" for c in r] for r in block], dtype=bool))
        return cls.from_bitmaps(bitmaps, seed, dx, dt)


def new_grid(
    width: int,
    height: int,
    densities: Sequence[float] | None = None,
    bitmaps: Sequence[np.ndarray] | None = None,
    seed: int = 0,
    dx: float = 1.0,
    dt: float = 1.0,
) -> Grid:
    """Grid from explicit bitmaps or from per-layer fill densities."""
    if (densities is None) == (bitmaps is None):
        raise ValueError("give exactly one of densities or bitmaps")
    if bitmaps is not None:
        grid = Grid.from_bitmaps(bitmaps, seed, dx, dt)
        if (grid.width, grid.height) != (width, height):
            raise ValueError("bitmap shape does not match width/height")
        return grid
    return Grid.random(width, height, densities, seed, dx, dt)


def rotate_block(cells: np.ndarray, direction: str) -> np.ndarray:
    """Rotate a 2x2 block ``[[NW, NE], [SW, SE]]`` by 90 degrees."""
    cells = np.asarray(cells)
    if cells.shape != (2, 2):
        raise ValueError("block must be 2x2")
    if direction == "cw":
        return np.rot90(cells, k=-1)
    if direction == "ccw":
        return np.rot90(cells, k=1)
    raise ValueError(f"direction must be 'cw' or 'ccw', got {direction!r}")


def block_of(col: int, row: int, t: int, width: int, height: int) -> tuple[int, int]:
    """(block_col, block_row) of the parity-``t`` block containing a cell."""
    s = t & 1
    return ((col - s) % width) // 2, ((row - s) % height) // 2


def step(grid: Grid, rules: RuleParams | Sequence[RuleParams], workers: int = 1) -> Grid:
    """Advance every layer by one step in place and return the grid.

    ``rules`` is one rule for all layers or one per layer. With ``workers``
    > 1 the block rows are split between threads; the result is identical
    for any worker count because decisions come from the counter hash.
    """
    if isinstance(rules, RuleParams):
        rules = [rules] * len(grid.layers)
    if len(rules) != len(grid.layers):
        raise ValueError("need one rule per layer")
    for layer, rule in enumerate(rules):
        _step_layer(grid, layer, rule, workers)
    grid.time += 1
    return grid


def _step_layer(grid: Grid, layer: int, rule: RuleParams, workers: int) -> None:
    t = grid.time
    if rule.is_type2 and rng.is_skipped(grid.seed, layer, t, rule.ps):
        return
    words = grid.layers[layer]
    s = t & 1
    if s:
        words = _roll_cols_left(np.roll(words, -1, axis=0), grid.width)
    block_rows = grid.height // 2
    bounds = np.linspace(0, block_rows, max(1, min(workers, block_rows)) + 1).astype(int)
    spans = [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def run(span):
        _rotate_rows(words, grid, layer, t, rule.p, *span)

    if len(spans) == 1:
        run(spans[0])
    else:
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            list(pool.map(run, spans))
    if s:
        words = np.roll(_roll_cols_right(words, grid.width), 1, axis=0)
    grid.layers[layer] = words


def _rotate_rows(words: np.ndarray, grid: Grid, layer: int, t: int, p: float, lo: int, hi: int) -> None:
    """Apply the rotations of block rows [lo, hi) in the aligned frame."""
    width = grid.width
    codes = rng.block_decisions(grid.seed, layer, t, lo, hi, width // 2, p)
    cw = _decision_mask(codes == rng.CW, width)
    ccw = _decision_mask(codes == rng.CCW, width)
    keep = ~(cw | ccw)
    a = words[2 * lo : 2 * hi : 2]
    b = words[2 * lo + 1 : 2 * hi : 2]
    al, ar = a & _EVEN_BITS, (a >> _ONE) & _EVEN_BITS
    bl, br = b & _EVEN_BITS, (b >> _ONE) & _EVEN_BITS
    nal = (al & keep) | (bl & cw) | (ar & ccw)
    nar = (ar & keep) | (al & cw) | (br & ccw)
    nbl = (bl & keep) | (br & cw) | (al & ccw)
    nbr = (br & keep) | (ar & cw) | (bl & ccw)
    words[2 * lo : 2 * hi : 2] = nal | (nar << _ONE)
    words[2 * lo + 1 : 2 * hi : 2] = nbl | (nbr << _ONE)


def _decision_mask(selected: np.ndarray, width: int) -> np.ndarray:
    """Bits at the left column of every selected block."""
    cols = np.zeros((selected.shape[0], width), dtype=bool)
    cols[:, 0::2] = selected
    return _pack(cols)


def _nwords(width: int) -> int:
    return (width + 63) // 64


def _check_dims(width: int, height: int) -> None:
    if width <= 0 or height <= 0 or width % 2 or height % 2:
        raise ValueError(f"grid dimensions must be even and positive, got {width}x{height}")


def _pack(bits: np.ndarray) -> np.ndarray:
    rows, width = bits.shape
    nw = _nwords(width)
    packed = np.packbits(bits, axis=1, bitorder="little")
    out = np.zeros((rows, nw * 8), dtype=np.uint8)
    out[:, : packed.shape[1]] = packed
    return out.view("<u8").astype(np.uint64)


def _unpack(words: np.ndarray, width: int) -> np.ndarray:
    raw = np.ascontiguousarray(words.astype("<u8")).view(np.uint8)
    return np.unpackbits(raw, axis=1, bitorder="little")[:, :width].astype(bool)


def _tail_mask(width: int) -> np.uint64:
    r = width % 64
    return np.uint64(0xFFFFFFFFFFFFFFFF) if r == 0 else np.uint64((1 << r) - 1)


def _roll_cols_left(words: np.ndarray, width: int) -> np.ndarray:
    """new[c] = old[(c + 1) % width]."""
    out = words >> _ONE
    out[:, :-1] |= words[:, 1:] << np.uint64(63)
    last_word, last_bit = divmod(width - 1, 64)
    out[:, last_word] |= (words[:, 0] & _ONE) << np.uint64(last_bit)
    return out


def _roll_cols_right(words: np.ndarray, width: int) -> np.ndarray:
    """new[c] = old[(c - 1) % width]."""
    out = words << _ONE
    out[:, 1:] |= words[:, :-1] >> np.uint64(63)
    last_word, last_bit = divmod(width - 1, 64)
    wrapped = (words[:, last_word] >> np.uint64(last_bit)) & _ONE
    out[:, -1] &= _tail_mask(width)
    out[:, 0] |= wrapped
    return out
