"""Counter-based randomness for the automaton.

Every random decision is a pure function of (seed, layer, step, block), so a
step can be split across any number of workers, or evaluated for a single
block only, and still reproduce the same bits.
"""

import numba as nb
import numpy as np

NO_ROTATION = np.uint8(0)
CW = np.uint8(1)
CCW = np.uint8(2)

# block index reserved for the per-layer skip draw of the step-skipping rule
SKIP_BLOCK = np.uint64(0xFFFFFFFFFFFFFFFF)
_TRIAL_SALT = np.uint64(0x6A09E667F3BCC909)
_START_SALT = np.uint64(0xBB67AE8584CAA73B)
_INV_2_53 = 1.0 / 9007199254740992.0


@nb.njit(nb.uint64(nb.uint64), cache=True, nogil=True)
def splitmix64(x):
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@nb.njit(nb.uint64(nb.uint64, nb.uint64, nb.uint64, nb.uint64), cache=True, nogil=True)
def counter_hash(seed, layer, step, block):
    h = splitmix64(seed)
    h = splitmix64(h ^ layer)
    h = splitmix64(h ^ step)
    return splitmix64(h ^ block)


@nb.njit(nb.float64(nb.uint64), cache=True, nogil=True)
def to_unit(h):
    """Top 53 bits as a uniform double in [0, 1)."""
    return np.float64(h >> np.uint64(11)) * _INV_2_53


@nb.njit(cache=True, nogil=True)
def block_decision(seed, layer, step, block, p):
    """CW with probability p, CCW with probability p, otherwise no rotation."""
    u = to_unit(counter_hash(np.uint64(seed), np.uint64(layer), np.uint64(step), np.uint64(block)))
    if u < p:
        return CW
    if u < 2.0 * p:
        return CCW
    return NO_ROTATION


@nb.njit(cache=True, nogil=True)
def skip_draw(seed, layer, step, ps):
    return to_unit(counter_hash(np.uint64(seed), np.uint64(layer), np.uint64(step), SKIP_BLOCK)) < ps


@nb.njit(cache=True, nogil=True)
def is_skipped(seed, layer, step, ps):
    """Skip draws happen at odd steps and cover that step and the next."""
    if step & 1:
        return skip_draw(seed, layer, step, ps)
    if step == 0:
        return False
    return skip_draw(seed, layer, step - 1, ps)


@nb.njit(cache=True, nogil=True)
def trial_seed(seed, trial):
    return splitmix64(splitmix64(np.uint64(seed) ^ _TRIAL_SALT) ^ np.uint64(trial))


@nb.njit(cache=True, nogil=True)
def start_hash(seed):
    return splitmix64(np.uint64(seed) ^ _START_SALT)


@nb.njit(cache=True, nogil=True)
def block_decisions(seed, layer, step, row_lo, row_hi, blocks_per_row, p):
    """Decision codes for block rows [row_lo, row_hi) of one partition."""
    out = np.empty((row_hi - row_lo, blocks_per_row), dtype=np.uint8)
    for r in range(row_lo, row_hi):
        for c in range(blocks_per_row):
            out[r - row_lo, c] = block_decision(seed, layer, step, r * blocks_per_row + c, p)
    return out
