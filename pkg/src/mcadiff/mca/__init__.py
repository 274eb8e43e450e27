"""Two-dimensional Margolus-neighbourhood automaton with probabilistic rotation."""

from .ensemble import (
    DiffusionEstimate,
    DispersionSeries,
    ParticleTrace,
    auto_width,
    ensemble_dispersion,
    estimate_diffusion,
    set_threads,
    track_particle,
)
from .grid import Grid, RuleParams, block_of, new_grid, rotate_block, step

__all__ = [
    "DiffusionEstimate",
    "DispersionSeries",
    "Grid",
    "ParticleTrace",
    "RuleParams",
    "auto_width",
    "block_of",
    "ensemble_dispersion",
    "estimate_diffusion",
    "new_grid",
    "rotate_block",
    "set_threads",
    "step",
    "track_particle",
]
