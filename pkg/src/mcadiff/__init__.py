"""Diffusion in the Margolus-neighbourhood cellular automaton.

``mcadiff.chain`` evolves the exact position/direction Markov chain,
``mcadiff.analytic`` holds the closed-form distribution, moments and
diffusion coefficients, ``mcadiff.combinatorics`` the exact primitives they
rest on, and ``mcadiff.mca`` the bit-packed automaton itself (imported on
demand because it compiles numba kernels).
"""

from . import analytic, chain, combinatorics
from .distribution import Distribution
from .errors import DomainError, RealizabilityWarning

__version__ = "0.1.0"

__all__ = ["Distribution", "DomainError", "RealizabilityWarning", "analytic", "chain", "combinatorics"]
