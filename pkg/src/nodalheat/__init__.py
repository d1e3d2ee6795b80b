"""Radial nodal Lane-Emden solutions on the disk, their spectra and the heat flow started from them."""

from .evolution import Classification, EvolutionControls, EvolutionOutcome, evolve, evolve_classify, lambda_scan
from .grid import RadialGrid, integrate_disk, make_graded_grid, make_uniform_grid
from .shooting import StationarySolution, stationary_solution
from .spectral import EigenPair, first_eigenpair, limit_eigenpair, linearized_eigenpair

__all__ = [
    "Classification",
    "EigenPair",
    "EvolutionControls",
    "EvolutionOutcome",
    "RadialGrid",
    "StationarySolution",
    "evolve",
    "evolve_classify",
    "first_eigenpair",
    "integrate_disk",
    "lambda_scan",
    "limit_eigenpair",
    "linearized_eigenpair",
    "make_graded_grid",
    "make_uniform_grid",
    "stationary_solution",
]
__version__ = "0.1.0"
