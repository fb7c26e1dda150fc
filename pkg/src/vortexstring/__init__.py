"""Self-dual multivortex and cosmic-string solvers for a generalized
Abelian Higgs model.

Subpackages:
    model       parameters, nonlinearity, background functions
    grid        truncated-plane discretization and linear solves
    vortex      flat-space monotone iteration solver
    strings     gravitating delta-regularized solver with continuation
    radial      coincident-center radial problems and the flat oracle
    diagnostics flux, energy, metric factor, deficit angle, decay fits
    cli         batch front-end
"""

from .errors import (
    BetaMismatchError,
    ConfigError,
    MonotoneBreakError,
    NonFiniteError,
    QuadratureError,
    SandwichBreakError,
    SolverError,
    VortexStringError,
)
from .grid import Field2D, Grid2D, build_grid
from .model import ProblemSpec
from .radial import beta_for_coincident, radial_initialize, radial_march, radial_vortex_oracle
from .strings import StringSolveOptions, solve_string_continuation, solve_string_fixed_delta
from .vortex import VortexSolveOptions, solve_vortex, uniqueness_check

__all__ = [
    "ProblemSpec",
    "Grid2D",
    "Field2D",
    "build_grid",
    "VortexSolveOptions",
    "solve_vortex",
    "uniqueness_check",
    "StringSolveOptions",
    "solve_string_fixed_delta",
    "solve_string_continuation",
    "beta_for_coincident",
    "radial_initialize",
    "radial_march",
    "radial_vortex_oracle",
    "VortexStringError",
    "ConfigError",
    "NonFiniteError",
    "SolverError",
    "MonotoneBreakError",
    "SandwichBreakError",
    "BetaMismatchError",
    "QuadratureError",
]

__version__ = "0.1.0"
