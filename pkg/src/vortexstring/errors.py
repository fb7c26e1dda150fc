"""Exception hierarchy shared across the solvers."""


class VortexStringError(Exception):
    """Base class for all package errors."""


class ConfigError(VortexStringError):
    """Invalid parameters, grids, or mode preconditions."""


class NonFiniteError(VortexStringError):
    """A model function produced a non-finite value (overflow guard)."""


class SolverError(VortexStringError):
    """A linear or nonlinear solve failed its contract.

    ``residual`` carries the last residual, ``trace`` the iteration history
    when one exists.
    """

    def __init__(self, message, residual=None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace


class MonotoneBreakError(SolverError):
    """MONOTONE_BREAK: a vortex iterate increased pointwise beyond tolerance."""


class SandwichBreakError(SolverError):
    """SANDWICH_BREAK: a string solution left the v_delta <= v <= 0 sandwich."""


class BetaMismatchError(SolverError):
    """BETA_MISMATCH: the radial march overshot 0 or stalled; the coupling is
    off the critical value fixed by the energy balance."""


class QuadratureError(VortexStringError):
    """Coupling quadrature failed to converge or left its analytic bracket."""
