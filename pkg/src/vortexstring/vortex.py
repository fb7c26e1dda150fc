"""Flat-space (G = 0) multivortex solver.

Substituting v = v0 + w removes the point sources and leaves
lap w = f_m(v0 + w) + g.  Starting from the supersolution w_1 = -v0 (v = 0),
the shifted iteration

    (lap_h - k) w_n = f_m(v0 + w_{n-1}) - k w_{n-1} + source

with k above the slope bound of f_m on v <= 0 produces a pointwise
nonincreasing sequence; its limit is the unique discrete fixed point.  The
truncation wall carries v = 0 (exact up to the exponentially small true tail),
and the far-field source is the discretization-consistent -lap_h(v0), which
together keep the iterate trace monotone to machine precision and the far
field clean enough for decay fits (see grid.effective_source).

For m < 0 the solution is unique; uniqueness_check verifies this numerically
by re-solving from perturbed starts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .errors import ConfigError, MonotoneBreakError, SolverError
from .grid import Field2D, Grid2D, effective_source, helmholtz_solve, residual_sup
from .report import SolveReport

__all__ = ["VortexSolveOptions", "solve_vortex", "uniqueness_check"]

MONOTONE_TOL = 1e-12
NEGATIVITY_TOL = 1e-12


@dataclass
class VortexSolveOptions:
    """k_factor is the safety multiplier on the analytic shift bound
    (beta*2^m for m > 0, beta*(1+|m|) for m < 0) and must be >= 1.05."""

    k_factor: float = 1.1
    tol: float = 1e-10
    max_iters: int = 500

    def shift(self, spec: model.ProblemSpec) -> float:
        if self.k_factor < 1.05:
            raise ConfigError("k_factor must be at least 1.05")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be positive")
        return self.k_factor * model.slope_bound(spec.m, spec.beta)


def solve_vortex(spec: model.ProblemSpec, grid: Grid2D,
                 opts: VortexSolveOptions | None = None,
                 initial_w: Field2D | None = None):
    """Solves the flat multivortex equation on ``grid``.

    Returns (v, report) with v = v0 + w.  The default start is the
    supersolution w = -v0; a monotonicity violation beyond 1e-12 then raises
    MonotoneBreakError.  ``initial_w`` gives a perturbed start (test use,
    e.g. uniqueness checks); monotonicity is then recorded but not enforced.
    """
    if spec.G != 0.0:
        raise ConfigError("solve_vortex requires G = 0; use the string solver")
    opts = opts or VortexSolveOptions()
    k = opts.shift(spec)
    X, Y = grid.mesh()
    v0, _ = model.background_arrays(X, Y, spec)
    src = effective_source(grid, spec)
    boundary = Field2D(grid, -v0)

    if initial_w is None:
        w = -v0.copy()
        enforce = True
    else:
        w = initial_w.values.copy()
        enforce = False

    trace = []
    max_inc = 0.0
    upd = np.inf
    for iteration in range(1, opts.max_iters + 1):
        rhs = Field2D(grid, model.nonlinearity(v0 + w, spec) - k * w + src)
        w_new = helmholtz_solve(k, rhs, boundary).values
        diff = w_new - w
        upd = float(np.max(np.abs(diff)))
        inc = float(np.max(diff))
        trace.append(upd)
        max_inc = max(max_inc, inc)
        if enforce and inc > MONOTONE_TOL:
            raise MonotoneBreakError(
                f"MONOTONE_BREAK: iterate increased by {inc:.3e} at step "
                f"{iteration}; the shift k={k:.4g} is too small or the scheme "
                "is inconsistent", trace=trace)
        w = w_new
        if upd < opts.tol:
            break
    else:
        raise SolverError(
            f"vortex iteration did not reach tol={opts.tol} in "
            f"{opts.max_iters} steps (last update {upd:.3e})",
            residual=upd, trace=trace)

    v = v0 + w
    res = residual_sup(Field2D(grid, w), spec)
    max_v = float(np.max(v))
    report = SolveReport(
        iterations=iteration,
        final_update_sup=upd,
        residual_sup=res,
        monotone=bool(max_inc <= MONOTONE_TOL),
        negativity=bool(max_v <= NEGATIVITY_TOL),
        trace=trace,
        max_pointwise_increase=max_inc,
        max_node_value=max_v,
        k_used=k,
    )
    if res > 10.0 * opts.tol * k:
        report.warnings.append(
            f"residual {res:.3e} above the 10*tol*k contract {10*opts.tol*k:.3e}")
    return Field2D(grid, v), report


def uniqueness_check(spec: model.ProblemSpec, grid: Grid2D,
                     opts: VortexSolveOptions | None = None,
                     perturbations: list | None = None) -> float:
    """Max pairwise sup-distance of vortex solves from perturbed starts.

    Restricted to m < 0, where the solution is unique.  Each perturbation
    field is added to the supersolution start -v0.
    """
    if spec.m >= 0:
        raise ConfigError("uniqueness_check applies to m < 0 only")
    if spec.G != 0.0:
        raise ConfigError("uniqueness_check applies to the flat case G = 0")
    perturbations = perturbations or []
    X, Y = grid.mesh()
    v0, _ = model.background_arrays(X, Y, spec)
    solutions = [solve_vortex(spec, grid, opts)[0].values]
    for pert in perturbations:
        start = Field2D(grid, -v0 + pert.values)
        solutions.append(solve_vortex(spec, grid, opts, initial_w=start)[0].values)
    worst = 0.0
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            worst = max(worst, float(np.max(np.abs(solutions[i] - solutions[j]))))
    return worst
