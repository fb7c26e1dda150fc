"""Gravitating string solver: delta-regularization plus continuation.

The string equation carries the weight (e^{v-e^v} prod_s |x-p_s|^{-2 mu_s})^a
and point sources.  Regularizing |x-p_s|^2 -> delta + |x-p_s|^2 smooths both;
substituting v = v_delta + w with

    v_delta = sum_s mu_s log((delta+|x-p_s|^2)/(1+|x-p_s|^2))

cancels the regularized sources exactly and leaves

    lap w = U_delta * e^{a(v-e^v)} * f_m(v) + g,   v = v_delta + w,
    U_delta = prod_s (delta+|x-p_s|^2)^{-a mu_s}.

v = 0 is a supersolution and v_delta a subsolution (for beta large enough), so
the solution is sandwiched: v_delta <= v <= 0.  Each fixed-delta problem is
solved by a shifted linear iteration started from v = 0; because the weight
decays spatially, a scalar shift stalls the far field, so the default policy
uses a pointwise shift c(x) built from the current iterate's linearization
(the scalar analytic policy remains available).  Continuation then walks
delta down a halving schedule, warm-starting each solve, and records the
inter-step gaps; the delta -> 0 limit is the string solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .errors import ConfigError, SandwichBreakError, SolverError
from .grid import Field2D, Grid2D, ShiftedOperator, residual_sup
from .report import SolveReport

__all__ = [
    "StringSolveOptions",
    "StringWeight",
    "build_string_weight",
    "default_delta_schedule",
    "solve_string_fixed_delta",
    "solve_string_continuation",
]

SANDWICH_TOL = 1e-9
GAP_ANNULUS_CLEARANCE = 1.0


@dataclass
class StringSolveOptions:
    """delta_schedule defaults to halvings 1/2, 1/4, ... stopping before
    spacing^2 (the grid must resolve the regularization scale sqrt(delta));
    k_policy is "adaptive" (pointwise shift from the current linearization)
    or "analytic" (scalar shift from the subsolution weight bound)."""

    delta_schedule: list | None = None
    tol: float = 1e-10
    max_iters: int = 400
    k_policy: str = "adaptive"
    k_factor: float = 1.1

    def validate(self):
        if self.k_policy not in ("adaptive", "analytic"):
            raise ConfigError("k_policy must be 'adaptive' or 'analytic'")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.k_factor < 1.05:
            raise ConfigError("k_factor must be at least 1.05")
        if self.delta_schedule is not None:
            sched = list(self.delta_schedule)
            if not sched:
                raise ConfigError("delta schedule must not be empty")
            if any(not 0.0 < d <= 0.5 for d in sched):
                raise ConfigError("delta values must lie in (0, 1/2]")
            if any(b >= a for a, b in zip(sched, sched[1:])):
                raise ConfigError("delta schedule must be strictly decreasing")


@dataclass
class StringWeight:
    """U_delta on the grid: prod_s (delta+|x-p_s|^2)^(-a mu_s)."""

    values: Field2D
    delta: float


def build_string_weight(grid: Grid2D, spec: model.ProblemSpec, delta: float) -> StringWeight:
    if not 0.0 < delta < 1.0:
        raise ConfigError("delta must lie in (0, 1)")
    a = spec.a
    if a * spec.total_number > 1.0 + 1e-12:
        raise ConfigError("string problems require 4*pi*G*N <= 1")
    X, Y = grid.mesh()
    vals = np.ones_like(X)
    for (px, py), mu in spec.centers:
        vals *= np.power(delta + (X - px) ** 2 + (Y - py) ** 2, -a * mu)
    if not np.all(np.isfinite(vals) & (vals > 0.0)):
        raise SolverError("string weight must be positive and finite")
    return StringWeight(Field2D(grid, vals), delta)


def default_delta_schedule(grid: Grid2D) -> list:
    """Halvings of 1/2 down to the resolution floor ~spacing^2."""
    floor = grid.spacing**2
    schedule = []
    d = 0.5
    while d >= floor:
        schedule.append(d)
        d /= 2.0
    return schedule or [0.5]


def _check_preconditions(spec: model.ProblemSpec):
    if spec.G <= 0.0:
        raise ConfigError("string solves require G > 0; use the vortex solver")
    if spec.a * spec.total_number > 1.0 + 1e-12:
        raise ConfigError("string solves require 4*pi*G*N <= 1")
    if spec.all_coincident:
        raise ConfigError(
            "all centers coincide; the radial solver handles that case")


def _linearization(v, weight_vals, spec):
    """Pointwise slope of the string right-hand side in v."""
    fv = model.nonlinearity(v, spec)
    fp = model.nonlinearity_derivative(v, spec)
    gf = model.gravity_factor(v, spec.a)
    return weight_vals * gf * (fp + spec.a * (1.0 - np.exp(v)) * fv)


def solve_string_fixed_delta(spec: model.ProblemSpec, grid: Grid2D, delta: float,
                             opts: StringSolveOptions | None = None,
                             warm_start: Field2D | None = None):
    """Solves the delta-regularized string equation.

    Returns (v, report).  The returned field must satisfy the sandwich
    v_delta <= v <= 0 at every node to 1e-9, else SANDWICH_BREAK is raised
    (the usual cause: beta below the subsolution threshold).  ``warm_start``
    is a previous v field (any delta); the wall carries v = v_delta.
    """
    _check_preconditions(spec)
    if not 0.0 < delta <= 0.5:
        raise ConfigError("delta must lie in (0, 1/2]")
    opts = opts or StringSolveOptions()
    opts.validate()

    a = spec.a
    X, Y = grid.mesh()
    v_delta = model.regularized_offset_arrays(X, Y, delta, spec)
    _, g_arr = model.background_arrays(X, Y, spec)
    weight = build_string_weight(grid, spec, delta)
    u_vals = weight.values.values
    boundary = Field2D(grid, np.zeros_like(v_delta))  # w = 0: v = v_delta on the wall

    if warm_start is None:
        w = -v_delta.copy()  # v = 0 supersolution start
    else:
        w = warm_start.values - v_delta

    # scalar analytic shift: slope bound with the weight evaluated at the
    # subsolution, where U_delta*e^{a v_delta} is bounded uniformly in delta
    analytic_k = (opts.k_factor * spec.beta * 2.0 ** abs(spec.m)
                  * (1.0 + abs(spec.m))
                  * float(np.max(u_vals * model.gravity_factor(v_delta, a))))

    op = None
    c_used = None
    trace = []
    max_inc = 0.0
    upd = np.inf
    for iteration in range(1, opts.max_iters + 1):
        v = v_delta + w
        rhs_nl = u_vals * model.gravity_factor(v, a) * model.nonlinearity(v, spec) + g_arr
        if opts.k_policy == "analytic":
            c = np.full_like(v, analytic_k)
        else:
            c = opts.k_factor * np.maximum(_linearization(v, u_vals, spec), 0.0)
        # refactorize only when the shift moved; the rhs must use the
        # factorized shift so the fixed point stays lap w = rhs_nl
        if op is None or float(np.max(np.abs(c - c_used))) > 0.25 * float(np.max(c_used)) + 1e-12:
            op = ShiftedOperator(grid, c[1:-1, 1:-1])
            c_used = c
        rhs = Field2D(grid, rhs_nl - c_used * w)
        w_new = op.solve(rhs, boundary).values
        diff = w_new - w
        upd = float(np.max(np.abs(diff)))
        max_inc = max(max_inc, float(np.max(diff)))
        trace.append(upd)
        w = w_new
        if upd < opts.tol:
            break
    else:
        raise SolverError(
            f"string iteration (delta={delta}) did not reach tol={opts.tol} "
            f"in {opts.max_iters} steps (last update {upd:.3e})",
            residual=upd, trace=trace)

    v = v_delta + w
    below = float(np.min(v - v_delta))
    above = float(np.max(v))
    if below < -SANDWICH_TOL or above > SANDWICH_TOL:
        raise SandwichBreakError(
            f"SANDWICH_BREAK: v left [v_delta, 0] by "
            f"(below={below:.3e}, above={above:.3e}); raise beta above the "
            "subsolution threshold")
    res = residual_sup(Field2D(grid, w), spec, weight)
    report = SolveReport(
        iterations=iteration,
        final_update_sup=upd,
        residual_sup=res,
        monotone=bool(max_inc <= 1e-12),
        negativity=bool(above <= 1e-12),
        trace=trace,
        max_pointwise_increase=max_inc,
        max_node_value=above,
        k_used=float(np.max(c_used)),
        delta_schedule=[delta],
    )
    return Field2D(grid, v), report


def solve_string_continuation(spec: model.ProblemSpec, grid: Grid2D,
                              opts: StringSolveOptions | None = None):
    """Walks the delta schedule toward 0, warm-starting each solve.

    Returns (v, report, gaps) where gaps[j] is the sup-difference of
    consecutive fields over the annulus at distance >= 1 from every center.
    Gaps should decrease; a non-decreasing pair appends a CONTINUATION_STALL
    warning instead of failing.
    """
    _check_preconditions(spec)
    opts = opts or StringSolveOptions()
    opts.validate()
    schedule = (list(opts.delta_schedule) if opts.delta_schedule is not None
                else default_delta_schedule(grid))
    if schedule[-1] < 0.25 * grid.spacing**2:
        raise ConfigError(
            "final delta is below the grid resolution floor 0.25*spacing^2")

    clearance = grid.center_distance(spec) >= GAP_ANNULUS_CLEARANCE
    gaps = []
    v_prev = None
    report = None
    for delta in schedule:
        v, report = solve_string_fixed_delta(spec, grid, delta, opts,
                                             warm_start=v_prev)
        if v_prev is not None:
            gaps.append(float(np.max(np.abs(v.values[clearance]
                                            - v_prev.values[clearance]))))
        v_prev = v
    report.delta_schedule = list(schedule)
    report.gaps = list(gaps)
    if any(b >= a for a, b in zip(gaps, gaps[1:])):
        report.warnings.append(
            "CONTINUATION_STALL: continuation gaps are not strictly decreasing")
    return v_prev, report, gaps
