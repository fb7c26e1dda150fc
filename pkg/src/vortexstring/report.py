"""Solve reports and diagnostics bundles shared by the solvers."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class DiagnosticsBundle:
    """Physical observables of a converged field.

    Deficit-angle and metric entries are populated only for gravitating
    (G > 0) runs.
    """

    total_flux: float
    source_integral: float
    energy: float
    decay_exponent_fit: float
    deficit_angle_integral: float | None = None
    deficit_angle_predicted: float | None = None
    metric_tail_order: float | None = None

    def to_dict(self) -> dict:
        return {
            "total_flux": self.total_flux,
            "source_integral": self.source_integral,
            "energy": self.energy,
            "decay_exponent_fit": self.decay_exponent_fit,
            "deficit_angle_integral": self.deficit_angle_integral,
            "deficit_angle_predicted": self.deficit_angle_predicted,
            "metric_tail_order": self.metric_tail_order,
        }


@dataclass
class SolveReport:
    """Convergence trace and audits of one solve.

    monotone is true when every recorded iterate pair was pointwise
    nonincreasing to 1e-12; negativity when v < 0 at all nodes up to the same
    1e-12 noise allowance.  ``trace`` holds the sup-norm update per iteration.
    String runs additionally record the delta schedule and continuation gaps.
    """

    iterations: int
    final_update_sup: float
    residual_sup: float
    monotone: bool
    negativity: bool
    decay_exponent_fit: float | None = None
    diagnostics: DiagnosticsBundle | None = None
    trace: list = field(default_factory=list)
    max_pointwise_increase: float = 0.0
    max_node_value: float = 0.0
    k_used: float | None = None
    warnings: list = field(default_factory=list)
    delta_schedule: list | None = None
    gaps: list | None = None

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_update_sup": self.final_update_sup,
            "residual_sup": self.residual_sup,
            "monotone": self.monotone,
            "negativity": self.negativity,
            "decay_exponent_fit": self.decay_exponent_fit,
            "diagnostics": None if self.diagnostics is None else self.diagnostics.to_dict(),
            "trace": list(self.trace),
            "max_pointwise_increase": self.max_pointwise_increase,
            "max_node_value": self.max_node_value,
            "k_used": self.k_used,
            "warnings": list(self.warnings),
            "delta_schedule": self.delta_schedule,
            "gaps": self.gaps,
        }
