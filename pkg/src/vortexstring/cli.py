"""Batch front-end.

Reads a JSON config, dispatches to the vortex, string, or radial solver, and
writes plot-ready artifacts: the field as CSV, a deterministic JSON report
(the resolved config is embedded for reproducibility; wall-clock data goes to
a separate run_meta.json so reruns are byte-identical), decay samples, and
diagnostics.  Exit codes: 0 success, 2 solver failure, 3 configuration error.

Config layout (see README for the full schema):

    {
      "mode": "vortex" | "string" | "radial" | "sweep",
      "spec": {"centers": [[[x, y], mu], ...], "m": ..., "beta": ...,
               "G": ..., "lambda": ..., "kappa": ...},
      "grid": {"radius": ..., "nodes_per_side": ...},
      "solver": {...mode-specific options...},
      "output_dir": "...",
      "emit": ["field_csv", "report_json", "decay_csv", "diagnostics"],
      "runs": [...]        # sweep mode only
      "parallelism": 2     # sweep mode only
    }
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics, radial, strings, vortex
from .errors import ConfigError, VortexStringError
from .grid import build_grid
from .model import ProblemSpec
from .report import SolveReport

__all__ = ["RunConfig", "parse_config", "run", "sweep", "main"]

EMIT_CHOICES = ("field_csv", "report_json", "decay_csv", "diagnostics")
MODES = ("vortex", "string", "radial", "sweep")

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_CONFIG = 3


@dataclass
class RunConfig:
    mode: str
    spec: ProblemSpec | None
    radius: float | None
    nodes_per_side: int | None
    solver: dict = field(default_factory=dict)
    output_dir: str = "out"
    emit: tuple = EMIT_CHOICES
    runs: list = field(default_factory=list)
    parallelism: int = 1

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "output_dir": self.output_dir,
            "emit": sorted(self.emit),
            "solver": dict(self.solver),
        }
        if self.spec is not None:
            d["spec"] = {
                "centers": [[[x, y], mu] for (x, y), mu in self.spec.centers],
                "m": self.spec.m,
                "beta": self.spec.beta,
                "G": self.spec.G,
                "lambda": self.spec.lam,
                "kappa": self.spec.kappa,
            }
            d["grid"] = {"radius": self.radius,
                         "nodes_per_side": self.nodes_per_side}
        if self.mode == "sweep":
            d["runs"] = [r.to_dict() for r in self.runs]
            d["parallelism"] = self.parallelism
        return d


def _parse_spec(raw: dict) -> ProblemSpec:
    try:
        centers = tuple(((float(p[0]), float(p[1])), int(mu))
                        for p, mu in raw["centers"])
        return ProblemSpec(
            centers=centers,
            m=float(raw["m"]),
            beta=float(raw["beta"]),
            G=float(raw.get("G", 0.0)),
            lam=(None if raw.get("lambda") is None else float(raw["lambda"])),
            kappa=(None if raw.get("kappa") is None else float(raw["kappa"])),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"malformed spec section: {exc}") from exc


def _validate_mode(cfg: RunConfig):
    spec = cfg.spec
    if cfg.mode == "vortex":
        if spec.G != 0.0:
            raise ConfigError("vortex mode requires G = 0")
    elif cfg.mode == "string":
        if spec.G <= 0.0:
            raise ConfigError("string mode requires G > 0")
        if spec.a * spec.total_number > 1.0 + 1e-12:
            raise ConfigError("string mode requires 4*pi*G*N <= 1")
        if spec.all_coincident:
            raise ConfigError(
                "string mode needs at least two distinct centers "
                "(coincident centers belong to radial mode)")
    elif cfg.mode == "radial":
        if not spec.all_coincident or spec.total_number < 1:
            raise ConfigError("radial mode requires coincident centers")
        an = spec.a * spec.total_number
        if spec.G != 0.0 and abs(an - 1.0) > 1e-9:
            raise ConfigError(
                "radial mode requires G = 0 (flat oracle) or 4*pi*G*N = 1")
    else:
        raise ConfigError(f"unknown mode {cfg.mode!r}")


def parse_config(raw: dict, mode_override: str | None = None,
                 out_override: str | None = None) -> RunConfig:
    """Validates a raw config dict into a RunConfig (mode preconditions are
    checked here, before any allocation)."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    mode = mode_override or raw.get("mode")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    emit = tuple(raw.get("emit", list(EMIT_CHOICES)))
    for item in emit:
        if item not in EMIT_CHOICES:
            raise ConfigError(f"unknown emit entry {item!r}")
    output_dir = out_override or raw.get("output_dir", "out")

    if mode == "sweep":
        runs_raw = raw.get("runs", [])
        if not isinstance(runs_raw, list):
            raise ConfigError("sweep config needs a 'runs' list")
        runs = [parse_config(r) for r in runs_raw]
        if any(r.mode == "sweep" for r in runs):
            raise ConfigError("sweeps do not nest")
        par = int(raw.get("parallelism", 1))
        if par < 1:
            raise ConfigError("parallelism must be at least 1")
        return RunConfig(mode="sweep", spec=None, radius=None,
                         nodes_per_side=None, output_dir=output_dir,
                         emit=emit, runs=runs, parallelism=par)

    if "spec" not in raw:
        raise ConfigError("config needs a 'spec' section")
    spec = _parse_spec(raw["spec"])
    grid_raw = raw.get("grid", {})
    try:
        radius = float(grid_raw["radius"])
        nodes = int(grid_raw["nodes_per_side"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed grid section: {exc}") from exc
    cfg = RunConfig(mode=mode, spec=spec, radius=radius, nodes_per_side=nodes,
                    solver=dict(raw.get("solver", {})), output_dir=output_dir,
                    emit=emit)
    _validate_mode(cfg)
    return cfg


def _vortex_options(solver: dict) -> vortex.VortexSolveOptions:
    return vortex.VortexSolveOptions(
        k_factor=float(solver.get("k_factor", 1.1)),
        tol=float(solver.get("tol", 1e-10)),
        max_iters=int(solver.get("max_iters", 500)),
    )


def _string_options(solver: dict) -> strings.StringSolveOptions:
    sched = solver.get("delta_schedule")
    return strings.StringSolveOptions(
        delta_schedule=(None if sched is None else [float(d) for d in sched]),
        tol=float(solver.get("tol", 1e-10)),
        max_iters=int(solver.get("max_iters", 400)),
        k_policy=str(solver.get("k_policy", "adaptive")),
        k_factor=float(solver.get("k_factor", 1.1)),
    )


def _profile_report(prof, residual: float) -> SolveReport:
    return SolveReport(
        iterations=len(prof.picard_trace),
        final_update_sup=(prof.picard_trace[-1] if prof.picard_trace else 0.0),
        residual_sup=residual,
        monotone=bool(np.all(np.diff(prof.v) > 0.0)),
        negativity=bool(np.all(prof.v < 0.0)),
        trace=list(prof.picard_trace),
    )


def _execute(cfg: RunConfig):
    """Runs one non-sweep config; returns (report, artifacts dict)."""
    spec = cfg.spec
    solver = cfg.solver
    if cfg.mode == "radial":
        if spec.G == 0.0:
            prof = radial.radial_vortex_oracle(
                spec,
                r_max=float(solver.get("r_max", 13.0)),
                tol=float(solver.get("tol", 1e-5)),
            )
            report = _profile_report(prof, residual=abs(float(prof.v[-1])))
            report.decay_exponent_fit = diagnostics.decay_fit(prof, "exponential")[0]
            quad = None  # flat oracle: beta is free, no quadrature constraint
        else:
            prof = radial.radial_initialize(
                spec,
                t0=solver.get("t0"),
                picard_tol=float(solver.get("picard_tol", 1e-12)),
            )
            prof = radial.radial_march(
                prof,
                t_end=float(solver.get("t_end", 15.0)),
                step=float(solver.get("step", 1e-3)),
            )
            funcs = radial.EnergyFunctionals.build(
                spec.a, spec.m, prof.beta, prof.n_total,
                v_floor=float(prof.v[0]) - 1.0)
            defect = float(np.max(np.abs(prof.vprime**2 - funcs.F(prof.v))))
            report = _profile_report(prof, residual=defect)
            integ = prof.integrated_part()
            report.decay_exponent_fit = diagnostics.decay_fit(
                integ.window(integ.t_end - 3.0, integ.t_end), "algebraic")[0]
            quad = radial.quadrature_report(spec.a, spec.m, spec.total_number)
        return report, {"profile": prof, "quadrature": quad}

    grid = build_grid(cfg.radius, cfg.nodes_per_side, spec)
    if cfg.mode == "vortex":
        v, report = vortex.solve_vortex(spec, grid, _vortex_options(solver))
        weight = None
    else:
        v, report, _gaps = strings.solve_string_continuation(
            spec, grid, _string_options(solver))
        sched = report.delta_schedule
        weight = strings.build_string_weight(grid, spec, sched[-1])
    if "diagnostics" in cfg.emit:
        report.diagnostics = diagnostics.compute_bundle(v, spec, weight)
        report.decay_exponent_fit = report.diagnostics.decay_exponent_fit
    return report, {"field": v}


def _write_artifacts(cfg: RunConfig, report: SolveReport, artifacts: dict,
                     elapsed: float):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if "field_csv" in cfg.emit:
        if "field" in artifacts:
            artifacts["field"].write_csv(out / "field.csv")
        else:
            artifacts["profile"].write_csv(out / "profile.csv")
    if "decay_csv" in cfg.emit:
        _write_decay_csv(cfg, artifacts, out / "decay.csv")
    if "report_json" in cfg.emit:
        doc = {"config": cfg.to_dict(), "report": report.to_dict(),
               "diagnostics": (None if report.diagnostics is None
                               else report.diagnostics.to_dict())}
        if artifacts.get("quadrature") is not None:
            doc["quadrature"] = artifacts["quadrature"]
        (out / "report.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n")
        meta = {"written_at_unix": time.time(), "elapsed_seconds": elapsed}
        (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def _write_decay_csv(cfg: RunConfig, artifacts: dict, path: Path):
    if "field" in artifacts:
        fld = artifacts["field"]
        grid = fld.grid
        rr = grid.radii()
        mask = (rr >= grid.radius / 2.0) & (rr <= 3.0 * grid.radius / 4.0)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = False
        order = np.argsort(rr[mask], kind="stable")
        data = np.column_stack([rr[mask][order], fld.values[mask][order]])
        np.savetxt(path, data, fmt="%.17g", delimiter=",",
                   header="r,value", comments="")
    else:
        prof = artifacts["profile"]
        win = prof.window(prof.t_end - 3.0, prof.t_end)
        np.savetxt(path, np.column_stack([win.t, win.v]), fmt="%.17g",
                   delimiter=",", header="t,v", comments="")


def run(cfg: RunConfig, quiet: bool = False) -> int:
    """Executes one config end to end; returns the process exit status."""
    try:
        if cfg.mode != "sweep":
            _validate_mode(cfg)
        if cfg.mode == "sweep":
            _, status = sweep(cfg.runs, cfg.parallelism,
                              summary_path=Path(cfg.output_dir) / "summary.csv",
                              quiet=quiet)
            return status
        start = time.perf_counter()
        report, artifacts = _execute(cfg)
        elapsed = time.perf_counter() - start
        _write_artifacts(cfg, report, artifacts, elapsed)
        if not quiet:
            print(f"{cfg.mode}: {report.iterations} iterations, "
                  f"residual {report.residual_sup:.3e}, wrote {cfg.output_dir}",
                  file=sys.stderr)
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VortexStringError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


SUMMARY_COLUMNS = ("mode", "m", "beta", "G", "N", "status", "iterations",
                   "residual", "flux_error", "decay_fit", "energy")


def _summary_row(cfg: RunConfig):
    spec = cfg.spec
    row = {c: "" for c in SUMMARY_COLUMNS}
    row.update(mode=cfg.mode, m=repr(spec.m), beta=repr(spec.beta),
               G=repr(spec.G), N=str(spec.total_number))
    try:
        report, artifacts = _execute(cfg)
        row["status"] = "ok"
        row["iterations"] = str(report.iterations)
        row["residual"] = repr(report.residual_sup)
        if report.decay_exponent_fit is not None:
            row["decay_fit"] = repr(report.decay_exponent_fit)
        if report.diagnostics is not None:
            b = report.diagnostics
            n_tot = spec.total_number
            if n_tot:
                row["flux_error"] = repr(
                    abs(b.source_integral + 4.0 * math.pi * n_tot)
                    / (4.0 * math.pi * n_tot))
            row["energy"] = repr(b.energy)
    except VortexStringError as exc:
        row["status"] = f"failed: {type(exc).__name__}"
    return row


def sweep(configs: list, parallelism: int = 1, summary_path=None,
          quiet: bool = False):
    """Runs configs concurrently (thread pool of ``parallelism``) and builds
    the summary table; returns (rows, exit_status)."""
    if parallelism < 1:
        raise ConfigError("parallelism must be at least 1")
    for cfg in configs:
        _validate_mode(cfg)
    if configs:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(_summary_row, configs))
    else:
        rows = []
    if summary_path is not None:
        path = Path(summary_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [",".join(SUMMARY_COLUMNS)]
        lines += [",".join(row[c] for c in SUMMARY_COLUMNS) for row in rows]
        path.write_text("\n".join(lines) + "\n")
    status = EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_SOLVER
    if not quiet and rows:
        print(f"sweep: {len(rows)} runs, "
              f"{sum(r['status'] == 'ok' for r in rows)} succeeded",
              file=sys.stderr)
    return rows, status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vortexstring",
        description="Self-dual vortex and cosmic-string solver")
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--mode", choices=MODES, help="override config mode")
    parser.add_argument("--out", help="override output directory")
    parser.add_argument("--parallel", type=int, default=None,
                        help="sweep parallelism override")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    try:
        raw = json.loads(Path(args.config).read_text())
        cfg = parse_config(raw, mode_override=args.mode,
                           out_override=args.out)
        if args.parallel is not None:
            cfg.parallelism = args.parallel
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
