import json
import math

import numpy as np
import pytest

from vortexstring import cli
from vortexstring.errors import ConfigError


def vortex_config(out, centers=(((0.0, 0.0), 1),), m=1.0, beta=2.0,
                  radius=8.0, nodes=161):
    return {
        "mode": "vortex",
        "spec": {"centers": [[list(p), mu] for p, mu in centers],
                 "m": m, "beta": beta, "G": 0.0},
        "grid": {"radius": radius, "nodes_per_side": nodes},
        "solver": {"tol": 1e-10},
        "output_dir": str(out),
        "emit": ["field_csv", "report_json", "decay_csv", "diagnostics"],
    }


class TestValidation:
    def test_radial_with_distinct_centers(self, tmp_path):
        raw = vortex_config(tmp_path)
        raw["mode"] = "radial"
        raw["spec"]["centers"] = [[[-1.0, 0.0], 1], [[1.0, 0.0], 1]]
        with pytest.raises(ConfigError, match="coincident"):
            cli.parse_config(raw)

    def test_string_with_zero_g(self, tmp_path):
        raw = vortex_config(tmp_path)
        raw["mode"] = "string"
        raw["spec"]["centers"] = [[[-1.0, 0.0], 1], [[1.0, 0.0], 1]]
        with pytest.raises(ConfigError, match="G > 0"):
            cli.parse_config(raw)

    def test_string_an_above_one(self, tmp_path):
        raw = vortex_config(tmp_path)
        raw["mode"] = "string"
        raw["spec"]["centers"] = [[[-1.0, 0.0], 2], [[1.0, 0.0], 2]]
        raw["spec"]["G"] = 1.0
        with pytest.raises(ConfigError):
            cli.parse_config(raw)

    def test_unknown_mode_and_emit(self, tmp_path):
        raw = vortex_config(tmp_path)
        raw["mode"] = "magic"
        with pytest.raises(ConfigError):
            cli.parse_config(raw)
        raw = vortex_config(tmp_path)
        raw["emit"] = ["field_csv", "pictures"]
        with pytest.raises(ConfigError):
            cli.parse_config(raw)

    def test_exit_code_3_via_main(self, tmp_path):
        raw = vortex_config(tmp_path / "out")
        raw["mode"] = "radial"
        raw["spec"]["centers"] = [[[-1.0, 0.0], 1], [[1.0, 0.0], 1]]
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps(raw))
        assert cli.main(["--config", str(cfg_path), "--quiet"]) == 3

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["--config", str(tmp_path / "nope.json")]) == 3

    def test_solver_failure_exit_code_2(self, tmp_path):
        # beta far below the subsolution threshold: SANDWICH_BREAK -> exit 2
        raw = {
            "mode": "string",
            "spec": {"centers": [[[-1.0, 0.0], 1], [[1.0, 0.0], 1]],
                     "m": 1.0, "beta": 1.0,
                     "G": 0.5 / (8.0 * math.pi)},
            "grid": {"radius": 8.0, "nodes_per_side": 161},
            "solver": {"delta_schedule": [0.01]},
            "output_dir": str(tmp_path / "fail"),
        }
        assert cli.run(cli.parse_config(raw), quiet=True) == 2


@pytest.fixture(scope="module")
def done(tmp_path_factory):
    out = tmp_path_factory.mktemp("vortex_run")
    raw = vortex_config(out)
    status = cli.run(cli.parse_config(raw), quiet=True)
    return out, raw, status


class TestRunVortex:
    def test_exit_zero_and_artifacts(self, done):
        out, raw, status = done
        assert status == 0
        for name in ("field.csv", "report.json", "decay.csv", "run_meta.json"):
            assert (out / name).exists()

    def test_report_flux_quantized(self, done):
        out, _, _ = done
        doc = json.loads((out / "report.json").read_text())
        src = doc["diagnostics"]["source_integral"]
        assert abs(src + 4 * math.pi) / (4 * math.pi) < 0.01
        assert doc["report"]["monotone"] is True

    def test_config_round_trip(self, done):
        out, raw, _ = done
        doc = json.loads((out / "report.json").read_text())
        cfg1 = cli.parse_config(raw)
        cfg2 = cli.parse_config(doc["config"])
        assert cfg1.spec == cfg2.spec
        assert (cfg1.mode, cfg1.radius, cfg1.nodes_per_side) == (
            cfg2.mode, cfg2.radius, cfg2.nodes_per_side)
        assert sorted(cfg1.emit) == sorted(cfg2.emit)

    def test_deterministic_reports(self, done):
        # identical config (including output_dir) -> byte-identical report
        out, raw, _ = done
        first = (out / "report.json").read_bytes()
        assert cli.run(cli.parse_config(raw), quiet=True) == 0
        assert (out / "report.json").read_bytes() == first


class TestRunRadial:
    def test_flat_oracle_mode(self, tmp_path):
        raw = {
            "mode": "radial",
            "spec": {"centers": [[[0.0, 0.0], 1]], "m": 1.0, "beta": 2.0,
                     "G": 0.0},
            "grid": {"radius": 8.0, "nodes_per_side": 161},
            "solver": {"r_max": 10.0},
            "output_dir": str(tmp_path / "oracle"),
            "emit": ["field_csv", "report_json"],
        }
        assert cli.run(cli.parse_config(raw), quiet=True) == 0
        assert (tmp_path / "oracle" / "profile.csv").exists()
        doc = json.loads((tmp_path / "oracle" / "report.json").read_text())
        assert doc["report"]["monotone"] is True

    def test_string_march_mode(self, tmp_path):
        n_tot = 1
        g_val = 1.0 / (4.0 * math.pi * n_tot)
        from vortexstring import radial as rad

        beta = rad.beta_for_coincident(1.0, 1.0, n_tot)
        raw = {
            "mode": "radial",
            "spec": {"centers": [[[0.0, 0.0], n_tot]], "m": 1.0, "beta": beta,
                     "G": g_val},
            "grid": {"radius": 8.0, "nodes_per_side": 161},
            "solver": {"t_end": 12.0},
            "output_dir": str(tmp_path / "march"),
            "emit": ["field_csv", "report_json", "decay_csv"],
        }
        assert cli.run(cli.parse_config(raw), quiet=True) == 0
        doc = json.loads((tmp_path / "march" / "report.json").read_text())
        assert "quadrature" in doc
        assert doc["quadrature"]["beta"] == pytest.approx(beta)

    def test_radial_with_wrong_an_rejected(self, tmp_path):
        raw = {
            "mode": "radial",
            "spec": {"centers": [[[0.0, 0.0], 1]], "m": 1.0, "beta": 2.0,
                     "G": 0.5},
            "grid": {"radius": 8.0, "nodes_per_side": 161},
            "output_dir": str(tmp_path),
        }
        with pytest.raises(ConfigError):
            cli.parse_config(raw)


class TestSweep:
    def test_empty_sweep(self, tmp_path):
        rows, status = cli.sweep([], parallelism=2,
                                 summary_path=tmp_path / "summary.csv")
        assert rows == [] and status == 0
        assert (tmp_path / "summary.csv").read_text().startswith("mode,")

    def test_duplicate_configs_identical_rows(self, tmp_path):
        raw = vortex_config(tmp_path / "a")
        cfgs = [cli.parse_config(raw), cli.parse_config(raw)]
        rows, status = cli.sweep(cfgs, parallelism=2,
                                 summary_path=tmp_path / "summary.csv")
        assert status == 0
        assert rows[0] == rows[1]

    def test_sweep_mode_via_run(self, tmp_path):
        runs = []
        for i, m in enumerate((1.0, 2.0)):
            sub = vortex_config(tmp_path / f"run{i}", m=m)
            runs.append(sub)
        raw = {"mode": "sweep", "runs": runs,
               "output_dir": str(tmp_path), "parallelism": 2}
        assert cli.run(cli.parse_config(raw), quiet=True) == 0
        text = (tmp_path / "summary.csv").read_text().splitlines()
        assert text[0].split(",") == list(cli.SUMMARY_COLUMNS)
        assert len(text) == 3

    def test_decay_fit_grows_with_m(self, tmp_path):
        runs = [vortex_config(tmp_path / f"m{m}", m=float(m), radius=10.0,
                              nodes=201)
                for m in (1, 2, 3)]
        cfgs = [cli.parse_config(r) for r in runs]
        rows, status = cli.sweep(cfgs, parallelism=3)
        assert status == 0
        fits = [float(r["decay_fit"]) for r in rows]
        targets = [math.sqrt(2.0**m * 2.0) for m in (1, 2, 3)]
        assert fits[0] < fits[1] < fits[2]
        for fit, target in zip(fits, targets):
            assert fit == pytest.approx(target, rel=0.15)
