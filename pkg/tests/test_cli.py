import json
import os

import numpy as np
import pytest

from qdnls.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, run
from qdnls.fields import Grid2D, SpectralField, gradient, save_fields
from qdnls.reports import canonical_json

SIM_CONFIG = {
    "grid": {"half_width": 8.0, "points": 32},
    "coefficients": {"alpha": 1.0, "beta": -1.0, "gamma": 0.5},
    "data": {"preset": "gaussian", "amplitude": 0.4},
    "integrator": {"dt": 0.01, "t_end": 0.1, "scheme": "exponential-rk4",
                   "store_every": 5},
}


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


class TestSimulate:
    def test_runs_and_reports(self, tmp_path):
        cfg = write_config(tmp_path, SIM_CONFIG)
        out = str(tmp_path / "out")
        assert run(["simulate", "--config", cfg, "--out", out, "--quiet"]) == EXIT_OK
        report = json.loads((tmp_path / "out" / "simulate_report.json").read_text())
        assert report["config"] == SIM_CONFIG  # full resolved config embedded
        assert not report["result"]["blowup"]
        assert report["result"]["invariant_drift"]["m1"] < 1e-8
        assert (tmp_path / "out" / "diagnostics.csv").exists()

    def test_radial_variant(self, tmp_path):
        # radial runs need the quadratic products resolved below the grid's
        # dealias cut or lattice anisotropy trips the radial-defect halt
        radial = json.loads(json.dumps(SIM_CONFIG))
        radial["grid"]["points"] = 64
        radial["data"]["width"] = 1.2
        cfg = write_config(tmp_path, radial)
        out = str(tmp_path / "outr")
        assert run(["simulate-radial", "--config", cfg, "--out", out, "--quiet"]) == EXIT_OK
        report = json.loads((tmp_path / "outr" / "simulate_radial_report.json").read_text())
        assert not report["result"]["blowup"]

    def test_missing_key_exits_2(self, tmp_path, capsys):
        broken = {k: v for k, v in SIM_CONFIG.items() if k != "coefficients"}
        cfg = write_config(tmp_path, broken)
        assert run(["simulate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["type"] == "validation"
        assert "coefficients" in err["error"]["message"]

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {**SIM_CONFIG, "surprise": 1})
        assert run(["simulate", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG
        err = json.loads(capsys.readouterr().err)
        assert "surprise" in err["error"]["message"]

    def test_blowup_exits_3(self, tmp_path, capsys):
        hot = json.loads(json.dumps(SIM_CONFIG))
        hot["data"]["amplitude"] = 3e4
        hot["integrator"] = {"dt": 0.05, "t_end": 1.0, "store_every": 1}
        cfg = write_config(tmp_path, hot)
        rc = run(["simulate", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == EXIT_NUMERICAL
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["type"] == "numerical"


class TestPotential:
    def test_roundtrip_via_files(self, tmp_path):
        grid = Grid2D(8.0, 64)
        W = SpectralField.from_function(
            grid, lambda x1, x2: np.exp(-(x1**2 + x2**2) / 2))
        w = gradient(W)
        field_file = tmp_path / "w.qdf"
        save_fields(field_file, list(w.components))
        cfg = write_config(tmp_path, {"field_file": str(field_file),
                                      "tolerance": 1e-8})
        out = tmp_path / "pot"
        assert run(["potential", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
        report = json.loads((out / "potential_report.json").read_text())
        res = report["result"]
        assert res["admitted"] and res["radial"]
        assert res["round_trip_error"] <= 1e-10
        assert (out / "potential.qdf").exists()

    def test_wrong_component_count_exits_2(self, tmp_path):
        grid = Grid2D(4.0, 16)
        save_fields(tmp_path / "one.qdf", [SpectralField.zero(grid)])
        cfg = write_config(tmp_path, {"field_file": str(tmp_path / "one.qdf"),
                                      "tolerance": 1e-8})
        assert run(["potential", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG


class TestDecompose:
    def test_block_norm_table(self, tmp_path):
        cfg = write_config(tmp_path, {
            "grid": {"half_width": np.pi, "points": 32},
            "time_window": 2 * np.pi,
            "time_samples": 16,
            "sigma": 0.5,
            "band": 10.0,
        })
        out = tmp_path / "dec"
        assert run(["decompose", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
        lines = (out / "block_norms.csv").read_text().strip().split("\n")
        assert lines[0] == "N,L,value"
        assert len(lines) > 5
        # parseval across blocks: partition weights square-sum below 1
        report = json.loads((out / "decompose_report.json").read_text())
        total = report["result"]["total_l2"]
        vals = [float(l.split(",")[2]) for l in lines[1:]]
        assert np.sqrt(sum(v * v for v in vals)) <= 2.0 * total


class TestVerify:
    def test_inflation_report_and_agreement(self, tmp_path):
        cfg = write_config(tmp_path, {
            "coefficients": {"alpha": 1.0, "beta": -1.0, "gamma": 0.5},
            "s": 0.0,
            "n_list": [16, 32],
            "t_list": [0.05],
            "agreement_step": 0.03125,
        })
        out = tmp_path / "infl"
        assert run(["verify", "inflation", "--config", cfg, "--out", str(out),
                    "--quiet"]) == EXIT_OK
        report = json.loads((out / "verify_inflation_report.json").read_text())
        agr = report["result"]["report"]["pipeline_agreement"]["by_N"]
        assert all(v["rel_gap"] <= 0.05 for v in agr.values())
        assert (out / "inflation_norms.csv").exists()

    def test_geometry(self, tmp_path):
        cfg = write_config(tmp_path, {
            "sigma_sets": [[1.0, 1.0, -2.0]], "radius": 12, "eps": 1 / 64})
        out = tmp_path / "geo"
        assert run(["verify", "geometry", "--config", cfg, "--out", str(out),
                    "--quiet"]) == EXIT_OK
        report = json.loads((out / "verify_geometry_report.json").read_text())
        assert report["result"]["scans"][0]["min_ratio_low_modulation"] >= 1 / 8

    def test_bilinear_with_jobs(self, tmp_path):
        cfg = write_config(tmp_path, {
            "sigma1": 1.0, "sigma2": -0.5,
            "n_grid": [[4, 4, 1], [8, 8, 2], [16, 16, 4], [32, 32, 8]],
            "l_grid": [[1, 1]],
            "trials": 2,
        })
        out = tmp_path / "bil"
        assert run(["verify", "bilinear", "--config", cfg, "--out", str(out),
                    "--jobs", "2", "--quiet"]) == EXIT_OK
        report = json.loads((out / "verify_bilinear_report.json").read_text())
        assert report["result"]["flat_slope_fit"] is not None
        assert (out / "bilinear_fit.svg").exists()
        svg = (out / "bilinear_fit.svg").read_text()
        assert svg.startswith("<svg") and "polyline" in svg

    def test_determinism_modulo_timestamp(self, tmp_path):
        cfg = write_config(tmp_path, {
            "sigma1": 1.0, "sigma2": -0.5,
            "n_grid": [[4, 4, 1], [8, 8, 2]],
            "l_grid": [[1, 1]],
            "trials": 2,
        })
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert run(["verify", "bilinear", "--config", cfg, "--out", str(out),
                        "--seed", "17", "--jobs", "2", "--quiet"]) == EXIT_OK
            payload = json.loads((out / "verify_bilinear_report.json").read_text())
            payload.pop("timestamp")
            outs.append(canonical_json(payload))
        assert outs[0] == outs[1]  # byte-identical after dropping the timestamp


class TestEnvDefaults:
    def test_out_dir_from_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("QDNLS_OUT_DIR", str(tmp_path / "envout"))
        cfg = write_config(tmp_path, SIM_CONFIG)
        assert run(["simulate", "--config", cfg, "--quiet"]) == EXIT_OK
        assert (tmp_path / "envout" / "simulate_report.json").exists()
