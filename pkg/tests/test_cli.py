import json

import numpy as np
import pytest

from descon import closed_loop, demo_plant
from descon.cli import main
from descon.io import plant_to_dict

from conftest import REFERENCE_GAIN_1


@pytest.fixture(scope="module")
def demo_json(tmp_path_factory):
    path = tmp_path_factory.mktemp("plants") / "demo.json"
    path.write_text(json.dumps(plant_to_dict(demo_plant())))
    return str(path)


@pytest.fixture(scope="module")
def closed_loop_json(tmp_path_factory):
    # reference gain baked into the state matrix, uncertainty kept
    cl = closed_loop(demo_plant(), REFERENCE_GAIN_1)
    path = tmp_path_factory.mktemp("plants") / "closed.json"
    path.write_text(json.dumps(plant_to_dict(cl)))
    return str(path)


class TestDemoCommand:
    def test_minimize_alpha_1000(self, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["demo", "--minimize", "--alpha", "1000",
                   "--output", str(out), "--delta-grid", "21"])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert abs(doc["gamma"] - 1.1848) <= 0.02 * 1.1848
        assert doc["verification"]["passed"] is True
        assert doc["open_loop_admissibility"]["stable"] is False

    def test_fixed_gamma_below_optimum(self):
        assert main(["demo", "--gamma", "0.5", "--delta-grid", "5"]) == 3

    def test_fixed_gamma_feasible(self, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["demo", "--gamma", "2.1", "--output", str(out),
                   "--delta-grid", "11"])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["status"] == "ok"
        assert np.asarray(doc["gain"]).shape == (1, 3)

    def test_demo_rejects_input(self, demo_json):
        assert main(["demo", "--input", demo_json, "--gamma", "2.1"]) == 2

    def test_gamma_and_minimize_conflict(self):
        assert main(["demo", "--gamma", "2.0", "--minimize"]) == 2

    def test_neither_gamma_nor_minimize(self):
        assert main(["demo"]) == 2

    def test_deterministic_bytes(self, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            rc = main(["demo", "--minimize", "--alpha", "1000",
                       "--output", str(out), "--seed", "3",
                       "--delta-grid", "9"])
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestSynthesizeCommand:
    def test_from_file(self, demo_json, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["synthesize", "--input", demo_json, "--gamma", "2.2",
                   "--output", str(out), "--delta-grid", "11"])
        assert rc == 0
        assert json.loads(out.read_text())["status"] == "ok"

    def test_missing_input(self):
        assert main(["synthesize", "--gamma", "2.0"]) == 2

    def test_alpha_path_violation(self, tmp_path):
        doc = plant_to_dict(demo_plant())
        doc["uncertainty"]["MB"] = [[0.1], [0.0], [0.0]]
        doc["uncertainty"]["NB"] = [[0.1, 0.0]]
        path = tmp_path / "p.json"
        path.write_text(json.dumps(doc))
        rc = main(["synthesize", "--input", str(path), "--minimize",
                   "--alpha", "10"])
        assert rc == 5


class TestAnalyzeCommand:
    def test_certified(self, closed_loop_json, tmp_path, capsys):
        out = tmp_path / "a.json"
        rc = main(["analyze", "--input", closed_loop_json, "--gamma", "2.3",
                   "--output", str(out), "--delta-grid", "11"])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["certified"] is True
        assert doc["nominal_admissibility"]["admissible"] is True
        # the nonzero control input map is ignored with a warning
        assert "ignored" in capsys.readouterr().err

    def test_uncertified(self, closed_loop_json):
        rc = main(["analyze", "--input", closed_loop_json, "--gamma", "2.1",
                   "--delta-grid", "11"])
        assert rc == 3

    def test_open_loop_never_certified(self, demo_json):
        rc = main(["analyze", "--input", demo_json, "--gamma", "50.0",
                   "--delta-grid", "5"])
        assert rc == 3

    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["analyze", "--input", str(bad), "--gamma", "1.0"]) == 2

    def test_missing_gamma_is_usage_error(self, demo_json):
        assert main(["analyze", "--input", demo_json]) == 2


class TestVerifyCommand:
    def test_demo_with_gain_file(self, demo_json, tmp_path):
        gain = tmp_path / "gain.json"
        gain.write_text(json.dumps({"F": [[-1.9887, 1.8633, 4.4607]]}))
        out = tmp_path / "v.json"
        rc = main(["verify", "--input", demo_json, "--gain", str(gain),
                   "--gamma", "1.2", "--output", str(out),
                   "--delta-grid", "21"])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["passed"] is True
        assert doc["rho_max"] < 0.51

    def test_open_loop_fails(self, demo_json):
        assert main(["verify", "--input", demo_json, "--delta-grid", "5"]) == 3

    def test_text_format(self, demo_json, tmp_path):
        gain = tmp_path / "gain.json"
        gain.write_text(json.dumps([[-1.9887, 1.8633, 4.4607]]))
        out = tmp_path / "v.txt"
        rc = main(["verify", "--input", demo_json, "--gain", str(gain),
                   "--format", "text", "--output", str(out),
                   "--delta-grid", "5"])
        assert rc == 0
        assert "sampled worst-case norm" in out.read_text()


class TestSweepAlphaCommand:
    def test_csv_curve(self, tmp_path):
        out = tmp_path / "curve.csv"
        rc = main(["sweep-alpha", "--alphas", "0,10,100,1000",
                   "--format", "csv", "--output", str(out)])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "alpha,gamma_min,status"
        assert len(lines) == 5
        g0 = float(lines[1].split(",")[1])
        g1000 = float(lines[4].split(",")[1])
        assert g1000 < g0

    def test_duplicates_warn_and_dedupe(self, tmp_path, capsys):
        out = tmp_path / "c.csv"
        rc = main(["sweep-alpha", "--alphas", "0,0,1000", "--format", "csv",
                   "--output", str(out)])
        assert rc == 0
        assert "duplicate" in capsys.readouterr().err
        assert len(out.read_text().strip().splitlines()) == 3

    def test_empty_list_usage_error(self):
        assert main(["sweep-alpha", "--alphas", ""]) == 2

    def test_alpha_path_guard(self, tmp_path):
        doc = plant_to_dict(demo_plant())
        doc["uncertainty"]["MC"] = [[0.1]]
        doc["uncertainty"]["NC"] = [[0.1, 0.0, 0.0]]
        path = tmp_path / "p.json"
        path.write_text(json.dumps(doc))
        rc = main(["sweep-alpha", "--input", str(path), "--alphas", "0,10"])
        assert rc == 5

    def test_json_format(self, tmp_path):
        out = tmp_path / "c.json"
        rc = main(["sweep-alpha", "--alphas", "1000", "--output", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["points"][0]["alpha"] == 1000.0


class TestConfigPrecedence:
    def test_config_file_then_flags(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"delta_grid": 7, "alpha": 1000.0}))
        out = tmp_path / "r.json"
        rc = main(["demo", "--minimize", "--config", str(cfg),
                   "--output", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["alpha"] == 1000.0
        assert doc["verification"]["samples"] == 7

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert main(["demo", "--minimize", "--config", str(cfg)]) == 2

    def test_dotted_solver_keys(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"solver.tol": 1e-7, "solver.margin": 1e-6,
                                   "solver.max_iter": 50, "delta_grid": 5}))
        rc = main(["demo", "--minimize", "--alpha", "1000", "--config",
                   str(cfg), "--output", str(tmp_path / "r.json")])
        assert rc == 0

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 2
