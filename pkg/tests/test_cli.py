import csv
import io
import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from ctharm import cli
from ctharm.config import RunConfig, config_schema, report_schema, resolve_model, workers

from oracles import c_h3, phi_h3


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


class TestPhi:
    def test_example_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "phi.csv"
        code, _, _ = run(capsys, "phi", "--model", "h3", "--lambda", "2", "--rmax", "10", "--out", str(out))
        assert code == 0
        data = rows(out.read_text())
        assert data[0] == ["r", "re_phi", "im_phi"]
        arr = np.array(data[1:], dtype=float)
        assert arr[0, 0] == 0.0 and arr[-1, 0] == 10.0
        np.testing.assert_allclose(arr[:, 1], phi_h3(2.0, arr[:, 0]).real, atol=1e-8)

    def test_deterministic(self, capsys):
        a = run(capsys, "phi", "--model", "dr:1,2", "--lambda", "1+0.5i", "--rmax", "4", "--npts", "9")[1]
        b = run(capsys, "phi", "--model", "dr:1,2", "--lambda", "1+0.5i", "--rmax", "4", "--npts", "9")[1]
        assert a == b
        assert len(rows(a)) == 10

    def test_unparseable_lambda(self, capsys):
        code, _, err = run(capsys, "phi", "--model", "h3", "--lambda", "two")
        assert code == 2
        assert json.loads(err.strip().splitlines()[-1])["exit_code"] == 2


class TestCfn:
    def test_zero_lambda_exit_2(self, capsys):
        code, out, err = run(capsys, "cfn", "--model", "h3", "--lambda", "0")
        assert code == 2
        assert out == ""
        diag = json.loads(err)
        assert "lambda must be nonzero" in diag["message"]

    def test_real_lambda_grid(self, capsys):
        code, out, _ = run(capsys, "cfn", "--model", "h3", "--lambda-min", "0.5", "--lambda-max", "2", "--npts", "4")
        assert code == 0
        data = rows(out)
        assert data[0] == ["lambda", "re_c", "im_c", "plancherel_density"]
        arr = np.array(data[1:], dtype=float)
        c = arr[:, 1] + 1j * arr[:, 2]
        np.testing.assert_allclose(c, c_h3(arr[:, 0]), rtol=1e-8)
        np.testing.assert_allclose(arr[:, 3], arr[:, 0] ** 2, rtol=1e-8)

    def test_complex_lambda(self, capsys):
        code, out, _ = run(capsys, "cfn", "--model", "h3", "--lambda", "1-0.5i")
        assert code == 0
        data = rows(out)
        assert data[0][:2] == ["re_lambda", "im_lambda"]
        v = np.array(data[1], dtype=float)
        assert abs(complex(v[2], v[3]) - c_h3(1 - 0.5j)) < 1e-8
        assert np.isnan(v[4])

    def test_threads_do_not_change_output(self, capsys, monkeypatch):
        argv = ("cfn", "--model", "h2", "--lambda-min", "0.1", "--lambda-max", "10", "--npts", "8")
        serial = run(capsys, *argv)[1]
        monkeypatch.setenv("CT_THREADS", "2")
        assert workers() == 2
        assert run(capsys, *argv)[1] == serial

    @pytest.mark.parametrize("bad", ["0", "-1", "two"])
    def test_bad_thread_count(self, capsys, monkeypatch, bad):
        monkeypatch.setenv("CT_THREADS", bad)
        code, _, err = run(capsys, "cfn", "--model", "h3", "--lambda-min", "1", "--lambda-max", "2", "--npts", "3")
        assert code == 2
        assert "CT_THREADS" in err


class TestRadialCommands:
    def test_transform_then_invert(self, capsys, tmp_path):
        code, out, _ = run(capsys, "transform", "--model", "h3", "--profile", "bump:1")
        assert code == 0
        assert rows(out)[0][0] == "lambda"
        code, out, err = run(capsys, "invert", "--model", "h3", "--profile", "bump:1", "--rmax", "1.5",
                             "--npts", "7")
        assert code == 0
        arr = np.array(rows(out)[1:], dtype=float)
        np.testing.assert_allclose(arr[:, 1], arr[:, 3], atol=1e-6)
        assert json.loads(err)["max_error"] < 1e-6

    def test_plancherel(self, capsys):
        code, out, _ = run(capsys, "plancherel", "--model", "h3", "--f", "bump:1", "--g", "annulus:1.5,2.5")
        assert code == 0
        rep = json.loads(out)
        assert rep["relative_gap"] < 1e-6

    def test_convolve(self, capsys):
        code, out, err = run(capsys, "convolve", "--model", "h3", "--f", "bump:1", "--g", "bump:1",
                             "--method", "both", "--npts", "5")
        assert code == 0
        arr = np.array(rows(out)[1:], dtype=float)
        np.testing.assert_allclose(arr[:, 1], arr[:, 2], atol=1e-5)

    def test_unknown_profile(self, capsys):
        code, _, err = run(capsys, "transform", "--model", "h3", "--profile", "triangle:1")
        assert code == 2
        assert json.loads(err)["error"] == "ConfigError"


class TestDensityCheck:
    def test_dr(self, capsys):
        code, out, _ = run(capsys, "density-check", "--model", "dr:1,2")
        assert code == 0
        rep = json.loads(out)
        assert rep["all_pass"] and rep["two_rho"] == pytest.approx(2.5)

    def test_inline_model(self, capsys):
        # A = e^{2r} - e^{-2r} = 2 sinh 2r
        model = json.dumps({"name": "custom", "terms": [{"poly": [1.0], "exp": 2.0}, {"poly": [-1.0], "exp": -2.0}]})
        code, out, _ = run(capsys, "density-check", "--model", model)
        assert code == 0
        assert json.loads(out)["two_rho"] == pytest.approx(2.0)

    def test_sign_changing_density(self, capsys):
        model = json.dumps({"name": "custom", "terms": [{"poly": [1.0], "beta": 2.0}]})
        code, _, err = run(capsys, "density-check", "--model", model)
        assert code == 2
        assert json.loads(err)["error"] == "NonPositiveDensity"

    def test_bad_model(self, capsys):
        code, _, err = run(capsys, "density-check", "--model", "bogus")
        assert code == 2


class TestConfig:
    def test_schema_is_shipped_and_valid(self):
        jsonschema.Draft202012Validator.check_schema(config_schema())
        jsonschema.Draft202012Validator.check_schema(report_schema())

    def test_config_file(self, tmp_path, capsys):
        cfg = {"command": "phi", "model": "h3", "grid": {"lambda": 0.5, "rmax": 2.0, "npts": 5}}
        path = tmp_path / "run.json"
        path.write_text(json.dumps(cfg))
        code, out, _ = run(capsys, "phi", "--config", str(path))
        assert code == 0
        assert len(rows(out)) == 6

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = {"command": "phi", "model": "h3", "grid": {"lambda": 0.5, "rmax": 2.0, "npts": 5}}
        path = tmp_path / "run.json"
        path.write_text(json.dumps(cfg))
        code, out, _ = run(capsys, "phi", "--config", str(path), "--npts", "3")
        assert len(rows(out)) == 4

    def test_unknown_key_rejected(self, tmp_path, capsys):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"command": "phi", "model": "h3", "bogus": 1}))
        code, _, err = run(capsys, "phi", "--config", str(path))
        assert code == 2
        assert "invalid run configuration" in err

    def test_resolve_model_shortcuts(self):
        assert resolve_model("hyperbolic:5") == {"name": "hyperbolic", "n": 5}
        assert resolve_model("dr:1,3") == {"name": "damek_ricci", "p": 1, "q": 3}

    def test_tolerance_lookup(self):
        cfg = RunConfig.from_dict({"command": "phi", "model": "h3", "tolerances": {"roundtrip": 0.5}})
        assert cfg.tol("roundtrip") == 0.5
        assert cfg.tol("plancherel") == 1e-6


class TestVerifySuite:
    @pytest.fixture(scope="class")
    @classmethod
    def report(cls):
        proc = subprocess.run([sys.executable, "-m", "ctharm.cli", "verify-suite", "--model", "h3"],
                              capture_output=True, text=True, timeout=600)
        return proc

    def test_example_exit_zero(self, report):
        assert report.returncode == 0, report.stderr

    def test_report_matches_schema(self, report):
        rep = json.loads(report.stdout)
        jsonschema.validate(rep, report_schema())
        assert rep["all_passed"]
        names = {c["name"] for c in rep["checks"]}
        assert {"phi_closed_form", "c_closed_form", "roundtrip", "multiplicativity", "helgason_inversion"} <= names

    def test_quick_is_subset(self, capsys):
        code, out, _ = run(capsys, "verify-suite", "--model", "h3", "--quick")
        quick = {c["name"] for c in json.loads(out)["checks"]}
        assert code == 0
        assert "multiplicativity" not in quick

    def test_tolerance_override_can_fail(self, capsys, tmp_path):
        rep_path = tmp_path / "rep.json"
        code, _, _ = run(capsys, "verify-suite", "--model", "h2", "--quick", "--tol", "poisson=1e-30",
                         "--report", str(rep_path))
        assert code == 1
        rep = json.loads(rep_path.read_text())
        failed = [c["name"] for c in rep["checks"] if not c["passed"]]
        assert "poisson" in failed

    def test_bad_tol_syntax(self, capsys):
        code, _, _ = run(capsys, "verify-suite", "--model", "h3", "--tol", "poisson")
        assert code == 2
