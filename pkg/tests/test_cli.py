import json
import math
import subprocess
import sys

import pytest

from heatlab.cli import EXIT_NUMERIC, EXIT_OK, EXIT_SCHEMA, ExperimentConfig, main
from heatlab.exceptions import SchemaError


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_interval_index(capsys):
    code, out = run_cli(capsys, "index", "--model", "interval", "--bc", "relative")
    assert code == EXIT_OK and json.loads(out)["index"] == -1
    code, out = run_cli(capsys, "betti", "--model", "interval", "--bc", "absolute")
    assert json.loads(out)["betti"] == [1, 0]


def test_fit_reports_closed_form(capsys):
    code, out = run_cli(capsys, "fit", "--model", "circle", "--theta", "0.7*sin(x)", "--degree", "0", "--order", "4")
    doc = json.loads(out)
    assert code == EXIT_OK
    c2 = next(row["c"] for row in doc["table"] if row["n"] == 2)
    assert doc["closed_form"]["c2"] == pytest.approx(-0.49 * math.pi / math.sqrt(4 * math.pi))
    assert c2 == pytest.approx(doc["closed_form"]["c2"], rel=1e-3)


def test_invariance_scan(capsys):
    code, out = run_cli(capsys, "invariance", "scan", "--m", "3", "--n", "2")
    assert code == EXIT_OK and json.loads(out)["survivors"] == []
    code, out = run_cli(capsys, "invariance", "scan", "--m", "2", "--n", "2", "--table")
    assert "g_{11/22}" in out and "survives" in out
    code, out = run_cli(capsys, "invariance", "enumerate", "--m", "2", "--n", "2", "--no-theta")
    assert json.loads(out)["count"] == 9


def test_other_commands(capsys, tmp_path):
    code, out = run_cli(capsys, "gaussbonnet", "--model", "sphere2")
    assert json.loads(out)["euler_integral"] == pytest.approx(2.0, abs=1e-10)
    code, out = run_cli(capsys, "boundary", "--m", "1")
    assert json.loads(out)["a0_bd"] == pytest.approx(-0.25)
    code, out = run_cli(capsys, "dolbeault", "--theta", "0.5*sin(2*pi*x)", "--N", "8")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["index"] == 0 and abs(doc["a2_density_integral"]) < 1e-10
    code, out = run_cli(capsys, "spectrum", "--model", "torus", "--N", "3")
    assert len(json.loads(out)["eigenvalues"]) == 3
    code, out = run_cli(capsys, "coeffs", "--model", "circle", "--theta", "0.7", "--point", "0.3")
    assert json.loads(out)["invariants"]["0"]["a2"] == pytest.approx(-0.49 / math.sqrt(4 * math.pi))
    path = tmp_path / "curves.csv"
    code, out = run_cli(capsys, "heattrace", "--model", "circle", "--N", "50", "--t", "0.5,1",
                        "--format", "csv", "--output", str(path))
    assert code == EXIT_OK and out == ""
    assert path.read_text().splitlines()[0] == "t,trace_0,trace_1,supertrace"


def test_exit_codes(capsys, tmp_path):
    code, _ = run_cli(capsys, "fit", "--model", "hyperbolic")
    assert code == EXIT_SCHEMA
    code, out = run_cli(capsys, "heattrace", "--model", "circle", "--N", "20", "--t", "1e-6")
    assert code == EXIT_NUMERIC and "t_min" in json.loads(out)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"command": "fit", "colour": "blue"}))
    code, _ = run_cli(capsys, "--config", str(bad))
    assert code == EXIT_SCHEMA
    code, _ = run_cli(capsys, "index", "--model", "interval", "--theta", "0.3")
    assert code == EXIT_SCHEMA
    code, _ = run_cli(capsys, "invariance", "scan", "--m", "7", "--n", "2")
    assert code == EXIT_SCHEMA


def test_config_file_and_determinism(capsys, tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"command": "betti", "model": "torus", "theta": ["0.7", "0"], "N": 8}))
    first = run_cli(capsys, "--config", str(cfg))
    second = run_cli(capsys, "--config", str(cfg))
    assert first == second and json.loads(first[1])["betti"] == [0, 0, 0]


def test_empty_config_runs_acceptance():
    cfg = ExperimentConfig.from_dict({})
    assert cfg.command == "accept" and cfg.checks == []
    with pytest.raises(SchemaError):
        ExperimentConfig.from_dict({"N": -3})


def test_accept_single_check(capsys):
    code, out = run_cli(capsys, "accept", "--only", "8")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["passed"] and doc["checks"][0]["number"] == 8


def test_console_script_with_thread_cap():
    proc = subprocess.run([sys.executable, "-m", "heatlab.cli", "index", "--model", "interval"],
                          capture_output=True, text=True, env={"HEATLAB_THREADS": "1", "PATH": ""})
    assert proc.returncode == 0 and json.loads(proc.stdout)["index"] == -1
