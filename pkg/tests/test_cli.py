import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from jacobi_scatter.cli import ConfigError, main, parse_model
from jacobi_scatter.coefficients import finite_model, save_model


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("spec,name", [("free", "free"), ("jacobi:0.3,-0.2", "jacobi:0.3,-0.2"), ("edge:1,+", "edge:1,+")])
def test_parse_model(spec, name):
    assert parse_model(spec).name == name


@pytest.mark.parametrize("spec", ["jacobi:0.3", "jacobi:-1,0", "edge:1,x", "bogus", "free:1", "pollaczek:a,b"])
def test_parse_model_rejects(spec):
    with pytest.raises(ConfigError):
        parse_model(spec)


def test_weight_csv(capsys):
    code, out, _ = run(capsys, "weight", "--model", "jacobi:0.3,-0.2", "--grid", "5")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["lambda", "w", "w_closed_form"]
    values = np.array(rows[1:], dtype=float)
    assert values.shape == (5, 3)
    assert np.allclose(values[:, 1], values[:, 2], rtol=1e-8)


def test_weight_json_schema(capsys):
    code, out, _ = run(capsys, "weight", "--grid", "3", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == "jacobi-scatter/1" and doc["command"] == "weight"
    assert len(doc["rows"]) == 3 and doc["passed"] is True


def test_output_file(tmp_path, capsys):
    target = tmp_path / "d.csv"
    code, out, _ = run(capsys, "determinant", "--model", "jacobi:0.3,-0.2", "--zeta-grid", "4", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().startswith("zeta")


def test_file_model_and_spectrum(tmp_path, capsys):
    path = tmp_path / "rank.json"
    save_model(finite_model([], [1.0], name="rank"), path, 3)
    code, out, _ = run(capsys, "spectrum", "--model", f"file:{path}")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:3] == ["index", "lambda", "mu"]
    assert float(rows[1][1]) == pytest.approx(1.25)


def test_sumrules_pass_for_finite_model(tmp_path, capsys):
    path = tmp_path / "m.json"
    save_model(finite_model([0.6], [0.3, -0.2]), path, 3)
    code, out, _ = run(capsys, "sumrules", "--model", f"file:{path}", "--order", "3")
    assert code == 0


def test_verify_free_model(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert all(r[3] == "pass" for r in rows[1:])


def test_verify_pollaczek_checks_divergence(capsys):
    # outside trace class the only claim is that the Szego integral diverges
    code, out, _ = run(capsys, "verify", "--model", "pollaczek:1,0")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert [r[0] for r in rows[1:]] == ["szego_condition_fails_weighted_converges"]


def test_verify_failure_exits_1(capsys, monkeypatch):
    import jacobi_scatter.cli as cli

    monkeypatch.setattr(cli, "_verify_checks", lambda model, tol: [("always_off", lambda: 1.0, 0.5)])
    code, out, _ = run(capsys, "verify")
    assert code == 1 and "fail" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["weight", "--grid", "0"],
        ["weight", "--tol", "2"],
        ["weight", "--model", "jacobi:1"],
        ["szego", "--order", "1"],
        ["asymptotics", "--zeta", "1.5"],
        ["nonsense"],
    ],
)
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "config"


def test_computation_error_exit_3(capsys):
    code, _, err = run(capsys, "weight", "--lam-max", "1.0", "--grid", "3")
    assert code == 3
    assert json.loads(err)["type"] == "EdgeProximityError"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "jacobi_scatter", "weight", "--grid", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("lambda,w")
