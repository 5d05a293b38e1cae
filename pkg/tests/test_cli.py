import csv
import json
import subprocess
import sys

import pytest

from pairspace import __version__
from pairspace.cli import RunConfig, dumps, main, run


def invoke(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def result(out):
    return json.loads(out)["result"]


def test_classify_bundled_triangle(capsys):
    code, out, _ = invoke(capsys, "classify", "--input", "lagrange_triangle.json")
    assert code == 0
    doc = json.loads(out)
    assert doc["tool"] == "pairspace" and doc["version"] == __version__
    assert doc["config"]["command"] == "classify"
    assert doc["result"]["classification"] == "CENTRAL"
    assert doc["result"]["lambda"] > 0


def test_classify_bundled_line_and_square(capsys):
    _, out, _ = invoke(capsys, "classify", "--input", "euler_line.json")
    assert result(out)["classification"] == "COLLINEAR_CENTRAL"
    _, out, _ = invoke(capsys, "classify", "--input", "square.json")
    assert result(out)["classification"] == "CENTRAL"


def test_solve_collinear_equal_masses(capsys, tmp_path):
    path = tmp_path / "e.csv"
    code, out, _ = invoke(capsys, "solve-collinear", "--masses", "1,1,1", "--csv", str(path))
    assert code == 0
    res = result(out)
    assert res["alpha"] == pytest.approx(1.0, abs=1e-13)
    assert res["brackets"]["three_body"]["lower"] == 1.0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["x", "E", "E_N_star", "E_3_star"]
    assert len(rows) == 201
    values = [[float(v) for v in row] for row in rows[1:]]
    assert values[0][1] < 0 < values[-1][1]


def test_solve_collinear_ordering(capsys):
    _, out, _ = invoke(capsys, "solve-collinear", "--masses", "3,2,1", "--ordering", "2,1,0")
    res = result(out)
    assert res["masses"] == [1.0, 2.0, 3.0]
    assert res["ordering"] == [2, 1, 0]


def test_bounds(capsys):
    _, out, _ = invoke(capsys, "bounds", "--masses", "1,1,1,1")
    res = result(out)
    assert res["length"]["lower"] == 2.0
    assert res["length"]["case"] == 2
    _, out, _ = invoke(capsys, "bounds", "--masses", "10,1,1")
    res = result(out)
    assert res["three_body"]["case"] == 1
    assert set(res["quartic_roots"]) == {"0", "1", "2"}


def test_dziobek(capsys):
    code, out, _ = invoke(capsys, "dziobek", "--input", "square.json", "--trials", "3")
    assert code == 0
    res = result(out)
    assert res["admissible"] is True
    assert len(res["dziobek_products"]) == 4


def test_simulate_writes_csv(capsys, tmp_path):
    traj = tmp_path / "t.csv"
    out_json = tmp_path / "r.json"
    code, _, _ = invoke(capsys, "simulate", "--input", "lagrange_triangle.json", "--steps", "50",
                        "--csv", str(traj), "--output", str(out_json))
    assert code == 0
    res = json.loads(out_json.read_text())["result"]
    assert res["samples"] == 51
    assert res["conservation"]["max_pair_L_drift"] < 1e-10
    rows = list(csv.reader(traj.open()))
    assert rows[0][:7] == ["t", "x0", "y0", "z0", "vx0", "vy0", "vz0"]
    assert len(rows[0]) == 1 + 3 * 6
    assert len(rows) == 52


def test_simulate_adaptive(capsys):
    code, out, _ = invoke(capsys, "simulate", "--input", "euler_line.json", "--steps", "20",
                          "--method", "adaptive", "--dt", "0.01")
    assert code == 0
    assert result(out)["t_final"] == pytest.approx(0.2)


def test_sweep_random_and_grid(capsys, tmp_path):
    path = tmp_path / "s.csv"
    code, out, _ = invoke(capsys, "sweep", "--n", "4", "--count", "5", "--csv", str(path))
    assert code == 0
    assert result(out)["rows"] == 5
    assert result(out)["bound_violations"] == 0
    header = next(csv.reader(path.open()))
    assert header[:4] == ["m1", "m2", "m3", "m4"]
    code, out, _ = invoke(capsys, "sweep", "--grid", "3", "--csv", str(path))
    assert result(out)["rows"] == 9
    rows = list(csv.reader(path.open()))
    assert "bracket_case" in rows[0]
    assert all(float(v) == float(v) for v in rows[1])


def test_sweep_parallel_matches_serial(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    invoke(capsys, "sweep", "--count", "6", "--csv", str(a))
    invoke(capsys, "sweep", "--count", "6", "--csv", str(b), "--jobs", "2")
    assert a.read_bytes() == b.read_bytes()


# ---- errors -----------------------------------------------------------------


def test_malformed_json_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"masses": [1, 2,\n  "positions": }')
    code, out, err = invoke(capsys, "classify", "--input", str(bad))
    assert code == 2
    assert out == ""
    assert "line 2" in err and "column" in err


def test_missing_field_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"masses": [1, 1, 1]}))
    code, _, err = invoke(capsys, "classify", "--input", str(bad))
    assert code == 2
    assert "positions" in err


def test_missing_file_exit_2(capsys):
    code, _, err = invoke(capsys, "classify", "--input", "no-such-file.json")
    assert code == 2 and "not found" in err


@pytest.mark.parametrize("argv", [
    ["classify"],
    ["solve-collinear", "--masses", "1,1"],
    ["solve-collinear", "--masses", "1,-1,1"],
    ["classify", "--input", "square.json", "--tol", "0"],
    ["simulate", "--input", "square.json", "--dt", "-1"],
    ["sweep", "--grid", "3", "--n", "4"],
])
def test_validation_errors_exit_2(capsys, argv):
    assert invoke(capsys, *argv)[0] == 2


def test_nonconvergence_exit_3(capsys, monkeypatch):
    from pairspace import cli
    from pairspace.collinear import ConvergenceError

    def stalled(*args, **kwargs):
        raise ConvergenceError("Newton stalled", last=None)

    monkeypatch.setattr(cli, "solve_moulton", stalled)
    code, _, err = invoke(capsys, "solve-collinear", "--masses", "1,2,3")
    assert code == 3 and "stalled" in err


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("nope").validate()
    with pytest.raises(ValueError):
        RunConfig("classify", method="euler").validate()
    assert run(RunConfig("nope")) == 2


# ---- determinism and formatting --------------------------------------------


def test_dumps_format():
    text = dumps({"b": 0.1, "a": [float("nan"), 1e-20]})
    assert text.index('"a"') < text.index('"b"')
    assert "null" in text and "1e-20" in text and "0.1" in text


@pytest.mark.parametrize("argv", [
    ["dziobek", "--input", "square.json"],
    ["sweep", "--count", "4", "--seed", "9"],
    ["solve-collinear", "--masses", "0.3,5,2,1"],
])
def test_byte_identical_reports(tmp_path, argv):
    outputs = []
    for k in range(2):
        # same relative paths in separate directories
        run_dir = tmp_path / str(k)
        run_dir.mkdir()
        subprocess.run([sys.executable, "-m", "pairspace", *argv, "--output", "report.json"],
                       check=True, cwd=run_dir)
        outputs.append((run_dir / "report.json").read_bytes())
    assert outputs[0] == outputs[1]
