import csv
import json
import pathlib

import pytest

from maxintpos import cli

SCENARIOS = pathlib.Path(__file__).resolve().parents[1] / "scenarios"


def write(tmp_path, data, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def run(tmp_path, *argv, out="out"):
    d = tmp_path / out
    code = cli.main([*argv, "--out", str(d)])
    report = json.loads((d / "report.json").read_text()) if (d / "report.json").exists() else None
    return code, report, d


def table(path):
    with open(path) as fh:
        return list(csv.DictReader(fh, delimiter="\t"))


def test_certify_centered_cube_ball_passes(tmp_path):
    code, rep, d = run(tmp_path, "certify", "--scenario", str(SCENARIOS / "cube_ball.json"), "--budget", "100000")
    assert code == cli.EXIT_OK and rep["payload"]["pass"]
    assert rep["scenario"]["name"] == "cube-ball" and rep["exit_code"] == 0
    rows = table(d / "residuals.tsv")
    assert [r["i"] + r["j"] for r in rows] == ["00", "01", "10", "11"]


def test_certify_offcenter_fails_with_exit_2(tmp_path):
    code, rep, _ = run(tmp_path, "certify", "--scenario", str(SCENARIOS / "cube_ball_offcenter.json"),
                       "--budget", "100000")
    assert code == cli.EXIT_FAIL
    assert rep["payload"]["center_residual"] > 10 * rep["tol"]


def test_optimize_gaussian_pair(tmp_path):
    code, rep, d = run(tmp_path, "optimize", "--scenario", str(SCENARIOS / "gaussian_pair.json"),
                       "--budget", "50000")
    assert code == cli.EXIT_OK and rep["payload"]["converged"]
    rows = table(d / "trajectory.tsv")
    vals = [float(r["value"]) for r in rows]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert "certificate" in rep["payload"]


def test_optimize_non_convergence_exit_3(tmp_path):
    sc = json.loads((SCENARIOS / "gaussian_pair.json").read_text())
    sc["optimizer"] = {"max_iters": 1, "restarts": 1}
    code, rep, _ = run(tmp_path, "optimize", "--scenario", write(tmp_path, sc), "--budget", "20000")
    assert code == cli.EXIT_NONCONV and not rep["payload"]["converged"]


def test_gradcheck(tmp_path):
    code, rep, d = run(tmp_path, "gradcheck", "--scenario", str(SCENARIOS / "exp_gauge_cube.json"),
                       "--budget", "100000", "--h", "1e-2", "--directions", "3", "--shifts", "2")
    assert code == cli.EXIT_OK
    assert len(table(d / "gradcheck.tsv")) == 5


def test_scan_and_mu_john(tmp_path):
    sc = str(SCENARIOS / "gaussian_cube_measure.json")
    code, rep, d = run(tmp_path, "scan", "--scenario", sc, "--budget", "50000", "--radii", "1.0,1.2", out="scan")
    assert code == cli.EXIT_OK and rep["payload"]["sandwich_ok"]
    assert [float(r["r"]) for r in table(d / "scan.tsv")] == [1.0, 1.2]
    code, rep, d = run(tmp_path, "mu-john", "--scenario", sc, "--budget", "50000", "--radii", "1.2,1.05",
                       out="mj")
    assert code in (cli.EXIT_OK, cli.EXIT_FAIL)
    assert len(table(d / "mu_john.tsv")) == 2


def test_validate_small_budget(tmp_path):
    code, rep, d = run(tmp_path, "validate", "--budget", "50000")
    assert code == cli.EXIT_OK
    assert rep["payload"]["closed_form_max_error"] <= 1e-8
    assert len(rep["payload"]["polar"]) == 12


def test_determinism_across_workers(tmp_path):
    sc = str(SCENARIOS / "cube_ball_offcenter.json")
    _, a, _ = run(tmp_path, "certify", "--scenario", sc, "--budget", "50000", "--workers", "1", out="w1")
    _, b, _ = run(tmp_path, "certify", "--scenario", sc, "--budget", "50000", "--workers", "8", out="w8")
    assert a["payload"] == b["payload"]


@pytest.mark.parametrize("argv", [
    ["certify"],
    ["frobnicate", "--scenario", "x.json"],
    ["certify", "--scenario", "/nonexistent/file.json"],
    ["certify", "--scenario", str(SCENARIOS / "cube_ball.json"), "--budget", "10"],
    ["certify", "--scenario", str(SCENARIOS / "cube_ball.json"), "--workers", "0"],
    ["scan", "--scenario", str(SCENARIOS / "gaussian_pair.json"), "--radii", "1.0"],
    ["scan", "--scenario", str(SCENARIOS / "gaussian_cube_measure.json"), "--radii", "a,b"],
])
def test_input_errors_exit_1(tmp_path, argv, capsys):
    assert cli.main([*argv, "--out", str(tmp_path / "o")]) == cli.EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_bad_json_and_dim_mismatch_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "name": "x",\n  "dim": 2,,\n}\n')
    assert cli.main(["certify", "--scenario", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_INPUT
    assert "line 3" in capsys.readouterr().err
    sc = json.loads((SCENARIOS / "cube_ball.json").read_text())
    sc["g"]["body"]["dim"] = 3
    assert cli.main(["certify", "--scenario", write(tmp_path, sc), "--out", str(tmp_path / "o")]) == cli.EXIT_INPUT
    assert "'dim'" in capsys.readouterr().err


def test_support_regularity_false_is_unsupported(tmp_path):
    sc = json.loads((SCENARIOS / "cube_ball.json").read_text())
    sc["flags"]["support_regularity"] = False
    assert cli.main(["certify", "--scenario", write(tmp_path, sc), "--out", str(tmp_path / "o")]) == cli.EXIT_INPUT
