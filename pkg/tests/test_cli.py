"""Command-line interface: exit codes, report schema, determinism."""
import json

import numpy as np
import pytest

from rbmrate import cli, model, reflect


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, out


def _model_file(tmp_path, params):
    path = tmp_path / "model.json"
    model.save_model(params, path)
    return str(path)


def test_validate_rank_ok(capsys):
    code, out = _run(["validate", "--rank", "atlas:3", "--deterministic"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["schema"] == cli.SCHEMA_REPORT
    assert rep["result"]["admissible"] is True
    assert "runtime" not in rep


def test_validate_inadmissible_exit_1(tmp_path, capsys):
    params = model.ModelParams(d=1, mu=np.array([1.0]), diff=np.eye(1),
                               refl=np.eye(1))
    code, out = _run(["validate", "--model", _model_file(tmp_path, params)],
                     capsys)
    assert code == 1
    rep = json.loads(out)
    assert rep["result"]["admissible"] is False
    assert "runtime" in rep


def test_config_error_exit_2(capsys):
    code, _ = _run(["validate", "--rank", "atlas:zzz"], capsys)
    assert code == 2
    code, _ = _run(["bounds"], capsys)   # neither --model nor --rank
    assert code == 2
    code, _ = _run(["bounds", "--rank", "atlas:3", "--model", "x.json"], capsys)
    assert code == 2


def test_bounds_report_keys(capsys):
    code, out = _run(["bounds", "--rank", "atlas:3", "--deterministic",
                      "--t", "2000000"], capsys)
    assert code == 0
    result = json.loads(out)["result"]
    expected = {"nR", "aTheta", "bTheta", "R1", "R2", "A0", "D2", "aUsed",
                "C1z", "C2z", "deltaP", "D1", "t0", "C1x", "C2x", "tMin",
                "tRelBound", "vTilde", "lambdaV", "phiV", "tV", "mV", "w1AtT"}
    assert set(result) == expected
    assert result["nR"] == 1
    assert result["aUsed"] == 136.0          # b_theta = 2 doubles the scale
    assert result["C1x"] == pytest.approx(24.0)
    assert result["w1AtT"]["valid"] is True    # 2e6 clears tMin ~ 1.81e6
    assert result["w1AtT"]["value"] > 0.0


def test_bounds_a_used_override(capsys):
    code, out = _run(["bounds", "--rank", "atlas:3", "--a-used", "68",
                      "--deterministic"], capsys)
    assert code == 0
    result = json.loads(out)["result"]
    assert result["aUsed"] == 68.0
    assert result["t0"] == pytest.approx(35072.0)
    code, _ = _run(["bounds", "--rank", "atlas:3", "--a-used", "10"], capsys)
    assert code == 2


def test_simulate_with_trajectory_dump(tmp_path, capsys):
    base = str(tmp_path / "paths")
    out_file = str(tmp_path / "report.json")
    code, _ = _run(["simulate", "--rank", "atlas:2", "--paths", "3",
                    "--dt", "0.1", "--horizon", "1.0", "--seed", "7",
                    "--traj-out", base, "--out", out_file,
                    "--deterministic"], capsys)
    assert code == 0
    rep = json.loads(open(out_file).read())
    assert rep["result"]["nPaths"] == 3
    assert len(rep["result"]["files"]) == 3
    traj = reflect.load_trajectory(f"{base}_0000")
    assert traj.states.shape == (11, 1)
    assert (tmp_path / "paths_0002.csv").exists()


def test_couple_contraction_and_domination(capsys):
    code, out = _run(["couple", "--rank", "atlas:3", "--paths", "10",
                      "--dt", "0.05", "--horizon", "5", "--x0", "1.0",
                      "--v", "auto", "--deterministic"], capsys)
    assert code == 0
    result = json.loads(out)["result"]
    assert result["contraction"]["passed"] is True
    assert result["domination"]["passed"] is True
    assert result["contraction"]["nViolations"] == 0


def test_stationary_gates(capsys):
    args = ["stationary", "--rank", "atlas:2", "--paths", "400",
            "--dt", "0.02", "--t", "10", "--seed", "3", "--deterministic"]
    code, out = _run(args + ["--max-ks", "0.2"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["result"]["passed"] is True
    assert rep["result"]["rates"] == [1.0]
    code, out = _run(args + ["--max-ks", "0.0001"], capsys)
    assert code == 1
    assert json.loads(out)["result"]["passed"] is False


def test_stationary_requires_rank(tmp_path, capsys):
    params = model.ModelParams(d=1, mu=np.array([-1.0]), diff=np.eye(1),
                               refl=np.eye(1))
    code, _ = _run(["stationary", "--model", _model_file(tmp_path, params)],
                   capsys)
    assert code == 2


def test_verify_passes(capsys):
    code, out = _run(["verify", "--rank", "atlas:3", "--paths", "10",
                      "--dt", "0.05", "--horizon", "5", "--deterministic"],
                     capsys)
    assert code == 0
    result = json.loads(out)["result"]
    assert result["passed"] is True
    assert result["projectionResidualOk"] is True
    assert result["drift"]["violations"] == 0
    assert result["smallSet"]["ok"] is True
    assert result["supBound"]["empirical"] <= result["supBound"]["bound"]
    assert result["w1"]["ok"] is True
    assert len(result["w1"]["times"]) == 3


def test_verify_writes_w1_table(tmp_path, capsys):
    out_file = tmp_path / "battery.json"
    code, _ = _run(["verify", "--model", _model_file(
                        tmp_path,
                        model.ModelParams(d=1, mu=np.array([-1.0]),
                                          diff=np.eye(1), refl=np.eye(1))),
                    "--paths", "10", "--dt", "0.05", "--horizon", "5",
                    "--deterministic", "--out", str(out_file)], capsys)
    assert code == 0
    rep = json.loads(out_file.read_text())
    csv_path = tmp_path / "battery_w1.csv"
    assert rep["result"]["files"] == [str(csv_path)]
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "t,mean,std_err,bound"
    assert len(lines) == 4


def test_deterministic_reports_thread_invariant(capsys):
    base = ["stationary", "--rank", "atlas:2", "--paths", "300", "--dt", "0.05",
            "--t", "5", "--seed", "11", "--deterministic"]
    _, out1 = _run(base + ["--threads", "1"], capsys)
    _, out4 = _run(base + ["--threads", "4"], capsys)
    assert out1 == out4
    rep = json.loads(out1)
    assert "runtime" not in rep
    assert rep["config"]["seed"] == 11


def test_non_deterministic_report_carries_runtime(capsys):
    _, out = _run(["bounds", "--rank", "atlas:2"], capsys)
    rep = json.loads(out)
    assert "runtime" in rep
    assert rep["runtime"]["threads"] == 1
    assert "timestamp" in rep["runtime"]


def test_report_written_to_file(tmp_path, capsys):
    out_file = tmp_path / "rep.json"
    code, printed = _run(["bounds", "--rank", "atlas:2", "--out",
                          str(out_file), "--deterministic"], capsys)
    assert code == 0
    assert printed == ""
    rep = json.loads(out_file.read_text())
    assert rep["schema"] == cli.SCHEMA_REPORT
