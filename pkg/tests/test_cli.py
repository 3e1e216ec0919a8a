import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from trsketch.cli import main
from trsketch.harness import CSV_COLUMNS
from trsketch.model import read_instance, read_problem
from trsketch.projector import load_projector
from trsketch.solvers import solve_convex


@pytest.fixture
def instance_path(tmp_path):
    path = tmp_path / "inst.json"
    assert main(["generate", "--n", "20", "--m", "6", "--seed", "1", "--out", str(path)]) == 0
    return path


def test_generate_writes_normalized_instance(instance_path):
    inst = read_instance(instance_path)
    assert (inst.n, inst.m) == (20, 6) and inst.normalized


def test_project_saves_and_reuses_projector(instance_path, tmp_path):
    proj_json = tmp_path / "proj.json"
    binary = tmp_path / "p.bin"
    args = ["project", "--in", str(instance_path), "--d", "4", "--eps", "0.1", "--direction", "plus",
            "--seed", "5", "--save-projector", str(binary), "--out", str(proj_json)]
    assert main(args) == 0
    assert load_projector(binary).d == 4
    again = tmp_path / "again.json"
    assert main(["project", "--in", str(instance_path), "--projector", str(binary), "--eps", "0.1",
                 "--direction", "plus", "--out", str(again)]) == 0
    a, b = read_problem(proj_json), read_problem(again)
    assert np.array_equal(a.Abar, b.Abar) and np.array_equal(a.bbar, b.bbar)


def test_project_without_dimension_is_usage_error(instance_path, capsys):
    assert main(["project", "--in", str(instance_path), "--eps", "0.1"]) == 1
    assert "--d" in capsys.readouterr().err


def test_solve_and_fullness(instance_path, tmp_path):
    out = tmp_path / "sol.json"
    assert main(["solve", "--in", str(instance_path), "--method", "convex", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["status"] == "Optimal"
    # x = 0 is feasible and |c| = 1 on the unit ball
    assert report["objective"] == solve_convex(read_instance(instance_path)).objective
    assert -1.0 - 1e-9 <= report["objective"] <= 0.0
    out = tmp_path / "full.json"
    assert main(["fullness", "--in", str(instance_path), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["r"] >= 0.1 - 1e-6


def test_ball_qp_requires_unconstrained_instance(instance_path, capsys):
    assert main(["solve", "--in", str(instance_path), "--method", "ball-qp"]) == 2
    assert "ball-qp requires m=0" in capsys.readouterr().err


def test_usage_and_runtime_exit_codes(tmp_path, capsys):
    assert main(["solve"]) == 1
    assert main(["bogus"]) == 1
    assert main(["generate", "--n", "5", "--m", "2", "--model", "quadratic", "--rank-k", "9"]) == 2
    assert main(["solve", "--in", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["fullness", "--in", str(bad)]) == 2


def test_experiment_and_report(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 30, "m": 8, "d": 6, "epsilon": 0.1, "trials": 3, "master_seed": 2}))
    out_dir = tmp_path / "run"
    assert main(["experiment", "--config", str(cfg), "--out-dir", str(out_dir), "--threads", "1"]) == 0
    header = (out_dir / "trials.csv").read_text().splitlines()[0]
    assert header.split(",") == list(CSV_COLUMNS)
    summary = json.loads((out_dir / "summary.json").read_text())
    report = tmp_path / "report.json"
    assert main(["report", "--in", str(out_dir / "trials.csv"), "--out", str(report)]) == 0
    assert json.loads(report.read_text())["frequencies"] == summary["frequencies"]


def test_experiment_rejects_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 30, "m": 8, "d": 6, "bogus": 1}))
    assert main(["experiment", "--config", str(cfg), "--out-dir", str(tmp_path / "x")]) == 2


def test_check_lemmas_small(tmp_path, capsys):
    out = tmp_path / "lemmas.json"
    assert main(["check-lemmas", "--n", "200", "--d", "100", "--eps", "0.5", "--trials", "50", "--pairs", "50",
                 "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert set(data["reports"]) == {"norm_preservation", "inner_product", "linear_map", "quadratic_form"}
    assert "norm_preservation: fraction" in capsys.readouterr().out


@pytest.mark.skipif(shutil.which("trsketch") is None, reason="console script not installed")
def test_console_script_exit_code():
    proc = subprocess.run(["trsketch", "solve"], capture_output=True, text=True)
    assert proc.returncode == 1
    proc = subprocess.run([sys.executable, "-m", "trsketch.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
