import json
import subprocess
import sys

import pytest

from sparseclt import cli, exact, vlambda
from sparseclt.csvio import read_csv
from sparseclt.wgraph import WeightDist, sample_er_graph


def write(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return p


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_vlambda_rows(tmp_path):
    cfg = write(tmp_path, "v.json", {"experiment": "vlambda", "lambda": 2, "k_max": 60})
    assert run("run", cfg, "--out", tmp_path / "o") == 0
    rows = read_csv(tmp_path / "o" / "v.csv")
    assert len(rows) == 61
    A = vlambda.fixed_point_A(2.0)
    assert float(rows[60]["b_k"]) - A < 1e-10
    side = json.loads((tmp_path / "o" / "v.csv.json").read_text())
    assert side["config"]["lambda"] == 2 and "wall_time_s" in side and side["version"]


def test_solve_inline_graph(tmp_path):
    g = sample_er_graph(7, 0.6, WeightDist.exp1(), 3)
    cfg = write(tmp_path, "s.json", {"experiment": "solve", "problem": "MWM", "graph": g.to_text()})
    assert run("run", cfg, "--out", tmp_path) == 0
    row = read_csv(tmp_path / "s.csv")[0]
    assert float(row["value"]) == pytest.approx(exact.brute_force("MWM", g), abs=1e-9)
    assert float(row["value"]) == pytest.approx(float(row["brute_force"]), abs=1e-9)


def test_solve_graph_file(tmp_path):
    g = sample_er_graph(6, 0.8, WeightDist.exp1(), 4)
    (tmp_path / "g.txt").write_text(g.to_text())
    cfg = write(tmp_path, "s.json", {"experiment": "solve", "problem": "ECdiluted", "lambda": 1.0, "graph_file": str(tmp_path / "g.txt")})
    assert run("run", cfg, "--out", tmp_path) == 0


def test_missing_lambda(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", {"experiment": "vlambda", "k_max": 60})
    assert run("run", cfg) == 1
    assert "'lambda'" in capsys.readouterr().err


def test_unknown_key(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", {"experiment": "vlambda", "lambda": 2, "k_max": 5, "colour": 1})
    assert run("validate", cfg) == 1
    assert "colour" in capsys.readouterr().err


def test_parse_error_has_line(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", '{"experiment": "vlambda",\n  "lambda": 2,,\n}')
    assert run("validate", cfg) == 1
    assert "line 2" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg",
    [
        {"experiment": "teleport"},
        {"lambda": 2},
        {"experiment": "vlambda", "lambda": -1, "k_max": 3},
        {"experiment": "vlambda", "lambda": 2, "k_max": 0},
        {"experiment": "clt", "problem": "MWM", "n_list": [10], "reps": 10},
        {"experiment": "clt", "problem": "MWM", "n_list": [], "reps": 10, "lambda": 2},
        {"experiment": "coupling", "n_list": [10], "lambda": 2, "k": 1, "reps": 10, "statistic": "girth"},
        {"experiment": "solve", "problem": "MWM"},
        {"experiment": "solve", "problem": "DMM", "graph": "n 2\n"},
        {"experiment": "delta_k", "problem": "DMM", "lambda": 2, "k_list": [1], "n_samples": 100},
    ],
)
def test_invalid_configs(tmp_path, cfg):
    assert run("validate", write(tmp_path, "c.json", cfg)) == 1


def test_missing_file(tmp_path):
    assert run("validate", tmp_path / "nope.json") == 1


def test_byte_identical_and_resume(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"experiment": "clt", "problem": "DMM", "n_list": [30, 60], "reps": 60, "lambda": 2.0, "master_seed": 9})
    assert run("run", cfg, "--out", tmp_path / "a") == 0
    assert run("run", cfg, "--out", tmp_path / "b") == 0
    for name in ("c.csv", "c.replicates.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    capsys.readouterr()
    assert run("run", cfg, "--out", tmp_path / "a") == 0
    assert "up to date" in capsys.readouterr().out
    assert run("run", cfg, "--out", tmp_path / "a", "--seed", "10") == 0
    assert (tmp_path / "a" / "c.csv").read_bytes() != (tmp_path / "b" / "c.csv").read_bytes()


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    cfg = write(tmp_path, "v.json", {"experiment": "vlambda", "lambda": 1, "k_max": 3, "output": "x.csv"})
    assert run("run", cfg) == 0
    assert (tmp_path / "env" / "x.csv").exists()


@pytest.mark.parametrize(
    "cfg",
    [
        {"experiment": "bracket", "problem": "ECdiluted", "reps": 20},
        {"experiment": "delta_k", "problem": "EC", "lambda": 2, "k_list": [1, 2], "n_samples": 200},
        {"experiment": "delta_k", "problem": "MWM", "lambda": 2, "k_list": [3], "n_samples": 200, "dist": "exp1"},
        {"experiment": "vlambda6", "lambda_list": [1, 4], "m": 128, "k_max": 30},
        {"experiment": "varprofile", "problem": "ECdiluted", "n_list": [30], "reps": 20, "lambda_rule": "8logn"},
        {"experiment": "truncation", "n": 20, "reps": 5},
        {"experiment": "treeprob", "n_list": [100, 200], "lambda": 2, "k": 2, "reps": 100},
        {"experiment": "coupling", "n_list": [100], "lambda": 2, "k": 1, "reps": 1000, "statistic": "root_degree", "n_boot": 5},
        {"experiment": "identity", "n": 5, "lambda": 2, "reps": 10},
    ],
)
def test_every_experiment_runs(tmp_path, cfg):
    p = write(tmp_path, "e.json", cfg)
    assert run("run", p, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "e.csv")
    assert rows and all(rows[0].keys())


def test_failed_check_exit_2(tmp_path, monkeypatch):
    from sparseclt import clt

    monkeypatch.setattr(clt, "perturbation_identity_check", lambda *a, **k: clt.IdentityReport(3, 2, 0.1))
    p = write(tmp_path, "i.json", {"experiment": "identity", "n": 5, "lambda": 2, "reps": 3})
    assert run("run", p, "--out", tmp_path) == 2
    assert json.loads((tmp_path / "i.csv.json").read_text())["status"] == "failed"


def test_oracle_suite(capsys):
    assert run("oracle-suite", "--instances", "20") == 0
    assert capsys.readouterr().out.count("[PASS]") == 4


def test_acceptance_subset(capsys):
    assert run("acceptance", "--only", "5") == 0
    assert "criterion  5" in capsys.readouterr().out


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "sparseclt.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "sparseclt" in out.stdout
