import csv
import json

import numpy as np
import pytest

from fogrl.agents import load_table
from fogrl.cli import expand_list, main
from fogrl.mdp import MdpConfig


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_expand_list():
    assert expand_list("1-3,7") == ["1", "2", "3", "7"]
    assert expand_list("ql,thld:1-3") == ["ql", "thld:1", "thld:2", "thld:3"]


def test_train_is_reproducible(tmp_path):
    for d in ("a", "b"):
        assert run("train", "--method", "ql", "--env", 7, "--episodes", 300, "--seed", 3, "--out", tmp_path / d) == 0
    for name in ("ql_e7.table", "ql_e7_trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    bundle = json.loads((tmp_path / "a" / "ql_e7_bundle.json").read_text())
    assert bundle["config"]["u_high"] == pytest.approx(4.97)
    assert bundle["episodes"] == 300 and bundle["provenance"]["seed"] == 3
    assert len(read_csv(tmp_path / "a" / "ql_e7_trace.csv")) == 300


def test_train_mc_and_evaluate_table(tmp_path):
    assert run("train", "--method", "mc", "--env", 7, "--episodes", 400, "--out", tmp_path) == 0
    assert run("evaluate", "--table", tmp_path / "mc_e7.table", "--env", 7, "--episodes", 500, "--out", tmp_path) == 0
    row = read_csv(tmp_path / "evaluate.csv")[0]
    assert row["policy"] == "mc_e7" and int(row["episodes"]) == 500


def test_evaluate_thresholds(tmp_path, capsys):
    assert run("evaluate", "--threshold", 1, "--env", 7, "--out", tmp_path) == 0
    assert run("evaluate", "--threshold", 10, "--env", 7, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "evaluate.csv")
    assert [r["policy"] for r in rows] == ["thld:1", "thld:10"]
    assert float(rows[0]["mean_T"]) == 15.0
    assert float(rows[1]["mean_T"]) == pytest.approx(750, rel=0.05)
    assert "mean_R" in capsys.readouterr().out


def test_evaluate_custom_environment(tmp_path):
    assert run("evaluate", "--threshold", 6, "--rho", 0.35, "--episodes", 300, "--out", tmp_path) == 0
    assert float(read_csv(tmp_path / "evaluate.csv")[0]["rho"]) == pytest.approx(0.35)


def test_sweep_three_rows(tmp_path):
    assert run("sweep", "--envs", "1,7,19", "--policies", "thld:5", "--episodes", 200, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert [(r["env"], r["policy"]) for r in rows] == [("1", "thld:5"), ("7", "thld:5"), ("19", "thld:5")]
    assert len(read_csv(tmp_path / "ratios.csv")) == 3
    assert len(json.loads((tmp_path / "sweep.json").read_text())["rows"]) == 3


def test_oracle_outputs(tmp_path):
    for d in ("a", "b"):
        assert run("oracle", "--env", 7, "--out", tmp_path / d) == 0
    for name in ("oracle_e7_q.table", "oracle_e7_v.table", "oracle_e7_trace.csv", "oracle_e7_report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    V, header = load_table(tmp_path / "a" / "oracle_e7_v.table", MdpConfig())
    Q, _ = load_table(tmp_path / "a" / "oracle_e7_q.table", MdpConfig())
    assert np.all(V.grid[15] == 0) and np.all(Q.grid[15] == 0)
    assert header["method"] == "oracle"


def test_oracle_gap_against_learned_table(tmp_path):
    run("train", "--method", "mc", "--env", 7, "--episodes", 2000, "--out", tmp_path)
    assert run("oracle", "--env", 7, "--table", tmp_path / "mc_e7.table", "--out", tmp_path) == 0
    gap = json.loads((tmp_path / "oracle_e7_report.json").read_text())["gap"]
    assert 0 <= gap["agreement"] <= 1 and gap["states"] > 0


def test_config_error_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "env": 7,\n  "gamma": 1.5\n}\n')
    assert run("train", "--config", cfg, "--out", tmp_path) == 2
    err = capsys.readouterr().err
    assert f"{cfg}:3:" in err and "gamma" in err
    assert not list(tmp_path.glob("*.table"))


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "env": 7,\n  "N": 15,\n  "learning_rate": 0.1\n}\n')
    assert run("train", "--config", cfg) == 2
    assert ":4:" in capsys.readouterr().err


def test_config_invalid_json(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "env": 7,\n  oops\n}\n')
    assert run("oracle", "--config", cfg) == 2
    assert ":3:" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"env": 3, "eval_episodes": 100, "threshold": 2}))
    assert run("evaluate", "--config", cfg, "--threshold", 1, "--out", tmp_path) == 0
    row = read_csv(tmp_path / "evaluate.csv")[0]
    assert row["policy"] == "thld:1" and row["episodes"] == "100"


def test_table_shape_mismatch(tmp_path, capsys):
    run("train", "--method", "ql", "--env", 7, "--N", 5, "--episodes", 50, "--out", tmp_path)
    assert run("evaluate", "--table", tmp_path / "ql_e7.table", "--env", 7, "--out", tmp_path) == 2
    err = capsys.readouterr().err
    assert "N=5, U=10" in err and "N=15, U=10" in err


@pytest.mark.parametrize("argv", [
    ["evaluate", "--threshold", 11, "--env", 7],
    ["evaluate", "--env", 7],
    ["train", "--env", 20],
    ["train", "--epsilon", 1.5],
    ["sweep", "--envs", "7", "--policies", "bogus"],
])
def test_usage_errors(tmp_path, argv):
    assert run(*argv, "--out", tmp_path) == 2
