import csv
import io
import json
import subprocess
import sys

import pytest

from entropic_mcts.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main
from entropic_mcts.dp import erm_backward_induction
from entropic_mcts.experiments import OUT_ENV_VAR, SUMMARY_HEADER
from entropic_mcts.mdp import dumps_mdp, mdp4_factory

FAST = ["--seeds", "4", "--horizon", "6", "--bootstrap", "200"]


def summary_rows(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == SUMMARY_HEADER
    return rows[1:]


def test_solve_matches_oracle(capsys):
    assert main(["solve", "--mdp", "mdp4", "--beta", "0.5"]) == EXIT_OK
    out = capsys.readouterr().out
    m = mdp4_factory(0.1)
    V, pi = erm_backward_induction(m, 0.5)
    printed = float(out.splitlines()[0].split("=")[1])
    assert printed == V.root(m)
    assert f"root action = {pi(0, 0)}" in out


def test_solve_writes_files(tmp_path, capsys):
    assert main(["solve", "--beta", "1", "--horizon", "4", "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.reader(open(tmp_path / "solve_policy.csv")))
    assert rows[0] == ["depth", "state", "action", "value"] and len(rows) == 1 + 4 * 4
    assert json.loads((tmp_path / "solve_metadata.json").read_text())["horizon"] == 4


def test_plan_json(capsys):
    assert main(["plan", "--beta", "0.5", "--horizon", "5", "--iterations", "100", "--algorithm", "acc-mcts"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["algorithm"] == "acc-mcts" and rec["iterations"] == 100


def test_table1_three_rows(capsys):
    assert main(["table1", "--beta", "0.5", "--iterations", "50", *FAST]) == EXIT_OK
    rows = summary_rows(capsys.readouterr().out)
    assert [r[0] for r in rows] == ["erm-bi", "erm-mcts", "acc-mcts"]


def test_table1_env_out_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUT_ENV_VAR, str(tmp_path))
    assert main(["table1", "--beta", "0.5", "--iterations", "20", "--algorithms", "erm-bi", *FAST]) == EXIT_OK
    assert {p.name for p in tmp_path.iterdir()} == {"table1_per_seed.csv", "table1_summary.csv",
                                                    "table1_metadata.json"}


def test_curve(capsys):
    assert main(["curve", "--beta", "1", "--grid", "10", "30", "--algorithms", "erm-mcts", *FAST]) == EXIT_OK
    rows = summary_rows(capsys.readouterr().out)
    assert [r[2] for r in rows] == ["10", "30"]


def test_concentration_small(tmp_path, capsys):
    code = main(["concentration", "--probs", "0.0", "1.0", "--runs", "100", "--n-grid", "10", "100",
                 "--tail-runs", "100", "--tail-n", "50", "--out", str(tmp_path)])
    assert code in (EXIT_OK, EXIT_RUNTIME)
    assert (tmp_path / "concentration.csv").exists()


def test_validate_ok(tmp_path, capsys):
    path = tmp_path / "ok.mdp"
    path.write_text(dumps_mdp(mdp4_factory(horizon=3)))
    assert main(["validate-mdp", str(path)]) == EXIT_OK
    assert "ok" in capsys.readouterr().out


def test_validate_bad_file(tmp_path, capsys):
    path = tmp_path / "bad.mdp"
    path.write_text(dumps_mdp(mdp4_factory(horizon=3)).replace("0 0 2 0.9\n", "0 0 2 0.5\n", 1))
    assert main(["validate-mdp", str(path)]) == EXIT_INVALID
    assert "row sums" in capsys.readouterr().err


def test_validate_garbage(tmp_path, capsys):
    path = tmp_path / "junk.mdp"
    path.write_text("hello\n")
    assert main(["validate-mdp", str(path)]) == EXIT_INVALID


@pytest.mark.parametrize("argv", [
    ["solve", "--beta", "0.5", "--bogus"],
    ["solve"],
    ["solve", "--beta", "-1"],
    ["frobnicate"],
    [],
    ["solve", "--beta", "1", "--mdp", "/nonexistent/file.mdp"],
    ["table1", "--seeds", "0"],
    ["plan", "--beta", "1", "--iterations", "1"],
])
def test_invalid_usage(argv, capsys):
    assert main(argv) == EXIT_INVALID
    assert capsys.readouterr().err


def test_unknown_flag_prints_usage(capsys):
    main(["table1", "--nope"])
    assert "usage:" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "entropic_mcts", "solve", "--beta", "0.5", "--horizon", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("V0(s0) = ")
