import csv

import pytest

from ncstokes.cli import main
from ncstokes.quadcurl import CSV_HEADER


def test_verify_passes(capsys):
    assert main(["verify", "--n", "1", "--k", "0", "--bc", "hom"]) == 0
    out = capsys.readouterr().out
    lines = dict(l.split("=", 1) for l in out.splitlines() if "=" in l)
    assert lines["rank.curl"] == "13"
    assert lines["overall"] == "pass"


def test_conv_writes_csv(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["conv", "--levels", "1", "2", "--method", "decoupled", "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER and len(rows) == 3
    assert "wrote" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["conv", "--levels", "0"],
    ["conv", "--levels", "4", "2"],
    ["conv", "--tol", "-1"],
    ["conv", "--method", "magic"],
    ["verify", "--k", "3"],
    [],
])
def test_invalid_arguments_exit_2(argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_solver_failure_exit_1(capsys):
    code = main(["conv", "--levels", "2", "3", "--method", "schur", "--tol", "1e-14", "--maxiter", "1"])
    assert code == 1
    assert "solver failure" in capsys.readouterr().err
