import subprocess
import sys

import pytest

from qrak.cli import main

HEAD = 'problem "p"\nvar x1 real\nvar x2 real\nminimize expr "x1 + x2"\n'


def write(tmp_path, text, name="p.qrak"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_classify_styrene(fixtures, capsys):
    assert main(["classify", str(fixtures / "styrene_like.qrak")]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    cls = [r.split()[1:3] for r in rows]
    assert cls == [["QRSK", "5"]] * 7 + [["NUSK", "8"]] * 4


def test_legend(capsys):
    assert main(["classify", "--legend"]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    assert [r.split()[1] for r in rows] == ["QRAK", "NRAK", "QUAK", "NUAK", "QRSK", "NRSK", "QUSK", "NUSK", "NUSH"]


def test_classify_malformed(tmp_path, capsys):
    path = write(tmp_path, HEAD + 'constraint c class QUAK expr "x1 +"\n')
    assert main(["classify", path]) == 2
    err = capsys.readouterr().err
    assert "line 5" in err and "col" in err


def test_validate_clean(fixtures, capsys):
    assert main(["validate", str(fixtures / "omega.qrak")]) == 0


def test_validate_declared_hidden(tmp_path, capsys):
    path = write(tmp_path, HEAD + 'constraint c class NUSH expr "x1 >= 0"\n')
    assert main(["validate", path]) == 2
    assert "DeclaredHidden" in capsys.readouterr().out


def test_validate_strict(tmp_path, capsys):
    path = write(
        tmp_path,
        HEAD + 'constraint c class NRSK tol 0 sim s out 0 "== 0"\nsimulation s func log_square timeout 5 outputs 1\n',
    )
    assert main(["validate", path]) == 0
    assert "EqualityNonquantifiable" in capsys.readouterr().out
    assert main(["validate", "--strict", path]) == 3


def test_validate_csv(tmp_path, capsys):
    path = write(tmp_path, HEAD + 'constraint c class NUSH expr "x1 >= 0"\n')
    main(["validate", "--format", "csv", path])
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "severity,code,line,col,message"
    assert lines[1].startswith("error,DeclaredHidden,5,")


def test_solve_omega(fixtures, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["solve", str(fixtures / "omega.qrak"), "--x0", "1,1", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "status: Solved" in text and "f: 0.0" in text
    assert {p.name for p in out.iterdir()} >= {"history.csv", "report.txt", "policy_trace.txt"}


def test_solve_zero_budget(fixtures, tmp_path):
    assert main(["solve", str(fixtures / "omega.qrak"), "--budget-evals", "0", "--out", str(tmp_path)]) == 4


def test_solve_missing_binary(fixtures, tmp_path):
    assert main(["solve", str(fixtures / "missing_bb.qrak"), "--out", str(tmp_path)]) == 5


def test_solve_invalid(tmp_path):
    path = write(tmp_path, HEAD + 'constraint c class NUSH expr "x1 >= 0"\n')
    assert main(["solve", path, "--out", str(tmp_path / "o")]) == 2


def test_workdir(fixtures, tmp_path):
    code = main(["solve", str(fixtures / "omega.qrak"), "--x0", "1,1", "--workdir", str(tmp_path), "--out", "r"])
    assert code == 0 and (tmp_path / "r" / "history.csv").exists()


def test_hints(tmp_path, capsys):
    path = write(
        tmp_path,
        HEAD + 'constraint c class NRSK tol 0 sim s out 0 "<= 0"\nsimulation s func log_square timeout 5 outputs 1\n',
    )
    assert main(["hints", path]) == 0
    assert "QRSK candidate, leaf 6→5" in capsys.readouterr().out


def test_entry_point(fixtures):
    done = subprocess.run(
        [sys.executable, "-m", "qrak", "classify", "--legend"], capture_output=True, text=True, check=False
    )
    assert done.returncode == 0 and "NUSH" in done.stdout


@pytest.mark.parametrize("argv", [[], ["nope"]])
def test_bad_usage(argv):
    with pytest.raises(SystemExit) as ei:
        main(argv)
    assert ei.value.code == 2
