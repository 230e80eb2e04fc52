import json

import pytest

from wignerlogdet.cli import EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_moments_exact_field(capsys):
    code, out, _ = run(capsys, "moments", "--n", "2", "--class", "goe")
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["summary"]["exact"] == 7
    assert rep["config"]["n"] == 2 and "versions" in rep and "timestamp" not in rep


def test_moments_csv_table(capsys):
    code, out, _ = run(capsys, "moments", "--n", "4", "--class", "gue", "--replicates", "500",
                       "--seed", "1", "--format", "csv")
    assert code == EXIT_OK
    header, row = out.strip().splitlines()
    assert header == "n,class,exact,mc_estimate,mc_stderr"
    assert row.startswith("4,gue,45,")


def test_clt_report_and_determinism(capsys):
    args = ["clt", "--ensemble", "gue", "--n", "128", "--replicates", "130", "--seed", "7",
            "--law", "gue"]
    code, a, _ = run(capsys, *args)
    assert code == EXIT_OK
    _, b, _ = run(capsys, *args)
    _, c, _ = run(capsys, *args, "--workers", "2")
    assert a == b == c
    s = json.loads(a)["summary"]
    assert {"summary", "ks", "law"} <= set(s)
    assert s["summary"]["N"] == 130


def test_clt_dense_matches_no_tridiagonal_for_iid(capsys):
    code, _, err = run(capsys, "clt", "--ensemble", "iid-gaussian-real", "--n", "8",
                       "--replicates", "10", "--seed", "1")
    assert code == EXIT_USAGE and "tridiagonal" in err
    code, out, _ = run(capsys, "clt", "--ensemble", "iid-gaussian-real", "--method", "dense",
                       "--n", "8", "--replicates", "10", "--seed", "1")
    assert code == EXIT_OK and json.loads(out)["summary"]["law"] == "iid-real"


def test_usage_errors(capsys):
    assert run(capsys, "clt", "--n", "64")[0] == EXIT_USAGE  # no seed
    assert run(capsys, "clt", "--n", "0", "--seed", "1")[0] == EXIT_USAGE
    assert run(capsys, "nonsense")[0] == EXIT_USAGE
    assert run(capsys, "clt", "--ensemble", "cauchy", "--seed", "1")[0] == EXIT_USAGE
    assert run(capsys, "ftc", "--seed", "1", "--tol", "bogus=1")[0] == EXIT_USAGE


def test_numerical_failure_exit_code(capsys):
    code, out, err = run(capsys, "ftc", "--seed", "1", "--replicates", "2", "--tol", "ftc=1e-30")
    assert code == EXIT_NUMERIC
    assert json.loads(out)["failures"] and "tolerance" in err


def test_output_file_and_timestamp(tmp_path, capsys):
    path = tmp_path / "r.json"
    code, out, _ = run(capsys, "phase", "--n", "64", "--replicates", "20", "--seed", "2",
                       "--output", str(path), "--timestamp")
    assert code == EXIT_OK and out == ""
    rep = json.loads(path.read_text())
    assert "timestamp" in rep and len(rep["summary"]["weyl"]) == 3


@pytest.mark.parametrize("what,header", [("matrix", "i,j,re,im"), ("model", "i,a,b"),
                                         ("trace", "j,logF,theta,h"), ("householder", "i,a,b")])
def test_sample_csv(capsys, what, header):
    code, out, _ = run(capsys, "sample", "--what", what, "--n", "4", "--seed", "3")
    assert code == EXIT_OK
    assert out.splitlines()[0] == header


def test_other_subcommands(capsys):
    for argv in (["trotter-check", "--n", "16", "--replicates", "30", "--seed", "1"],
                 ["martingale", "--n", "64", "--replicates", "10", "--seed", "1"],
                 ["resolvent", "--n", "16", "--replicates", "2", "--seed", "1"],
                 ["swap", "--n", "16", "--replicates", "20", "--seed", "1"]):
        code, out, _ = run(capsys, *argv)
        assert code == EXIT_OK, argv
        assert json.loads(out)["failures"] == []


def test_nan_serialized_as_null(capsys):
    code, out, _ = run(capsys, "swap", "--n", "16", "--replicates", "20", "--seed", "1",
                       "--ensemble", "gue", "--ensemble-b", "gue")
    rep = json.loads(out)
    assert rep["summary"]["results"]["bump"]["diff"] == 0.0
    assert "NaN" not in out
