import json
import subprocess
import sys

import pytest

from cknweights import __version__
from cknweights.cli import dispatch


def run(capsys, *argv):
    code = dispatch(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_classify(capsys):
    # [PAPER] t^1.5 is in W0
    code, out, _ = run(capsys, "classify", "--weight", "pow(1.5)")
    doc = json.loads(out)
    assert code == 0 and doc["class"] == "W0"
    assert doc["schema"] == 1 and doc["version"] == __version__
    assert doc["config"]["weight"] == "pow(1.5)"


def test_ndc_exp_inv(capsys):
    # [DERIVED] K(r) = r profile
    code, out, _ = run(capsys, "ndc", "--weight", "expinv(1,-)", "--eta", "1")
    doc = json.loads(out)
    assert code == 0
    assert doc["verdict"] == "violated_limsup_zero"
    assert doc["infinite_order"] is True
    for key in ("C0", "fitted_alpha", "witness", "n_samples", "n_flagged"):
        assert key in doc


def test_counterexample_refused_under_ndc(capsys):
    # [TRIVIAL] precondition guard
    code, _, err = run(capsys, "counterexample", "--weight", "pow(2)", "--q", "2", "--n", "2")
    assert code == 2
    assert "hypothesis not met: NDC satisfied" in err


def test_parse_error_has_position(capsys):
    code, _, err = run(capsys, "classify", "--weight", "pow(1.5")
    assert code == 2
    assert "^" in err


def test_unknown_subcommand(capsys):
    code, _, _ = run(capsys, "frobnicate")
    assert code == 2


def test_wa_envelope_refused(capsys):
    code, _, err = run(capsys, "envelope", "--weight", "scale(2,prod(pow(1),pow(-1)))")
    assert code == 2 and "error" in err


def test_envelope_csv(capsys):
    code, out, _ = run(capsys, "envelope", "--weight", "pow(1)", "--grid-points", "64")
    lines = out.splitlines()
    meta = json.loads(lines[0][2:])
    assert code == 0 and meta["config"]["grid_points"] == 64
    assert lines[1] == "r,w,v,Vq,plateau"
    assert len(lines) == 2 + 64


def test_grid_points_env_var(capsys, monkeypatch):
    monkeypatch.setenv("CKN_GRID_POINTS", "128")
    code, out, _ = run(capsys, "envelope", "--weight", "pow(1)")
    lines = out.splitlines()
    assert json.loads(lines[0][2:])["config"]["grid_points"] == 128
    assert len(lines) == 2 + 128


def test_k_profile_csv(capsys):
    code, out, _ = run(capsys, "k-profile", "--weight", "pow(2)", "--grid-points", "32")
    rows = out.splitlines()[2:]
    assert code == 0 and len(rows) == 31
    assert all(float(r.split(",")[1]) == pytest.approx(0.5) for r in rows)


def test_verify_1d_exit_zero(capsys):
    code, out, _ = run(capsys, "verify-1d", "--weight", "expinv(1,-)", "--q", "1.5",
                       "--battery-size", "5")
    assert code == 0 and json.loads(out)["all_pass"] is True


def test_verify_nd_refuses_without_ndc(capsys):
    code, _, err = run(capsys, "verify-nd", "--weight", "expinv(1,-)", "--q", "2", "--battery-size", "2")
    assert code == 2 and "hypothesis not met" in err


def test_best_const_rad(capsys):
    code, out, _ = run(capsys, "best-const-rad", "--n", "2", "--q", "2", "--gamma", "1")
    doc = json.loads(out)
    assert code == 0 and doc["within_tolerance"]
    assert doc["constants"]["S_rad"] == pytest.approx(3.5449, abs=1e-4)


def test_best_const_1d_fail_exit(capsys):
    # a single wide window cannot reach the 1% target
    code, out, _ = run(capsys, "best-const-1d", "--weight", "pow(1)", "--h-sweep", "0.4")
    assert code == 1 and json.loads(out)["within_tolerance"] is False


def test_counterexample_csv(capsys):
    code, out, _ = run(capsys, "counterexample", "--weight", "expinv(1,-)", "--j-max", "3",
                       "--format", "csv")
    lines = out.splitlines()
    assert lines[1] == "j,eps_j,lhs,rhs,quotient"
    assert [int(l.split(",")[0]) for l in lines[2:]] == [1, 2, 3]
    # exit 1: three terms are too few for the divergence factor
    assert code in (0, 1)


def test_output_file(tmp_path, capsys):
    path = tmp_path / "out.json"
    code, out, _ = run(capsys, "classify", "--weight", "expinv(2,+)", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["class"] == "Winf"


def test_deterministic_bytes(capsys):
    argv = ["verify-1d", "--weight", "prod(pow(2),expinv(1,+))", "--q", "2", "--battery-size", "4",
            "--seed", "7"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cknweights", "classify", "--weight", "pow(-1)"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["class"] == "Winf"
