import csv
import io
import json
import struct
import subprocess
import sys

import pytest

from herald_sim.cli import main, render


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_fidelity_ok(capsys):
    code, out, _ = run_cli(capsys, "fidelity", "--chi", "0.2", "--eta-ref", "0.5", "--loss", "0", "--dark", "0")
    assert code == 0
    rec = json.loads(out)
    assert rec["fidelity"] == pytest.approx(0.98, abs=1e-12)
    assert rec["chi"] == 0.2


def test_fidelity_csv(capsys):
    code, out, _ = run_cli(capsys, "fidelity", "--chi", "0.2", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert float(rows[0]["fidelity"]) == pytest.approx(0.98, abs=1e-12)


def test_fidelity_degenerate(capsys):
    code, out, err = run_cli(capsys, "fidelity", "--chi", "0", "--eta-ref", "0.5", "--dark", "0")
    assert code == 2
    assert out == ""
    assert "degenerate" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["fidelity", "--eta-ref", "1.5"],
        ["fidelity", "--chi", "1.0"],
        ["fidelity", "--loss", "-0.1"],
        ["fidelity", "--dark", "abc"],
        ["fidelity", "--tolerance", "0"],
        ["fidelity", "--unknown-flag"],
        ["nonsense"],
        [],
    ],
)
def test_invalid_input_exit_1(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 1
    assert out == ""
    assert err


def test_sweep_csv_contract(capsys):
    code, out, err = run_cli(capsys, "sweep", "--preset", "fig1", "--no-timestamp")
    assert code == 0
    assert "\r" not in out
    lines = out.splitlines()
    assert lines[0] == "eta_ref,fidelity,herald_prob,status"
    assert len(lines) == 101
    fids = [float(l.split(",")[1]) for l in lines[1:]]
    assert all(a > b for a, b in zip(fids, fids[1:]))
    assert "chi=0.1" in err and "timestamp" not in err


def test_sweep_17_significant_digits(capsys):
    _, out, _ = run_cli(capsys, "sweep", "--axis", "eta-ref", "--from", "0.1", "--to", "0.9", "--points", "3", "--chi", "0.3")
    first = out.splitlines()[1].split(",")
    assert first[0] == format(0.1, ".17g") == "0.10000000000000001"
    mantissa = first[1].replace("0.", "", 1).lstrip("0")
    assert len(mantissa) <= 17


def test_sweep_two_axes(capsys):
    code, out, _ = run_cli(
        capsys, "sweep", "--axis", "dark", "--from", "1e-8", "--to", "1e-2", "--points", "4", "--log",
        "--axis2", "eta_ref", "--from2", "0.01", "--to2", "1", "--points2", "6",
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 24
    assert list(rows[0]) == ["dark", "eta_ref", "fidelity", "herald_prob", "status"]


def test_sweep_json_matches_csv(capsys):
    base = ["sweep", "--preset", "fig2", "--no-timestamp"]
    _, out_csv, _ = run_cli(capsys, *base)
    _, out_json, _ = run_cli(capsys, *base, "--format", "json")
    rows = list(csv.DictReader(io.StringIO(out_csv)))
    recs = json.loads(out_json)
    assert isinstance(recs, list) and len(recs) == len(rows) == 200
    for r, j in zip(rows, recs):
        assert list(r) == list(j)
        for k in ("eta_ref", "loss", "fidelity", "herald_prob"):
            assert float(r[k]) == j[k]
        assert r["status"] == j["status"]


def _bits(x):
    return struct.pack("<d", x)


def test_json_round_trip_bit_exact(capsys):
    from herald_sim.analysis import fig3_grid, sweep

    res = sweep(fig3_grid(0.1), timestamp=False)
    parsed = json.loads(render(res.records(), "json"))
    for rec, back in zip(res.records(), parsed):
        for k, v in rec.items():
            if isinstance(v, float):
                assert _bits(float(back[k])) == _bits(v)
            else:
                assert back[k] == v


def test_degenerate_rows_in_sweep(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--axis", "eta_ref", "--from", "0", "--to", "1", "--points", "3", "--format", "json")
    assert code == 0
    recs = json.loads(out)
    assert recs[0]["status"] == "degenerate" and recs[0]["fidelity"] is None


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--axis", "eta_ref", "--from", "0.5", "--to", "0.1"],
        ["sweep", "--axis", "eta_ref", "--from", "0.1", "--to", "0.5", "--points", "1"],
        ["sweep", "--axis", "dark", "--from", "0", "--to", "0.1", "--log"],
        ["sweep", "--axis", "chi", "--from", "0", "--to", "0.1"],
        ["sweep"],
        ["sweep", "--preset", "fig1", "--axis", "loss"],
        ["sweep", "--axis", "eta_ref", "--from", "0.1", "--to", "0.5", "--axis2", "eta_ref", "--from2", "0", "--to2", "1"],
    ],
)
def test_sweep_invalid_grid(capsys, argv):
    code, _, _ = run_cli(capsys, *argv)
    assert code == 1


def test_identical_invocations_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["sweep", "--preset", "fig3", "--no-timestamp", "--output", str(path)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 2501


def test_optimize(capsys):
    code, out, _ = run_cli(capsys, "optimize", "--chi", "0.1", "--dark", "0")
    assert code == 0 and json.loads(out)["interior"] is False
    code, out, _ = run_cli(capsys, "optimize", "--chi", "0.1", "--dark", "1e-6", "--loss", "0")
    rec = json.loads(out)
    assert code == 0 and rec["interior"] is True
    assert rec["bracket_lo"] <= rec["eta_ref_star"] <= rec["bracket_hi"]


def test_optimize_errors(capsys):
    assert run_cli(capsys, "optimize", "--refine-tol", "abc")[0] == 1
    assert run_cli(capsys, "optimize", "--refine-tol", "-1")[0] == 1
    code, _, err = run_cli(capsys, "optimize", "--chi", "0")
    assert code == 2 and "degenerate" in err


def test_mc_check_pass(capsys):
    code, out, _ = run_cli(capsys, "mc-check", "--chi", "0.2", "--eta-ref", "0.5", "--seed", "42", "--trials", "1000000")
    rec = json.loads(out)
    assert code == 0
    assert rec["verdict"] == "PASS"
    for k in ("analytic_fidelity", "mc_fidelity", "fidelity_se", "analytic_herald_prob", "mc_herald_prob", "herald_prob_se"):
        assert k in rec


def test_mc_check_fail_exit_3(capsys, monkeypatch):
    from herald_sim import cli

    class Broken:
        passed = False
        fidelity_z = herald_prob_z = 9.0

    monkeypatch.setattr(cli, "compare", lambda rep, est: Broken())
    code, out, _ = run_cli(capsys, "mc-check", "--trials", "20000", "--chi", "0.3")
    assert code == 3
    assert json.loads(out)["verdict"] == "FAIL"


def test_mc_check_errors(capsys):
    assert run_cli(capsys, "mc-check", "--trials", "0")[0] == 1
    code, _, err = run_cli(capsys, "mc-check", "--chi", "0", "--dark", "0", "--trials", "1000")
    assert code == 2 and "heralds" in err


def test_mc_check_threads_env(capsys, monkeypatch):
    argv = ["mc-check", "--chi", "0.3", "--trials", "200000", "--seed", "5"]
    monkeypatch.setenv("HERALD_SIM_THREADS", "1")
    _, one, _ = run_cli(capsys, *argv)
    monkeypatch.setenv("HERALD_SIM_THREADS", "4")
    _, four, _ = run_cli(capsys, *argv)
    monkeypatch.setenv("HERALD_SIM_THREADS", "0")
    _, auto, _ = run_cli(capsys, *argv)
    assert one == four == auto
    monkeypatch.setenv("HERALD_SIM_THREADS", "lots")
    assert run_cli(capsys, *argv)[0] == 1


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "herald_sim", "fidelity", "--chi", "0.2"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["cutoff"] >= 1
