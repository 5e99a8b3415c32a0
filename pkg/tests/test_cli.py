import subprocess
import sys

import numpy as np
import pytest

import splitkdv.exceptions
import splitkdv.kdv
from splitkdv import logistic
from splitkdv.cli import main
from splitkdv.kdv import SolitonParams, soliton
from splitkdv.spectral import PeriodicGrid, RealField, read_field_csv, sobolev_norm, write_field_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_no_command_prints_usage(capsys):
    code, out, err = run(capsys)
    assert code == 2
    assert "usage:" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "splitkdv"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "usage:" in proc.stderr


# ---------------------------------------------------------------- logistic


def test_logistic_defaults(capsys):
    code, out, _ = run(capsys, "logistic")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n,t_n,godunov,strang,exact,err_godunov,err_strang"
    assert len(lines) == 22
    last = lines[-1].split(",")
    assert last[0] == "20"
    assert float(last[2]) == pytest.approx(logistic.godunov_closed_form(0.5, 0.05, 20), rel=1e-12)
    assert float(last[3]) == pytest.approx(logistic.strang_composition(0.5, 0.05, 20), rel=1e-12)


def test_logistic_rejects_inadmissible_dt(capsys):
    code, out, err = run(capsys, "logistic", "--dt", "1.9", "--u0", "0.9")
    assert code == 2
    assert out == ""
    assert "0.862" in err
    assert len(err.strip().splitlines()) == 1


def test_logistic_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# logistic run\nu0 = 0.3\ndt = 0.1\nT = 2   # final time\n")
    code, out, _ = run(capsys, "logistic", "--config", str(cfg))
    assert code == 0
    rows = out.splitlines()[1:]
    assert len(rows) == 21
    assert float(rows[0].split(",")[2]) == 0.3
    code, out, _ = run(capsys, "logistic", "--config", str(cfg), "--dt", "0.25")
    assert len(out.splitlines()) == 10  # header + n = 0..8


@pytest.mark.parametrize("content", ["u0 0.3\n", "speed = 4\n", "dt = fast\n"])
def test_bad_config_files(tmp_path, capsys, content):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(content)
    code, _, err = run(capsys, "logistic", "--config", str(cfg))
    assert code == 2
    assert err.startswith("config error:")


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run(capsys, "logistic", "--config", str(tmp_path / "nope.cfg"))
    assert code == 2


def test_logistic_writes_file_deterministically(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "logistic", "--out", str(a))[0] == 0
    assert run(capsys, "logistic", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


# ------------------------------------------------------------ kdv-converge


def test_converge_logistic_problem(tmp_path, capsys):
    out = tmp_path / "r.csv"
    code, _, err = run(capsys, "kdv-converge", "--problem", "logistic", "--scheme", "strang", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "dt,error,local_slope"
    assert len(lines) == 7
    assert "slope 2.0" in err


def test_converge_strict_flags_out_of_band_slope(capsys):
    # steps of 1, 1/2, 1/3, 1/4 are pre-asymptotic: Godunov slope is about 1.27
    args = ["kdv-converge", "--problem", "logistic", "--scheme", "godunov", "--ladder", "1,2,3,4"]
    code, _, err = run(capsys, *args)
    assert code == 0
    assert "slope 1.26" in err
    assert run(capsys, *args, "--strict")[0] == 1
    assert run(capsys, "kdv-converge", "--problem", "logistic", "--scheme", "godunov", "--strict")[0] == 0


def test_converge_reports_failed_rungs(monkeypatch, capsys):
    real = logistic.flow_B

    def fragile(u, t):
        if t > 0.15:
            raise splitkdv.exceptions.BlowUpError("too coarse")
        return real(u, t)

    monkeypatch.setattr(logistic.FLOW_B, "fn", fragile)
    code, out, err = run(capsys, "kdv-converge", "--problem", "logistic")
    assert code == 0
    assert "dt=0.2 failed" in err
    assert len(out.splitlines()) == 6


def test_converge_kdv_multiple_norms(tmp_path, capsys):
    out = tmp_path / "kdv.csv"
    code, _, err = run(capsys, "kdv-converge", "--scheme", "strang", "--N", "256", "--T", "0.25",
                       "--ladder", "8,16,32,64", "--norm", "0,1", "--jobs", "2", "--out", str(out))
    assert code == 0, err
    assert (tmp_path / "kdv_H0.csv").exists() and (tmp_path / "kdv_H1.csv").exists()
    assert "H^1" in err


def test_converge_soliton_oracle_needs_soliton_problem(tmp_path, capsys):
    grid = PeriodicGrid(100.0, 256)
    init = tmp_path / "u0.csv"
    write_field_csv(init, soliton(grid, SolitonParams(0.4, 50.0)))
    code, _, err = run(capsys, "kdv-converge", "--problem", "kdv-custom", "--init", str(init), "--oracle", "soliton")
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["--ladder", "32,64,128"],
    ["--ladder", "64,32,128,256"],
    ["--kappa", "0.1"],
    ["--N", "511"],
    ["--norm", "-1"],
    ["--scheme", "strang", "--T", "0"],
])
def test_converge_validation(argv, capsys):
    code, _, err = run(capsys, "kdv-converge", *argv)
    assert code == 2
    assert len(err.strip().splitlines()) == 1


def test_thread_cap_env(monkeypatch, capsys):
    monkeypatch.setenv("SPLITKDV_THREADS", "many")
    code, _, err = run(capsys, "kdv-converge", "--problem", "logistic")
    assert code == 2
    assert "SPLITKDV_THREADS" in err


def test_converge_output_is_byte_identical(tmp_path, monkeypatch, capsys):
    args = ["kdv-converge", "--scheme", "godunov", "--N", "256", "--T", "0.25", "--ladder", "8,16,32,64"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *args, "--jobs", "1", "--out", str(a))[0] == 0
    monkeypatch.setenv("SPLITKDV_THREADS", "4")
    assert run(capsys, *args, "--jobs", "4", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


# --------------------------------------------------------------- kdv-solve


def test_solve_zero_initial_data(tmp_path, capsys):
    grid = PeriodicGrid(50.0, 64)
    init = tmp_path / "zero.csv"
    write_field_csv(init, RealField.zeros(grid))
    out = tmp_path / "run"
    code, _, _ = run(capsys, "kdv-solve", "--problem", "kdv-custom", "--init", str(init), "--dt", "0.125",
                     "--every", "2", "--out", str(out))
    assert code == 0
    snaps = sorted(out.glob("snapshot_*.csv"))
    assert [p.name for p in snaps] == [f"snapshot_{n:06d}.csv" for n in (0, 2, 4, 6, 8)]
    for p in snaps:
        assert np.all(read_field_csv(p).values == 0.0)


def test_solve_soliton_strang(tmp_path, capsys):
    out = tmp_path / "sol"
    code, _, err = run(capsys, "kdv-solve", "--scheme", "strang", "--out", str(out))
    assert code == 0
    final = read_field_csv(out / "snapshot_000256.csv")
    exact = soliton(final.grid, SolitonParams(0.4, 50.0), 1.0)
    assert sobolev_norm(final - exact, 0) <= 1e-3
    assert "H0 distance" in err

    table = np.loadtxt(out / "conserved.csv", delimiter=",", skiprows=1)
    assert table.shape == (257, 4)
    assert table[-1, 0] == pytest.approx(1.0)
    mass = table[:, 1]
    assert np.max(np.abs(mass - mass[0])) <= 1e-12 * abs(mass[0])


def test_solve_reports_blow_up(tmp_path, monkeypatch, capsys):
    def explode(self, f, t):
        raise splitkdv.exceptions.BlowUpError("max|u| grew beyond 10x")

    monkeypatch.setattr(splitkdv.kdv.BurgersFlow, "_evolve", explode)
    out = tmp_path / "o"
    code, _, err = run(capsys, "kdv-solve", "--out", str(out))
    assert code == 1
    assert "step 0" in err
    assert (out / "conserved.csv").read_text().count("\n") == 2


# ----------------------------------------------------------------- selftest


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    assert "6/6 checks passed" in out


def test_selftest_catches_flipped_airy_sign(monkeypatch, capsys):
    original = splitkdv.kdv.airy_phase
    monkeypatch.setattr(splitkdv.kdv, "airy_phase", lambda grid, tau: np.conj(original(grid, tau)))
    code, out, _ = run(capsys, "selftest")
    assert code == 1
    lines = {line[6:36].strip(): line[:4] for line in out.splitlines() if line[:4] in ("PASS", "FAIL")}
    assert lines["Airy unitarity"] == "PASS"
    assert lines["reference vs exact soliton"] == "FAIL"
