import json
import subprocess
import sys

import pytest

from impurity_nls import __version__
from impurity_nls.cli import EXIT_CONFIG, EXIT_GUARD, EXIT_NUMERICAL, EXIT_OK, main


def _cfg(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_selftest(capsys):
    assert main(["selftest"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") >= 9 and "FAIL" not in out


def test_selftest_quiet(capsys):
    assert main(["selftest", "--quiet"]) == EXIT_OK
    assert capsys.readouterr().out == ""


def test_memory_guard_exit(tmp_path, capsys):
    cfg = _cfg(tmp_path, "N: 4\nM: 128\n")
    assert main(["simulate-manybody", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_GUARD
    err = capsys.readouterr().err
    assert "MemoryBudgetError" in err and "128^4" in err


def test_eps_resolution_guard_exit(tmp_path, capsys):
    cfg = _cfg(tmp_path, "eps_list: [0.4, 0.2, 0.01]\n")
    assert main(["study-eps", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_GUARD
    err = capsys.readouterr().err
    assert "eps=0.01" in err and "h=0.009765625" in err


def test_time_step_guard_exit(tmp_path, capsys):
    cfg = _cfg(tmp_path, "dt: 0.1\n")
    assert main(["simulate-hartree", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_GUARD
    assert "dt" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text",
    ["bogus: 1\n", "M: 1000\n", "eps: [0.1\n", "delta: 0.0\n", "sample_times: [0.3333]\n"],
)
def test_config_errors_exit_2(tmp_path, capsys, text):
    command = "simulate-delta" if text.startswith(("delta", "sample")) else "simulate-hartree"
    cfg = _cfg(tmp_path, text)
    assert main([command, "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "invalid configuration" in capsys.readouterr().err


def test_bad_jobs(tmp_path):
    assert main(["study-chaos", "--jobs", "0", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_numerical_failure_exit(tmp_path, capsys):
    cfg = _cfg(tmp_path, "mu: 2000.0\ndelta: 0.05\nsample_times: [1.0]\n")
    assert main(["simulate-delta", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_NUMERICAL
    err = capsys.readouterr().err
    assert "did not converge" in err and "delta=0.05" in err


def test_simulate_hartree_outputs_and_rerun(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = _cfg(tmp_path, "T: 0.2\nstride: 50\n")
    assert main(["simulate-hartree", "--config", cfg, "--out", str(a), "--quiet"]) == EXIT_OK
    names = sorted(p.name for p in a.iterdir())
    assert names == ["config.yaml", "conserved.csv", "coupling.csv", "final_state.csv", "metadata.json"]
    meta = json.loads((a / "metadata.json").read_text())
    assert meta["version"] == __version__ and meta["command"] == "simulate-hartree"
    assert meta["parameters"]["M"] == 1024 and meta["parameters"]["T"] == 0.2
    assert main(["simulate-hartree", "--config", str(a / "config.yaml"), "--out", str(b), "--quiet"]) == EXIT_OK
    for f in ("conserved.csv", "coupling.csv", "final_state.csv", "config.yaml"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    rows = (a / "conserved.csv").read_text().splitlines()
    assert rows[0] == "t,l2_norm,energy,coupling" and len(rows) == 1 + 5


def test_simulate_delta_outputs(tmp_path):
    cfg = _cfg(tmp_path, "T: 0.5\nsample_times: [0.25, 0.5]\n")
    assert main(["simulate-delta", "--config", cfg, "--out", str(tmp_path), "--quiet"]) == EXIT_OK
    names = {p.name for p in tmp_path.iterdir()}
    assert {"charge.csv", "energy.csv", "state_t0.25.csv", "state_t0.5.csv"} <= names
    rows = [r.split(",") for r in (tmp_path / "energy.csv").read_text().splitlines()[1:]]
    e = [float(r[3]) for r in rows]
    assert abs(e[-1] - e[0]) / e[0] < 1e-4


def test_simulate_manybody_outputs(tmp_path):
    assert main(["simulate-manybody", "--out", str(tmp_path), "--quiet"]) == EXIT_OK
    rows = (tmp_path / "observables.csv").read_text().splitlines()
    assert rows[0] == "t,norm,symmetry_residual,trace,top_eigenvalue"
    assert (tmp_path / "gamma_final.csv").exists()


def test_small_chaos_study_via_cli(tmp_path):
    cfg = _cfg(tmp_path, "N_list: [2, 3]\nT: 0.5\nsample_times: [0.5]\n")
    assert main(["study-chaos", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == EXIT_OK
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["passed"] is True


def test_failed_study_property_exit_1(tmp_path, capsys):
    # an unreachable slope floor makes the embedded rate check fail
    cfg = _cfg(
        tmp_path,
        "M: 1024\neps_list: [0.4, 0.2, 0.16]\ndt: 1.0e-3\ndelta: 1.0e-3\n"
        "T: 0.2\nsample_times: [0.1, 0.2]\nmin_slope: 5.0\n",
    )
    assert main(["study-eps", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "slope ok: False" in capsys.readouterr().out
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["passed"] is False
    assert summary["checks"]["strictly_decreasing"] is True


def test_console_script_entry():
    out = subprocess.run(
        [sys.executable, "-m", "impurity_nls.cli", "--version"], capture_output=True, text=True, check=True
    )
    assert __version__ in out.stdout
