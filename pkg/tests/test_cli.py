import json

import numpy as np
import pytest

from cdfkw import experiments as ex
from cdfkw.cli import main
from cdfkw.ensemble import read_cdf_csv

BASE = {
    "problem": "test1d-stochastic",
    "method": "both",
    "M": 120,
    "master_seed": 11,
    "query": {"x": 0.2, "t": 1.0},
    "K_grid": {"min": 8.0, "max": 26.0, "n": 37},
    "numerics": {"dt_char": 0.02, "n_x": 50, "dt_weno": 0.004},
    "estimator": "mc",
}


def write_cfg(tmp_path, name="exp.json", **over):
    cfg = {**BASE, **over}
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=2))
    return path


def test_list_problems(capsys):
    assert main(["list-problems"]) == 0
    text = capsys.readouterr().out
    for name in ex.PROBLEMS:
        assert name in text


def test_single_deterministic_realization_is_one_step(tmp_path):
    cfg = write_cfg(
        tmp_path,
        problem="test1d",
        method="cdf",
        M=1,
        query={"x": 0.5, "t": 0.1},
        K_grid={"min": 0.01, "max": 6.0, "n": 120},
    )
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    K, cols = read_cdf_csv(out / "cdf.csv")
    F = cols["F_cdf"]
    assert set(F) <= {0.0, 1.0}
    assert np.count_nonzero(np.diff(F)) == 1


def test_output_independent_of_jobs(tmp_path):
    cfg = write_cfg(tmp_path, reference={"kind": "oracle", "n_draws": 10000, "seed": 3},
                    sweep={"param": "M", "values": [30, 60, 120]})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--jobs", "1", "--out", str(a)]) == 0
    assert main(["run", "--config", str(cfg), "--jobs", "3", "--out", str(b)]) == 0
    for f in ("cdf.csv", "reference.csv", "error.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["files"] == mb["files"]


def test_seed_override_changes_output(tmp_path):
    cfg = write_cfg(tmp_path, method="cdf", M=20)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", str(cfg), "--seed", "12", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a/cdf.csv").read_bytes() != (tmp_path / "b/cdf.csv").read_bytes()
    assert json.loads((tmp_path / "b/manifest.json").read_text())["master_seed"] == 12


def test_manifest_contents(tmp_path):
    cfg = write_cfg(tmp_path, method="cdf", M=5)
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["command"] == "run" and m["master_seed"] == 11
    assert len(m["config_sha256"]) == 64
    assert set(m["versions"]) >= {"cdfkw", "numpy", "scipy", "python"}
    assert set(m["files"]) == {"cdf.csv"}


def test_invalid_config_reports_line(tmp_path, capsys):
    cfg = write_cfg(tmp_path, M=-4)
    assert main(["run", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    line = next(i for i, s in enumerate(cfg.read_text().splitlines(), 1) if '"M"' in s)
    assert f"{cfg}:{line}:" in err


def test_malformed_json_is_config_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "problem": "test1d",\n  "M": ,\n}')
    assert main(["run", "--config", str(path)]) == 2
    assert f"{path}:3:" in capsys.readouterr().err


def test_k_grid_below_floor_rejected(tmp_path):
    cfg = write_cfg(tmp_path, problem="test1d", K_grid={"min": -1.0, "max": 2.0, "n": 10})
    assert main(["run", "--config", str(cfg)]) == 2


def test_duplicate_sweep_values_rejected(tmp_path):
    cfg = write_cfg(tmp_path, sweep={"param": "dt_char", "values": [0.1, 0.05, 0.05]})
    assert main(["convergence", "--config", str(cfg)]) == 2


def test_unknown_problem_and_missing_file(tmp_path):
    assert main(["run", "--config", str(write_cfg(tmp_path, problem="nope"))]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["run"]) == 2


def test_forced_failures_exit_three(tmp_path, monkeypatch, capsys):
    real = ex.Study.cdf_row

    def flaky(self, r, dt=None):
        if r.index % 10 == 3:
            raise FloatingPointError("forced")
        return real(self, r, dt)

    monkeypatch.setattr(ex.Study, "cdf_row", flaky)
    cfg = write_cfg(tmp_path, method="cdf", M=40)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "index 3" in capsys.readouterr().err


def test_single_failure_under_limit_is_logged(tmp_path, monkeypatch):
    real = ex.Study.cdf_row

    def flaky(self, r, dt=None):
        if r.index == 150:
            raise FloatingPointError("forced")
        return real(self, r, dt)

    monkeypatch.setattr(ex.Study, "cdf_row", flaky)
    cfg = write_cfg(tmp_path, method="cdf", M=200, numerics={"dt_char": 0.05})
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "failures.csv").read_text().splitlines()
    assert lines[0] == "realization,task,error" and lines[1].startswith("150,cdf,")


def test_convergence_csv(tmp_path):
    cfg = write_cfg(
        tmp_path,
        problem="test1d",
        method="cdf",
        query={"x": 0.0, "t": 0.1},
        K_grid={"min": 0.01, "max": 6.0, "n": 11},
        numerics={"n_points": 21},
        sweep={"param": "dt_char", "values": [0.00625, 0.003125]},
    )
    out = tmp_path / "o"
    assert main(["convergence", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "param,eps,rate"
    assert len(lines) == 3 and lines[1].endswith(",")
    assert float(lines[2].split(",")[2]) > 2.8


def test_convergence_requires_halvings(tmp_path):
    cfg = write_cfg(tmp_path, problem="test1d", sweep={"param": "dt_char", "values": [0.1, 0.03]},
                    query={"x": 0.0, "t": 0.1}, K_grid={"min": 0.01, "max": 6.0, "n": 11})
    assert main(["convergence", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("bad", ["-1", "abc"])
def test_bad_jobs_and_seed(tmp_path, bad):
    cfg = str(write_cfg(tmp_path))
    assert main(["run", "--config", cfg, "--jobs", bad]) == 2
    assert main(["run", "--config", cfg, "--seed", bad]) == 2
