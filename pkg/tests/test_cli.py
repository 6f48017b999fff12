import subprocess
import sys

import numpy as np

from l0kit.cli import main
from l0kit.csvio import read_numeric, read_table, write_table
from l0kit.datasets import fixture_path
from l0kit.shrinkage import PriorSpec, posterior_mean

SMALL = ["--n", "40", "--p", "20", "--folds", "4"]


def test_usage_errors(tmp_path, capsys):
    assert main(["simulate", "--trials", "0", "--out", str(tmp_path)]) == 2
    assert "usage" in capsys.readouterr().err
    assert main(["nonsense"]) == 2
    assert main(["simulate", "--methods", "ridge"]) == 2
    assert main(["shrinkage", "--theta", "2", "--out", str(tmp_path)]) == 2
    assert main(["path", "--folds", "1", "--out", str(tmp_path)]) == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "l0kit", "simulate", "--trials", "0"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 2


def test_simulate(tmp_path):
    out = tmp_path / "sim"
    args = ["simulate", *SMALL, "--trials", "3", "--seed", "7", "--methods", "ols,sbr", "--out", str(out), "--verify"]
    assert main(args) == 0
    header, rows = read_table(out / "results.csv")
    assert header[:3] == ["trial", "method", "mse"]
    assert len(rows) == 6
    header, rows = read_table(out / "summary.csv")
    assert [r[0] for r in rows] == ["ols", "sbr"]
    out2 = tmp_path / "sim2"
    assert main([*args[:-3], "--out", str(out2)]) == 0
    def strip(path):
        header, rows = read_table(path)
        keep = [i for i, h in enumerate(header) if not h.endswith("time")]
        return [[r[i] for i in keep] for r in rows]

    assert strip(out / "results.csv") == strip(out2 / "results.csv")


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("L0KIT_THREADS", "zero")
    assert main(["simulate", *SMALL, "--trials", "1", "--methods", "ols", "--out", str(tmp_path)]) == 2
    monkeypatch.setenv("L0KIT_THREADS", "2")
    assert main(["simulate", *SMALL, "--trials", "2", "--methods", "ols", "--out", str(tmp_path)]) == 0


def test_path(tmp_path):
    assert main(["path", "--seed", "0", "--out", str(tmp_path), "--verify", "--gnuplot"]) == 0
    truth = read_numeric(tmp_path / "beta_true.csv")[1][:, 1] != 0
    header, cv = read_table(tmp_path / "cv.csv")
    assert header == ["method", "lambda", "cv_mse", "selected"]
    lam_cv = {r[0]: float(r[1]) for r in cv if r[3] == "1"}
    for method in ("sbr", "lasso"):
        header, table = read_numeric(tmp_path / f"path_{method}.csv")
        assert header[0] == "lambda" and len(header) == 101
        assert table.shape[0] == 50
        assert np.all(np.diff(table[:, 0]) > 0)
    table = read_numeric(tmp_path / "path_sbr.csv")[1]
    S = table[:, 1:] != 0
    below = table[:, 0] <= lam_cv["sbr"]
    assert np.all(S[below] == truth)
    assert not np.any(S & ~truth)
    assert (tmp_path / "path.gp").exists()


def test_shrinkage(tmp_path):
    args = ["shrinkage", "--theta", "0.1", "--sigma-beta", "1,3", "--grid-points", "41", "--out", str(tmp_path), "--verify"]
    assert main(args) == 0
    header, pm = read_numeric(tmp_path / "posterior_mean.csv")
    assert header == ["y", "bg_theta0.1_sb1", "bg_theta0.1_sb3", "bl_theta0.1_sb1", "bl_theta0.1_sb3"]
    middle = pm[20]
    assert middle[0] == 0.0 and np.all(middle[1:] == 0.0)
    _, phi = read_numeric(tmp_path / "phi.csv")
    assert phi[20, 0] == 0.0 and np.all(np.abs(phi[20, 1:]) <= 1e-10)
    np.testing.assert_array_equal(pm[:, 2], posterior_mean(PriorSpec(0.1, 3.0), pm[:, 0]))


def test_shrinkage_ridge_line(tmp_path):
    assert main(["shrinkage", "--theta", "1", "--sigma-beta", "2", "--slab", "bg", "--out", str(tmp_path)]) == 0
    _, pm = read_numeric(tmp_path / "posterior_mean.csv")
    np.testing.assert_allclose(pm[:, 1], 0.8 * pm[:, 0], atol=1e-13)


def test_fit_fixture(tmp_path, capsys):
    assert main(["fit", "--input", str(fixture_path()), "--methods", "sbr,lasso", "--out", str(tmp_path), "--verify"]) == 0
    assert "normalization" in capsys.readouterr().out
    header, rows = read_table(tmp_path / "selection.csv")
    assert header == ["variable", "sbr", "lasso"]
    assert len(rows) == 64
    assert [r[0] for r in rows if r[1] == "1"] == ["bmi"]
    _, coef = read_table(tmp_path / "coefficients.csv")
    assert [float(r[1]) != 0 for r in coef] == [r[1] == "1" for r in rows]


def test_fit_bad_input(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,y\n1,2\n3\n", encoding="utf-8")
    assert main(["fit", "--input", str(bad), "--out", str(tmp_path)]) == 1
    assert "line 3" in capsys.readouterr().err
    assert main(["fit", "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 1


def test_fit_without_normalization(tmp_path):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((30, 3))
    p = write_table(tmp_path / "in.csv", ["a", "b", "c", "y"], np.column_stack([X, 3 * X[:, 1]]))
    assert main(["fit", "--input", str(p), "--methods", "ols", "--no-normalize", "--folds", "3", "--out", str(tmp_path)]) == 0
    _, coef = read_table(tmp_path / "coefficients.csv")
    np.testing.assert_allclose([float(r[1]) for r in coef], [0, 3, 0], atol=1e-12)


def test_verify(capsys):
    assert main(["verify"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 6 and all(line.startswith("PASS") for line in lines)


def test_outputs_round_trip(tmp_path):
    assert main(["shrinkage", "--grid-points", "11", "--out", str(tmp_path)]) == 0
    p = tmp_path / "phi.csv"
    header, vals = read_numeric(p)
    write_table(tmp_path / "again.csv", header, vals)
    assert (tmp_path / "again.csv").read_bytes() == p.read_bytes()
