import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpsubmod.cli import RESULT_COLUMNS, main, read_dataset, write_dataset
from dpsubmod.config import ConfigError, ExperimentConfig
from dpsubmod.experiments import MECHANISMS, TASKS, fit_loglog, gen_synthetic, planted_task

SMALL = """
[task]
name = lasso_synthetic
p = 3

[experiment]
n_grid = 32, 64, 128
trials = 3
mechanism = {mechanism}
lambda = {lam}
population_size = 5000
width_samples = 2000
seed = 4

[privacy]
epsilon = 1.0
delta = 1e-6
"""


def write_config(tmp_path, mechanism="output_gauss", lam="auto_theorem1", name="exp.ini"):
    path = tmp_path / name
    path.write_text(SMALL.format(mechanism=mechanism, lam=lam), encoding="utf-8")
    return path


# -- config ---------------------------------------------------------------------


def test_config_roundtrip_defaults():
    cfg = ExperimentConfig()
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg


@settings(max_examples=40, deadline=None)
@given(
    task=st.sampled_from(TASKS),
    p=st.integers(1, 8),
    grid=st.lists(st.integers(2, 10_000), min_size=1, max_size=6).map(tuple),
    trials=st.integers(1, 100),
    mechanism=st.sampled_from(MECHANISMS),
    lam=st.sampled_from(["auto_theorem1", "explicit(2.5)", "per_sample(0.75)"]),
    eps=st.floats(1e-3, 1e3),
    delta=st.floats(1e-12, 0.5),
    alpha=st.floats(0.001, 0.5),
    seed=st.integers(0, 2**32),
)
def test_config_roundtrip_property(task, p, grid, trials, mechanism, lam, eps, delta, alpha, seed):
    cfg = ExperimentConfig(
        task=task, p=p, n_grid=grid, trials=trials, mechanism=mechanism, lam=lam,
        epsilon=eps, delta=delta, alpha=alpha, seed=seed,
    )
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"mechanism": "laplace"}, "output_gauss"),
        ({"task": "mnist"}, "lasso_synthetic"),
        ({"n_grid": ()}, "n_grid"),
        ({"trials": 0}, "trials"),
        ({"lam": "auto"}, "lambda"),
        ({"mechanism": "private_fw", "p": 9}, "p <= 8"),
        ({"delta": 0.0}, "delta"),
        ({"task": "custom_csv"}, "path"),
    ],
)
def test_config_validation(kwargs, match):
    with pytest.raises(ConfigError, match=match):
        ExperimentConfig(**kwargs)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown keys"):
        ExperimentConfig.from_text("[experiment]\nmechansim = none\n")


@pytest.mark.parametrize(
    "lam, n, expected",
    [("explicit(3.5)", 100, 3.5), ("per_sample(0.5)", 100, 50.0), ("auto_theorem1", 100, 2.0 * 1.5 * 10 / 3.0)],
)
def test_lambda_rules(lam, n, expected):
    assert ExperimentConfig(lam=lam).lambda_for(n, 2.0, 1.5, 3.0) == pytest.approx(expected)


# -- synthetic data ----------------------------------------------------------


@pytest.mark.parametrize("task", TASKS)
def test_generated_points_in_domain(task):
    data, t = gen_synthetic(task, 6, 500, seed=2)
    assert np.max(np.abs(data.X)) <= 1.0
    assert np.max(np.abs(data.y)) <= 1.0
    assert data.R2 <= math.sqrt(6)
    assert np.abs(t.theta0).sum() == pytest.approx(1.0)


def test_lasso_task_sparsity():
    t = planted_task("lasso_synthetic", 9, 0)
    assert np.count_nonzero(t.theta0) == 3


def test_generation_deterministic():
    a, _ = gen_synthetic("lasso_synthetic", 4, 50, seed=1)
    b, _ = gen_synthetic("lasso_synthetic", 4, 50, seed=1)
    c, _ = gen_synthetic("lasso_synthetic", 4, 50, seed=2)
    np.testing.assert_array_equal(a.X, b.X)
    assert not np.array_equal(a.X, c.X)


def test_dataset_csv_roundtrip(tmp_path):
    data, _ = gen_synthetic("linf_synthetic", 3, 20, seed=0)
    path = tmp_path / "d.csv"
    write_dataset(data, path)
    raw = path.read_bytes()
    assert raw.startswith(b"x1,x2,x3,y\n")
    assert b"\r" not in raw
    back = read_dataset(path)
    np.testing.assert_array_equal(back.X, data.X)
    np.testing.assert_array_equal(back.y, data.y)


def test_fit_loglog_recovers_power_law():
    ns = np.array([128, 256, 512, 1024, 2048])
    wobble = np.array([1.02, 0.97, 1.01, 0.99, 1.0])
    fit = fit_loglog(ns, 3.0 * ns**-0.5 * wobble)
    assert fit["slope"] == pytest.approx(-0.5, abs=0.02)
    assert fit["ci_low"] <= -0.5 <= fit["ci_high"]


# -- gen / inspect-norm ---------------------------------------------------------


def test_gen_command(tmp_path, capsys):
    out = tmp_path / "g.csv"
    assert main(["gen", "--task", "lasso_synthetic", "--p", "4", "--n", "10", "--seed", "0", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open(encoding="utf-8")))
    assert rows[0] == ["x1", "x2", "x3", "x4", "y"]
    assert len(rows) == 11


def test_gen_unknown_task(tmp_path):
    assert main(["gen", "--task", "nope", "--p", "2", "--n", "3", "--out", str(tmp_path / "x.csv")]) == 2


def test_inspect_norm_cardinality(tmp_path, capsys):
    js = tmp_path / "r.json"
    assert main(["inspect-norm", "--f", "cardinality", "--p", "4", "--samples", "100000", "--seed", "0", "--json", str(js)]) == 0
    out = capsys.readouterr().out
    assert "Ω∞ = L1" in out
    rep = json.loads(js.read_text(encoding="utf-8"))
    assert rep["width"]["mean"] == pytest.approx(3.19, abs=0.02)
    assert rep["width"]["ci_low"] < rep["width"]["mean"] < rep["width"]["ci_high"]
    assert rep["vertex_count"] == 81
    assert rep["diameter"] == pytest.approx(4.0)


def test_inspect_norm_linf(capsys):
    assert main(["inspect-norm", "--f", "linf", "--p", "4", "--samples", "2000"]) == 0
    out = capsys.readouterr().out
    assert "Ω∞ = L∞" in out
    rep = json.loads(out[out.index("{"):])
    assert rep["vertex_count"] == 9


@pytest.mark.parametrize("kind", ["cardinality", "linf", "sqrt"])
def test_inspect_norm_p1_width(kind, capsys):
    assert main(["inspect-norm", "--f", kind, "--p", "1", "--samples", "200000"]) == 0
    out = capsys.readouterr().out
    rep = json.loads(out[out.index("{"):])
    assert abs(rep["width"]["mean"] - math.sqrt(2 / math.pi)) < 4 * rep["width"]["std_error"]


def test_inspect_norm_large_p_skips_enumeration(capsys):
    assert main(["inspect-norm", "--f", "cardinality", "--p", "20", "--samples", "1000"]) == 0
    out = capsys.readouterr().out
    assert "not enumerated" in out


def test_inspect_norm_unknown_function():
    assert main(["inspect-norm", "--f", "bogus", "--p", "3"]) == 2


# -- run ------------------------------------------------------------------------


def test_run_writes_schema_and_summary(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "results.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    assert lines[0] == "n,trial,mechanism,excess_empirical_risk,excess_population_risk,runtime_ms,noise_scale,lambda,G_width,T,seed"
    assert len(lines) == 1 + 3 * 3
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["schema_version"] == 1
    assert summary["config"] == ExperimentConfig.from_file(cfg).as_dict()
    assert [e["n"] for e in summary["per_n"]] == [32, 64, 128]
    fit = summary["slope_fit"]["excess_empirical_risk"]
    assert fit["confidence"] == pytest.approx(0.95)
    assert fit["ci_low"] <= fit["slope"] <= fit["ci_high"]


@pytest.mark.parametrize("mechanism", MECHANISMS)
def test_run_is_byte_identical(tmp_path, mechanism):
    cfg = write_config(tmp_path, mechanism=mechanism, lam="per_sample(0.5)")
    for d in ("a", "b"):
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    for f in ("results.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_run_none_mechanism_has_zero_empirical_excess(tmp_path):
    cfg = write_config(tmp_path, mechanism="none")
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    with (out / "results.csv").open(encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert all(abs(float(r["excess_empirical_risk"])) < 1e-9 for r in rows)
    assert all(float(r["excess_population_risk"]) < 0.05 for r in rows)


def test_run_private_fw_records_T(tmp_path):
    cfg = write_config(tmp_path, mechanism="private_fw", lam="per_sample(1.0)")
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    with (out / "results.csv").open(encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert all(int(r["T"]) >= 1 for r in rows)


def test_run_unknown_mechanism_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, mechanism="laplace")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    for m in MECHANISMS:
        assert m in err


def test_run_missing_config_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) == 2


def test_run_numeric_failure_exit_3(tmp_path, monkeypatch):
    import dpsubmod.cli as cli

    def boom(*a, **k):
        raise FloatingPointError("overflow")

    monkeypatch.setattr(cli, "run_trial", boom)
    assert main(["run", "--config", str(write_config(tmp_path)), "--out", str(tmp_path / "o")]) == 3


def test_run_custom_csv(tmp_path):
    data, _ = gen_synthetic("lasso_synthetic", 3, 300, seed=9)
    write_dataset(data, tmp_path / "d.csv")
    text = SMALL.format(mechanism="obj_perturb", lam="auto_theorem1").replace(
        "name = lasso_synthetic", f"name = custom_csv\npath = {tmp_path / 'd.csv'}"
    )
    (tmp_path / "c.ini").write_text(text, encoding="utf-8")
    assert main(["run", "--config", str(tmp_path / "c.ini"), "--out", str(tmp_path / "o")]) == 0


def test_run_custom_csv_too_small(tmp_path):
    data, _ = gen_synthetic("lasso_synthetic", 3, 50, seed=9)
    write_dataset(data, tmp_path / "d.csv")
    text = SMALL.format(mechanism="none", lam="auto_theorem1").replace(
        "name = lasso_synthetic", f"name = custom_csv\npath = {tmp_path / 'd.csv'}"
    )
    (tmp_path / "c.ini").write_text(text, encoding="utf-8")
    assert main(["run", "--config", str(tmp_path / "c.ini"), "--out", str(tmp_path / "o")]) == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "g.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "dpsubmod", "gen", "--task", "linf_synthetic", "--p", "2", "--n", "3", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()


def test_usage_error_exit_2():
    assert main(["run"]) == 2
