"""Command-line front end.

Subcommands::

    dpsubmod run --config exp.ini --out results/
    dpsubmod inspect-norm --f cardinality --p 4 --samples 100000 --seed 0
    dpsubmod gen --task lasso_synthetic --p 8 --n 1000 --seed 0 --out data.csv

Exit codes: 0 on success, 2 for configuration or usage errors, 3 when a
numerical routine fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .config import FUNCTION_KINDS, ConfigError, ExperimentConfig
from .erm import Dataset, LossModel, SolverError
from .experiments import SyntheticTask, fit_loglog, gen_synthetic, population_set, planted_task, run_trial
from .mechanisms import PrivacyParams
from .rng import stream
from .submodular import (
    MAX_ENUMERATION_P,
    CapabilityError,
    dual_norm_bruteforce,
    enumerate_vertices,
    gaussian_width_mc,
    make_function,
    omega_inf,
    polytope_diameter,
)

SCHEMA_VERSION = 1
RESULT_COLUMNS = (
    "n", "trial", "mechanism", "excess_empirical_risk", "excess_population_risk",
    "runtime_ms", "noise_scale", "lambda", "G_width", "T", "seed",
)
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (SolverError, CapabilityError, FloatingPointError, np.linalg.LinAlgError, ArithmeticError)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


# -- datasets ------------------------------------------------------------


def write_dataset(data: Dataset, path) -> None:
    p = data.p
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(p)] + ["y"])
        for x, y in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def read_dataset(path) -> Dataset:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty dataset file")
    header = rows[0]
    p = len(header) - 1
    if p < 1 or header != [f"x{j + 1}" for j in range(p)] + ["y"]:
        raise ConfigError(f"{path}: header must be x1,...,xp,y")
    try:
        arr = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None
    if arr.ndim != 2 or arr.shape[1] != p + 1:
        raise ConfigError(f"{path}: ragged rows")
    return Dataset(arr[:, :p], arr[:, p])


# -- run -------------------------------------------------------------------


def _function_for(cfg: ExperimentConfig, p: int):
    kw = {"k": cfg.k} if cfg.function == "truncated" else {}
    return make_function(cfg.function, p, **kw)


def run_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    """Run every (trial, n) cell of ``cfg`` and write ``results.csv`` and
    ``summary.json`` under ``out_dir``.  Returns the summary dictionary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    custom = None
    if cfg.task == "custom_csv":
        custom = read_dataset(cfg.path)
        if custom.p != cfg.p:
            raise ConfigError(f"config p={cfg.p} but {cfg.path} has {custom.p} features")
        if max(cfg.n_grid) > custom.n:
            raise ConfigError(f"n_grid reaches {max(cfg.n_grid)} but {cfg.path} has {custom.n} rows")
    F = _function_for(cfg, cfg.p)
    width = gaussian_width_mc(F, cfg.width_samples, cfg.seed)
    params = PrivacyParams(cfg.epsilon, cfg.delta)
    task = planted_task(cfg.task, cfg.p, cfg.seed) if custom is None else None

    rows = []
    for trial in range(cfg.trials):
        if custom is None:
            population = population_set(task, cfg.seed, trial, cfg.population_size)
        else:
            population = custom
        for n in cfg.n_grid:
            if custom is None:
                data = task.sample(stream(cfg.seed, f"sample:{task.name}", n, trial), n)
            else:
                idx = stream(cfg.seed, "sample:custom_csv", n, trial).choice(custom.n, size=n, replace=False)
                data = Dataset(custom.X[idx], custom.y[idx])
            L = LossModel.for_data(cfg.loss, data, cfg.B).lipschitz
            lam = cfg.lambda_for(n, L, data.R2, width.mean)
            mseed = _mechanism_seed(cfg.seed, n, trial, cfg.mechanism)
            res = run_trial(
                cfg.mechanism, data, population, F, cfg.loss, params, lam, mseed,
                width=width, theta_bound=cfg.B,
            )
            if not (math.isfinite(res.excess_empirical) and math.isfinite(res.excess_population)):
                raise FloatingPointError(f"non-finite excess risk at n={n}, trial={trial}")
            rows.append({
                "n": n,
                "trial": trial,
                "mechanism": cfg.mechanism,
                "excess_empirical_risk": float(res.excess_empirical),
                "excess_population_risk": float(res.excess_population),
                "runtime_ms": float(res.runtime_ms) if cfg.record_runtime else None,
                "noise_scale": float(res.noise_scale),
                "lambda": float(lam),
                "G_width": float(width.mean),
                "T": res.T,
                "seed": mseed,
            })
    rows.sort(key=lambda r: (r["n"], r["trial"]))
    with open(out / "results.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in RESULT_COLUMNS])
    summary = summarize(cfg, rows, width)
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _mechanism_seed(seed, n, trial, mechanism):
    from .experiments import mechanism_seed

    return mechanism_seed(seed, n, trial, mechanism)


def summarize(cfg: ExperimentConfig, rows, width) -> dict:
    per_n = []
    for n in cfg.n_grid:
        sel = [r for r in rows if r["n"] == n]
        entry = {"n": n, "trials": len(sel)}
        for col in ("excess_empirical_risk", "excess_population_risk"):
            v = np.array([r[col] for r in sel])
            entry[f"mean_{col}"] = float(v.mean())
            entry[f"se_{col}"] = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
        per_n.append(entry)
    fits = {}
    for col in ("excess_empirical_risk", "excess_population_risk"):
        means = [e[f"mean_{col}"] for e in per_n]
        if len(per_n) >= 2 and all(m > 0 for m in means):
            fits[col] = fit_loglog(cfg.n_grid, means, confidence=1.0 - cfg.alpha)
        else:
            # A log-log fit needs two or more strictly positive means.
            fits[col] = None
    return {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.as_dict(),
        "width": {"mean": width.mean, "std_error": width.std_error, "num_samples": width.num_samples},
        "per_n": per_n,
        "slope_fit": fits,
    }


def cmd_run(args) -> int:
    try:
        cfg = ExperimentConfig.from_file(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run_experiment(cfg, args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    fit = summary["slope_fit"]["excess_empirical_risk"]
    msg = f"wrote {Path(args.out) / 'results.csv'} ({len(cfg.n_grid) * cfg.trials} rows)"
    if fit is not None:
        msg += f"; empirical slope {fit['slope']:.3f} [{fit['ci_low']:.3f}, {fit['ci_high']:.3f}]"
    print(msg)
    return EXIT_OK


# -- inspect-norm -----------------------------------------------------------


def inspect_norm(kind: str, p: int, samples: int, seed: int, k: int = 2, confidence: float = 0.95) -> dict:
    """Describe the norm induced by a named set function."""
    from scipy.stats import norm as normal

    F = make_function(kind, p, **({"k": k} if kind == "truncated" else {}))
    rng = stream(seed, "inspect_norm", p)
    probes = rng.standard_normal((16, p))
    omegas = np.array([omega_inf(F, t) for t in probes])
    l1 = np.abs(probes).sum(axis=1)
    linf = np.abs(probes).max(axis=1)
    if np.allclose(omegas, l1, rtol=1e-12, atol=0):
        identity = "Ω∞ = L1"
    elif np.allclose(omegas, linf, rtol=1e-12, atol=0):
        identity = "Ω∞ = L∞"
    else:
        identity = "Ω∞ is neither L1 nor L∞"
    dual_examples = []
    if p <= 12:
        for s in probes[:3]:
            dual_examples.append({"s": [float(v) for v in s], "dual_norm": float(dual_norm_bruteforce(F, s))})
    w = gaussian_width_mc(F, samples, seed)
    z = float(normal.ppf(0.5 + confidence / 2))
    report = {
        "function": F.describe(),
        "kind": kind,
        "p": p,
        "identity": identity,
        "dual_norm_examples": dual_examples,
        "width": {
            "mean": w.mean,
            "std_error": w.std_error,
            "ci_low": w.mean - z * w.std_error,
            "ci_high": w.mean + z * w.std_error,
            "confidence": confidence,
            "num_samples": w.num_samples,
            "seed": seed,
        },
        "vertex_count": None,
        "diameter": None,
    }
    if p <= MAX_ENUMERATION_P:
        V = enumerate_vertices(F)
        report["vertex_count"] = int(len(V))
        report["diameter"] = float(polytope_diameter(F, V))
    elif F.cardinality_based:
        report["diameter"] = float(polytope_diameter(F))
    return report


def cmd_inspect(args) -> int:
    if args.f not in FUNCTION_KINDS:
        print(f"config error: unknown function {args.f!r}; expected one of {FUNCTION_KINDS}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rep = inspect_norm(args.f, args.p, args.samples, args.seed, args.k)
    except CapabilityError as e:
        print(f"capability error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    w = rep["width"]
    print(f"function: {rep['function']} (p={rep['p']})")
    print(f"identity: {rep['identity']}")
    for ex in rep["dual_norm_examples"]:
        print(f"dual norm of {np.round(ex['s'], 3).tolist()}: {ex['dual_norm']:.6f}")
    print(
        f"gaussian width: {w['mean']:.4f} +/- {w['std_error']:.4f} "
        f"({w['confidence']:.0%} CI [{w['ci_low']:.4f}, {w['ci_high']:.4f}], {w['num_samples']} samples)"
    )
    vc = rep["vertex_count"]
    print(f"vertex count: {vc if vc is not None else f'not enumerated (p > {MAX_ENUMERATION_P})'}")
    d = rep["diameter"]
    print(f"diameter: {d if d is not None else 'unavailable'}")
    text = json.dumps(rep, indent=2, sort_keys=True, ensure_ascii=False)
    if args.json:
        Path(args.json).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


# -- gen ---------------------------------------------------------------------


def cmd_gen(args) -> int:
    try:
        data, task = gen_synthetic(args.task, args.p, args.n, args.seed)
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    write_dataset(data, args.out)
    print(f"wrote {args.n} rows to {args.out}; planted theta0 = {task.theta0.tolist()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpsubmod", description="Private ERM with submodular norm penalties")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment grid from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_run)

    i = sub.add_parser("inspect-norm", help="describe the norm induced by a set function")
    i.add_argument("--f", required=True, help=f"one of {', '.join(FUNCTION_KINDS)}")
    i.add_argument("--p", type=int, required=True)
    i.add_argument("--samples", type=int, default=100_000)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--k", type=int, default=2, help="truncation level for --f truncated")
    i.add_argument("--json", default=None, help="write the JSON report here instead of stdout")
    i.set_defaults(func=cmd_inspect)

    g = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    g.add_argument("--task", required=True)
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
