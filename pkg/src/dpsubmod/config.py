"""Experiment configuration: an INI file with ``[task]``, ``[experiment]`` and
``[privacy]`` sections.

Example::

    [task]
    name = lasso_synthetic
    p = 8

    [experiment]
    n_grid = 128, 256, 512
    trials = 50
    loss = squared
    function = cardinality
    lambda = auto_theorem1
    mechanism = output_gauss
    seed = 0

    [privacy]
    epsilon = 1.0
    delta = 1e-6

``lambda`` accepts ``auto_theorem1``, ``explicit(<value>)`` or
``per_sample(<c>)`` (weight ``c * n``, which keeps the dual polytope fixed).
The task may also be ``custom_csv`` with a ``path`` key.
"""

from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import asdict, dataclass, field, fields

from .erm import LOSS_KINDS
from .experiments import MECHANISMS, TASKS

FUNCTION_KINDS = ("cardinality", "linf", "truncated", "sqrt")
_LAMBDA_RE = re.compile(r"^(auto_theorem1|explicit\(([^)]*)\)|per_sample\(([^)]*)\))$")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "lasso_synthetic"
    p: int = 8
    path: str = ""
    n_grid: tuple[int, ...] = (128, 256, 512, 1024, 2048, 4096, 8192)
    trials: int = 10
    loss: str = "squared"
    function: str = "cardinality"
    k: int = 2
    lam: str = "auto_theorem1"
    mechanism: str = "output_gauss"
    seed: int = 0
    alpha: float = 0.05
    B: float = 1.0
    epsilon: float = 1.0
    delta: float = 1e-6
    population_size: int = 100_000
    width_samples: int = 10_000
    record_runtime: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        errs = []
        if self.task not in TASKS + ("custom_csv",):
            errs.append(f"task must be one of {TASKS + ('custom_csv',)}, got {self.task!r}")
        if self.task == "custom_csv" and not self.path:
            errs.append("task custom_csv needs a path")
        if self.p < 1:
            errs.append("p must be >= 1")
        if not self.n_grid or any(n < 2 for n in self.n_grid):
            errs.append("n_grid must be a nonempty list of integers >= 2")
        if self.trials < 1:
            errs.append("trials must be >= 1")
        if self.loss not in LOSS_KINDS:
            errs.append(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.function not in FUNCTION_KINDS:
            errs.append(f"function must be one of {FUNCTION_KINDS}, got {self.function!r}")
        if self.mechanism not in MECHANISMS:
            errs.append(f"mechanism must be one of {MECHANISMS}, got {self.mechanism!r}")
        if not _LAMBDA_RE.match(self.lam):
            errs.append(
                f"lambda must be auto_theorem1, explicit(<value>) or per_sample(<c>), got {self.lam!r}"
            )
        if not self.epsilon > 0:
            errs.append("epsilon must be > 0")
        if not 0 <= self.delta <= 1:
            errs.append("delta must be in [0, 1]")
        if self.delta == 0 and self.mechanism in ("output_gauss", "obj_perturb", "private_fw"):
            errs.append(f"mechanism {self.mechanism} needs delta > 0")
        if self.mechanism == "private_fw" and self.p > 8:
            errs.append("private_fw enumerates the vertex set and needs p <= 8")
        if self.loss != "squared" and self.mechanism in ("private_fw",):
            errs.append("private_fw is implemented for the squared loss")
        if not 0 < self.alpha < 1:
            errs.append("alpha must be in (0, 1)")
        if errs:
            raise ConfigError("; ".join(errs))

    def lambda_for(self, n: int, L: float, R2: float, width: float) -> float:
        from .mechanisms import balanced_lambda

        m = _LAMBDA_RE.match(self.lam)
        if m.group(2) is not None:
            return float(m.group(2))
        if m.group(3) is not None:
            return float(m.group(3)) * n
        return balanced_lambda(L, R2, n, width)

    # -- serialisation --------------------------------------------------

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["task"] = {"name": self.task, "p": str(self.p), "path": self.path}
        cp["experiment"] = {
            "n_grid": ", ".join(str(n) for n in self.n_grid),
            "trials": str(self.trials),
            "loss": self.loss,
            "function": self.function,
            "k": str(self.k),
            "lambda": self.lam,
            "mechanism": self.mechanism,
            "seed": str(self.seed),
            "alpha": repr(self.alpha),
            "B": repr(self.B),
            "population_size": str(self.population_size),
            "width_samples": str(self.width_samples),
            "record_runtime": "true" if self.record_runtime else "false",
        }
        cp["privacy"] = {"epsilon": repr(self.epsilon), "delta": repr(self.delta)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        d["n_grid"] = list(self.n_grid)
        return d

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as e:
            raise ConfigError(f"malformed config: {e}") from None
        known = {
            "task": {"name", "p", "path"},
            "experiment": {
                "n_grid", "trials", "loss", "function", "k", "lambda", "mechanism", "seed",
                "alpha", "B", "population_size", "width_samples", "record_runtime",
            },
            "privacy": {"epsilon", "delta"},
        }
        for sec in cp.sections():
            if sec not in known:
                raise ConfigError(f"unknown section [{sec}]; expected {sorted(known)}")
            unknown = set(cp[sec]) - known[sec]
            if unknown:
                raise ConfigError(f"unknown keys in [{sec}]: {sorted(unknown)}")
        g = lambda sec, key: cp.get(sec, key, fallback=None)  # noqa: E731
        kw: dict = {}
        try:
            if g("task", "name") is not None:
                kw["task"] = g("task", "name")
            for key, sec, conv in (
                ("p", "task", int), ("path", "task", str),
                ("trials", "experiment", int), ("loss", "experiment", str),
                ("function", "experiment", str), ("k", "experiment", int),
                ("mechanism", "experiment", str), ("seed", "experiment", int),
                ("alpha", "experiment", float), ("B", "experiment", float),
                ("population_size", "experiment", int), ("width_samples", "experiment", int),
                ("epsilon", "privacy", float), ("delta", "privacy", float),
            ):
                if g(sec, key) is not None:
                    kw[key] = conv(g(sec, key))
            if g("experiment", "lambda") is not None:
                kw["lam"] = g("experiment", "lambda").strip()
            if g("experiment", "n_grid") is not None:
                kw["n_grid"] = tuple(int(v) for v in g("experiment", "n_grid").split(",") if v.strip())
            if g("experiment", "record_runtime") is not None:
                kw["record_runtime"] = cp.getboolean("experiment", "record_runtime")
        except ValueError as e:
            raise ConfigError(f"bad value in config: {e}") from None
        for key in ("alpha", "B", "epsilon", "delta"):
            if key in kw and not math.isfinite(kw[key]):
                raise ConfigError(f"{key} must be finite")
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def config_fields() -> list[str]:
    return [f.name for f in fields(ExperimentConfig) if f.name != "extra"]
