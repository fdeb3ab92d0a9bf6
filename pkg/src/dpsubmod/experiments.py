"""Synthetic tasks and the excess-risk scaling experiments.

Streams: the planted parameter comes from ``(seed, "planted:<task>", p)``,
training samples from ``(seed, "sample:<task>", n, trial)``, the population
evaluation set from ``(seed, "population:<task>", trial)`` and mechanism
noise from ``(seed, <mechanism>, n, trial)`` mixed into the mechanism seed.
Each trial is therefore reproducible on its own, whatever the order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.stats
from numpy.typing import NDArray

from .erm import DualProblem, Dataset, ErmProblem, LossModel, primal_objective, solve_dual_precise, solve_erm
from .mechanisms import (
    PrivacyParams,
    objective_perturb,
    output_perturb,
    private_frank_wolfe,
    balanced_lambda,
)
from .rng import stream
from .submodular import SubmodularFn, WidthEstimate, gaussian_width_mc

TASKS = ("lasso_synthetic", "linf_synthetic")
MECHANISMS = ("output_gauss", "output_gamma", "obj_perturb", "private_fw", "none")
NOISE_SD = 0.1
POPULATION_SIZE = 100_000


@dataclass(frozen=True)
class SyntheticTask:
    name: str
    p: int
    theta0: NDArray[np.float64]

    def sample(self, rng: np.random.Generator, n: int) -> Dataset:
        X = rng.uniform(-1.0, 1.0, size=(n, self.p))
        y = np.clip(X @ self.theta0 + NOISE_SD * rng.standard_normal(n), -1.0, 1.0)
        return Dataset(X, y)

    def sample_point(self, rng: np.random.Generator):
        d = self.sample(rng, 1)
        return d.X[0], d.y[0]


def planted_task(task: str, p: int, seed: int) -> SyntheticTask:
    """The planted model: ``ceil(p/4)`` nonzero entries for ``lasso_synthetic``,
    a dense equal-magnitude sign vector for ``linf_synthetic``.  Both are
    scaled so that ``||theta0||_1 = 1`` (keeps ``theta0^T x`` in ``[-1, 1]``)."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = stream(seed, f"planted:{task}", p)
    theta0 = np.zeros(p)
    if task == "lasso_synthetic":
        k = math.ceil(p / 4)
        support = np.sort(rng.choice(p, size=k, replace=False))
        theta0[support] = rng.choice([-1.0, 1.0], size=k) * rng.uniform(0.5, 1.0, size=k)
    else:
        theta0[:] = rng.choice([-1.0, 1.0], size=p)
    theta0 /= np.abs(theta0).sum()
    return SyntheticTask(task, p, theta0)


def gen_synthetic(task: str, p: int, n: int, seed: int, trial: int = 0) -> tuple[Dataset, SyntheticTask]:
    """Draw ``n`` points of ``task``; inputs uniform on ``[-1, 1]^p``, labels
    ``clip(theta0^T x + N(0, 0.1^2), -1, 1)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t = planted_task(task, p, seed)
    return t.sample(stream(seed, f"sample:{task}", n, trial), n), t


def population_set(t: SyntheticTask, seed: int, trial: int, size: int = POPULATION_SIZE) -> Dataset:
    return t.sample(stream(seed, f"population:{t.name}", trial), size)


@dataclass
class TrialOutcome:
    theta: NDArray[np.float64]
    excess_empirical: float
    excess_population: float
    noise_scale: float
    lam: float
    T: int | None
    runtime_ms: float
    dual_suboptimality: float | None = None


def mechanism_seed(seed: int, n: int, trial: int, mechanism: str) -> int:
    """A derived 63-bit seed so each (n, trial, mechanism) has its own noise."""
    return int(stream(seed, f"mech:{mechanism}", n, trial).integers(0, 2**63 - 1))


def run_trial(
    mechanism: str,
    data: Dataset,
    population: Dataset,
    F: SubmodularFn,
    loss_kind: str,
    params: PrivacyParams,
    lam: float,
    seed: int,
    *,
    width: WidthEstimate,
    theta_bound: float = 1.0,
    T: int | str = "auto",
) -> TrialOutcome:
    """Run one mechanism on ``data`` and measure excess risks.

    Empirical excess risk is the penalised objective on ``data`` relative to
    its minimiser.  Population excess risk uses ``population`` as a stand-in
    for the data distribution: the same penalised objective on that sample,
    relative to its own minimiser (which approximates ``theta*``).
    """
    if mechanism not in MECHANISMS:
        raise ValueError(f"unknown mechanism {mechanism!r}; expected one of {MECHANISMS}")
    loss = LossModel.for_data(loss_kind, data, theta_bound)
    prob = ErmProblem(data, loss, F, lam)
    start = time.perf_counter()
    hat = solve_erm(prob)
    T_used = None
    sub = None
    if mechanism == "none":
        theta, scale = hat.x, 0.0
    elif mechanism in ("output_gauss", "output_gamma"):
        variant = "gaussian" if mechanism == "output_gauss" else "gamma"
        res = output_perturb(prob, params, variant, seed, lam=None, width=width, theta_hat=hat.x)
        theta, scale = res.theta, res.mechanism.scale
    elif mechanism == "obj_perturb":
        res = objective_perturb(prob, params, seed)
        theta, scale = res.theta, res.mechanism.scale
    else:
        dp = DualProblem.build(prob, width=width)
        res = private_frank_wolfe(dp, params, T, seed)
        theta, scale, T_used = res.theta, res.mechanism.scale, res.provenance["T"]
        sub = float(hat.objective - dp.value(res.s)) if "s" in hat.extra else None
    runtime = (time.perf_counter() - start) * 1e3
    emp = primal_objective(prob, theta).total - primal_objective(prob, hat.x).total
    pop_prob = ErmProblem(population, LossModel.for_data(loss_kind, population, theta_bound), F, lam * population.n / data.n)
    star = solve_erm(pop_prob).x
    popx = primal_objective(pop_prob, theta).total - primal_objective(pop_prob, star).total
    return TrialOutcome(theta, emp, popx, scale, lam, T_used, runtime, sub)


def fit_loglog(ns, values, confidence: float = 0.95) -> dict:
    """Least-squares slope of ``log(values)`` against ``log(ns)`` with a
    ``confidence`` interval from the t distribution."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    res = scipy.stats.linregress(x, y)
    dof = len(x) - 2
    half = float(scipy.stats.t.ppf(0.5 + confidence / 2, dof) * res.stderr) if dof > 0 else math.nan
    return {
        "slope": float(res.slope),
        "intercept": float(res.intercept),
        "stderr": float(res.stderr),
        "ci_low": float(res.slope - half),
        "ci_high": float(res.slope + half),
        "confidence": confidence,
    }


def private_fw_utility(
    task: SyntheticTask,
    n_grid,
    trials: int,
    params: PrivacyParams,
    F: SubmodularFn,
    lam_per_n: float,
    seed: int,
    width: WidthEstimate | None = None,
) -> dict:
    """Dual suboptimality of private Frank-Wolfe against ``n``.

    The weight is ``lam = lam_per_n * n`` so that the dual polytope ``K``
    (hence its diameter and width) stays fixed while ``n`` grows.
    """
    if width is None:
        width = gaussian_width_mc(F, 10_000, seed)
    means, ses, Ts = [], [], []
    for n in n_grid:
        vals = []
        for trial in range(trials):
            data = task.sample(stream(seed, f"sample:{task.name}", n, trial), n)
            prob = ErmProblem(data, LossModel.for_data("squared", data), F, lam_per_n * n)
            dp = DualProblem.build(prob, width=width)
            best = solve_dual_precise(dp).objective
            res = private_frank_wolfe(dp, params, "auto", mechanism_seed(seed, n, trial, "private_fw"))
            vals.append(best - dp.value(res.s))
        Ts.append(res.provenance["T"])
        means.append(float(np.mean(vals)))
        ses.append(float(np.std(vals, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0)
    return {"n": list(n_grid), "mean": means, "std_error": ses, "T": Ts, "fit": fit_loglog(n_grid, means)}


def output_perturbation_utility(
    task: SyntheticTask,
    n_grid,
    trials: int,
    params: PrivacyParams,
    F: SubmodularFn,
    seed: int,
    width: WidthEstimate | None = None,
    variant: str = "gaussian",
) -> dict:
    """Excess empirical risk of output perturbation with the automatic weight.

    Besides the measured risk, each ``n`` records the two terms of the
    utility bound averaged over trials: the noise term ``L R2 sigma`` and
    the penalty term ``(lam / n) G``.  For the Gamma variant ``sigma`` is
    the mean radius ``p / rate``.
    """
    if width is None:
        width = gaussian_width_mc(F, 10_000, seed)
    means, ses, noise_terms, penalty_terms = [], [], [], []
    for n in n_grid:
        vals, nt, pt = [], [], []
        for trial in range(trials):
            data = task.sample(stream(seed, f"sample:{task.name}", n, trial), n)
            loss = LossModel.for_data("squared", data)
            lam = balanced_lambda(loss.lipschitz, data.R2, n, width.mean)
            prob = ErmProblem(data, loss, F, lam)
            res = output_perturb(prob, params, variant, mechanism_seed(seed, n, trial, "output"), lam=None, width=width)
            vals.append(primal_objective(prob, res.theta).total - primal_objective(prob, res.theta_hat).total)
            sigma = res.mechanism.scale if variant == "gaussian" else task.p / res.mechanism.scale
            nt.append(loss.lipschitz * data.R2 * sigma)
            pt.append(lam / n * width.mean)
        means.append(float(np.mean(vals)))
        ses.append(float(np.std(vals, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0)
        noise_terms.append(float(np.mean(nt)))
        penalty_terms.append(float(np.mean(pt)))
    return {
        "n": list(n_grid),
        "mean": means,
        "std_error": ses,
        "bound_noise_term": noise_terms,
        "bound_penalty_term": penalty_terms,
        "fit": fit_loglog(n_grid, means),
    }
