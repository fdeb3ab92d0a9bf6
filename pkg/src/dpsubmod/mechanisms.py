"""Private release mechanisms: output perturbation, private Frank-Wolfe on the
dual polytope, and objective perturbation, with their noise calibrations.

The formal (epsilon, delta) guarantees assume the non-private minimiser is
computed exactly; here it is computed to a primal-dual gap of about 1e-11
and the mechanisms refuse to release anything from an unconverged solve.
The Gamma mechanism's epsilon-DP argument was made for differentiable
regularisers; it is provided for comparison with that caveat.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .erm import (
    ACCURATE_WINDOW,
    DualProblem,
    ErmProblem,
    SolveReport,
    SolverError,
    fenchel_conjugate,
    primal_objective,
    solve_dual_precise,
    solve_erm,
    solve_primal_epigraph,
    solve_primal_subgradient,
    vertex_scores,
)
from .rng import stream
from .submodular import WidthEstimate, gaussian_width_mc

DEFAULT_WIDTH_SAMPLES = 10_000


class NotConvergedError(SolverError):
    pass


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")

    def require_delta(self, what: str) -> None:
        if self.delta <= 0.0:
            raise ValueError(f"{what} needs delta > 0 (only the Gamma mechanism allows delta = 0)")


@dataclass(frozen=True)
class NoiseSpec:
    mechanism: str
    scale: float
    seed: int


@dataclass
class PrivateResult:
    """A released parameter plus everything needed to audit its noise.

    ``theta`` is the released primal vector; dual mechanisms also set ``s``.
    ``provenance`` holds exactly the constants the noise formula consumed.
    """

    theta: NDArray[np.float64]
    mechanism: NoiseSpec
    params: PrivacyParams
    lambda_used: float
    provenance: dict
    noise: NDArray[np.float64] | None = None
    theta_hat: NDArray[np.float64] | None = None
    s: NDArray[np.float64] | None = None
    report: SolveReport | None = None
    iterates: list | None = field(default=None, repr=False)


# -- calibrations -------------------------------------------------------------


def gaussian_sigma(L: float, R2: float, lam: float, epsilon: float, delta: float) -> float:
    """``sigma`` with ``sigma^2 = 16 (L R2)^2 (log(1/delta) + eps) / (lam^2 eps^2)``."""
    return math.sqrt(16.0 * (L * R2) ** 2 * (math.log(1.0 / delta) + epsilon) / (lam**2 * epsilon**2))


def gamma_rate(L: float, R2: float, lam: float, epsilon: float) -> float:
    """Rate of the radial Gamma law, density of ``b`` proportional to
    ``exp(-||b||_2 * eps * lam / (4 L R2))``."""
    return epsilon * lam / (4.0 * L * R2)


def laplace_scale(L: float, gamma_K: float, T: int, n: int, epsilon: float, delta: float) -> float:
    """Per-score Laplace scale ``L Gamma_K sqrt(8 T log(1/delta)) / (n eps)``."""
    return L * gamma_K * math.sqrt(8.0 * T * math.log(1.0 / delta)) / (n * epsilon)


def objective_sigma(L: float, n: int, epsilon: float, delta: float) -> float:
    """``sigma`` with ``sigma^2 = 2 L^2 log(1/delta) / (n eps)^2``."""
    return math.sqrt(2.0 * L**2 * math.log(1.0 / delta)) / (n * epsilon)


def balanced_lambda(L: float, R2: float, n: int, width: float) -> float:
    """Regularisation weight ``L R2 sqrt(n) / G`` balancing noise and penalty."""
    return L * R2 * math.sqrt(n) / width


def auto_iterations(gamma_K: float, n: int, epsilon: float, L: float, G_K: float) -> float:
    """``Gamma_K^{4/3} (n eps)^{2/3} / (L G_K)^{2/3}`` (not rounded)."""
    return gamma_K ** (4.0 / 3.0) * (n * epsilon) ** (2.0 / 3.0) / (L * G_K) ** (2.0 / 3.0)


# -- samplers -----------------------------------------------------------------


def sample_gaussian(rng: np.random.Generator, sigma: float, size) -> NDArray:
    return sigma * rng.standard_normal(size)


def sample_gamma_l2(rng: np.random.Generator, p: int, rate: float, size: int | None = None) -> NDArray:
    """Vectors with density proportional to ``exp(-rate * ||b||_2)`` in ``R^p``.

    The radius of such a vector is Gamma(shape=p, rate) and its direction
    is uniform on the sphere.
    """
    m = 1 if size is None else size
    u = rng.standard_normal((m, p))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = rng.gamma(shape=p, scale=1.0 / rate, size=m)
    out = u * r[:, None]
    return out[0] if size is None else out


def sample_laplace(rng: np.random.Generator, scale: float, size) -> NDArray:
    return rng.laplace(0.0, scale, size)


# -- output perturbation -----------------------------------------------------


def resolve_lambda(
    prob: ErmProblem,
    lam: float | str | None,
    width: WidthEstimate | None = None,
    width_samples: int = DEFAULT_WIDTH_SAMPLES,
    seed: int = 0,
) -> tuple[float, WidthEstimate | None]:
    """Pick the regularisation weight: ``"auto"`` applies :func:`balanced_lambda`
    with the Gaussian width of ``|P|(F)``, a number overrides, ``None`` keeps
    ``prob.lam``."""
    if lam is None:
        return prob.lam, width
    if lam == "auto":
        if width is None:
            width = gaussian_width_mc(prob.F, width_samples, seed)
        return balanced_lambda(prob.loss.lipschitz, prob.data.R2, prob.n, width.mean), width
    return float(lam), width


def _solve_or_refuse(prob: ErmProblem) -> SolveReport:
    rep = solve_erm(prob)
    if not rep.converged:
        raise NotConvergedError(
            f"non-private solve did not converge ({rep.status} after {rep.iterations} "
            "iterations); refusing to release a perturbed unconverged estimate"
        )
    return rep


def output_perturb(
    prob: ErmProblem,
    params: PrivacyParams,
    variant: str = "gaussian",
    seed: int = 0,
    *,
    lam: float | str | None = "auto",
    width: WidthEstimate | None = None,
    width_samples: int = DEFAULT_WIDTH_SAMPLES,
    theta_hat: ArrayLike | None = None,
) -> PrivateResult:
    """Release ``theta_hat + b``.

    ``variant`` is ``"gaussian"`` (needs ``delta > 0``) or ``"gamma"``.  By
    default the regularisation weight is set to ``L R2 sqrt(n) / G``; the
    noise scale is always computed from the weight actually used.
    ``theta_hat`` may be supplied when the caller already solved the same
    problem (same weight) to full accuracy.
    """
    if variant not in ("gaussian", "gamma"):
        raise ValueError(f"unknown variant {variant!r}; expected 'gaussian' or 'gamma'")
    if variant == "gaussian":
        params.require_delta("the Gaussian output mechanism")
    lam_used, width = resolve_lambda(prob, lam, width, width_samples, seed)
    prob = prob.with_lambda(lam_used)
    report = None
    if theta_hat is None:
        report = _solve_or_refuse(prob)
        theta_hat = report.x
    theta_hat = np.asarray(theta_hat, dtype=float)
    L, R2 = prob.loss.lipschitz, prob.data.R2
    prov = {
        "L": L, "R2": R2, "lambda": lam_used, "n": prob.n, "p": prob.p,
        "epsilon": params.epsilon, "delta": params.delta,
        "G": None if width is None else width.mean,
    }
    rng = stream(seed, "output_perturb")
    if variant == "gaussian":
        scale = gaussian_sigma(L, R2, lam_used, params.epsilon, params.delta)
        b = sample_gaussian(rng, scale, prob.p)
        spec = NoiseSpec("gaussian", scale, seed)
    else:
        scale = gamma_rate(L, R2, lam_used, params.epsilon)
        b = sample_gamma_l2(rng, prob.p, scale)
        spec = NoiseSpec("gamma_l2", scale, seed)
    return PrivateResult(theta_hat + b, spec, params, lam_used, prov, b, theta_hat, report=report)


def recompute_scale(result: PrivateResult) -> float:
    """Recompute the noise scale of ``result`` from its provenance alone."""
    pv, m = result.provenance, result.mechanism.mechanism
    if m == "gaussian":
        return gaussian_sigma(pv["L"], pv["R2"], pv["lambda"], pv["epsilon"], pv["delta"])
    if m == "gamma_l2":
        return gamma_rate(pv["L"], pv["R2"], pv["lambda"], pv["epsilon"])
    if m == "laplace_per_score":
        return laplace_scale(pv["L"], pv["gamma_K"], pv["T"], pv["n"], pv["epsilon"], pv["delta"])
    if m == "objective_gaussian":
        return objective_sigma(pv["L"], pv["n"], pv["epsilon"], pv["delta"])
    raise ValueError(f"unknown mechanism {m!r}")


# -- private Frank-Wolfe -----------------------------------------------------


def private_frank_wolfe(
    dp: DualProblem,
    params: PrivacyParams,
    T: int | str = "auto",
    seed: int = 0,
    *,
    L: float | None = None,
    noise_scale: float | None = None,
    width_samples: int = DEFAULT_WIDTH_SAMPLES,
    record_iterates: bool = False,
) -> PrivateResult:
    """Frank-Wolfe on the dual with Laplace-perturbed vertex selection.

    Every iteration scores each vertex ``v`` of ``K`` by
    ``(s - v)^T grad + Lap(scale)`` with fresh draws (stream
    ``(seed, "private_fw", t)``), moves towards the lowest score with step
    ``1 / (t + 2)``, and starts from ``s_0 = 0``.  ``L`` is the
    L1-Lipschitz constant of the conjugate (computed exactly for the squared
    loss when omitted).  ``T="auto"`` uses :func:`auto_iterations`, rounded
    down and clamped to at least 1.  ``noise_scale`` overrides the
    calibrated scale (0 reproduces the non-private vertex iteration).
    """
    params.require_delta("private Frank-Wolfe")
    V = dp.vertices
    if V is None or len(V) == 0:
        raise ValueError("private Frank-Wolfe needs a nonempty vertex set")
    prob = dp.problem
    if L is None:
        L = dp.lipschitz_l1()
    width = dp.width
    if width is None:
        width = gaussian_width_mc(prob.F, width_samples, seed)
    G_K = dp.scale * width.mean
    if T == "auto":
        T = int(math.floor(auto_iterations(dp.gamma_K, prob.n, params.epsilon, L, G_K)))
        if T < 1:
            warnings.warn("automatic iteration count below 1; using T = 1", stacklevel=2)
            T = 1
    T = int(T)
    if T < 1:
        raise ValueError("T must be >= 1")
    calibrated = laplace_scale(L, dp.gamma_K, T, prob.n, params.epsilon, params.delta)
    scale = calibrated if noise_scale is None else float(noise_scale)
    s = np.zeros(prob.p)
    its = [s.copy()] if record_iterates else None
    for t in range(1, T + 1):
        theta = dp.theta(s)
        scores = vertex_scores(s, V, theta)
        if scale > 0.0:
            scores = scores + sample_laplace(stream(seed, "private_fw", t), scale, len(V))
        i = int(np.argmin(scores))
        s_bar = V[i]
        rho = 1.0 / (t + 2)
        s = (1.0 - rho) * s + rho * s_bar
        if its is not None:
            its.append(s.copy())
    prov = {
        "L": L, "gamma_K": dp.gamma_K, "G_K": G_K, "T": T, "n": prob.n,
        "epsilon": params.epsilon, "delta": params.delta, "num_vertices": len(V),
        "lambda": prob.lam,
    }
    return PrivateResult(
        dp.theta(s), NoiseSpec("laplace_per_score", scale, seed), params, prob.lam,
        prov, s=s, iterates=its,
    )


# -- objective perturbation ---------------------------------------------------


def objective_perturb(
    prob: ErmProblem,
    params: PrivacyParams,
    seed: int = 0,
    *,
    b: ArrayLike | None = None,
    solver: str = "auto",
) -> PrivateResult:
    """Minimise ``Lhat(theta) + (lam/n) omega_inf(theta) + b^T theta / n``.

    ``b ~ N(0, sigma^2 I)`` with ``sigma^2 = 2 L^2 log(1/delta) / (n eps)^2``
    unless ``b`` is given.  ``solver`` is ``"subgradient"``, ``"precise"``
    (dual route) or ``"auto"`` (precise whenever the loss allows it).
    """
    params.require_delta("objective perturbation")
    L, n = prob.loss.lipschitz, prob.n
    sigma = objective_sigma(L, n, params.epsilon, params.delta)
    if b is None:
        b = sample_gaussian(stream(seed, "objective_perturb"), sigma, prob.p)
    b = np.asarray(b, dtype=float)
    shift = b / n if prob.shift is None else prob.shift + b / n
    pert = prob.with_shift(shift)
    if solver == "auto":
        solver = "subgradient" if prob.loss.kind == "hinge" else "precise"
    if solver == "precise":
        rep = _solve_or_refuse(pert)
    elif solver == "subgradient":
        rep = solve_primal_subgradient(pert, max_iter=100_000, window=ACCURATE_WINDOW)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    prov = {"L": L, "n": n, "epsilon": params.epsilon, "delta": params.delta, "lambda": prob.lam}
    return PrivateResult(
        rep.x, NoiseSpec("objective_gaussian", sigma, seed), params, prob.lam, prov,
        noise=b, report=rep,
    )


@dataclass
class EquivalenceReport:
    status: str
    theta_primal: NDArray[np.float64]
    theta_dual: NDArray[np.float64]
    s_priv: NDArray[np.float64]
    theta_gap: float
    objective_primal: float
    objective_dual_path: float
    dual_value: float

    @property
    def objective_gap(self) -> float:
        return abs(self.objective_primal - self.objective_dual_path)


def verify_primal_dual_equivalence(
    prob: ErmProblem, b: ArrayLike, tol: float = 1e-5
) -> EquivalenceReport:
    """Compare objective perturbation of the primal with the shifted dual.

    Path A minimises the perturbed primal directly (SLSQP on the epigraph
    form).  Path B maximises ``-Lhat^*(-(s + b/n))`` over ``K`` with the
    away-step dual solver, then recovers
    ``theta = argmin Lhat(theta) + (lam/n) theta^T u + b^T theta / n`` where
    ``u = s_priv / (lam/n)`` is the unscaled dual point.  ``status`` is
    ``"agree"``, ``"disagree"`` or ``"inconclusive"`` (a solver failed).
    """
    b = np.asarray(b, dtype=float)
    n = prob.n
    pert = prob.with_shift(b / n)
    a = solve_primal_epigraph(pert)
    dp = DualProblem.build(pert, enumerate=False)
    d = solve_dual_precise(dp)
    s_priv = d.x
    u = s_priv / prob.weight
    theta_b = fenchel_conjugate(prob, -(prob.weight * u + b / n)).theta
    obj_a = primal_objective(pert, a.x).total
    obj_b = primal_objective(pert, theta_b).total
    gap = float(np.linalg.norm(a.x - theta_b))
    if not (a.converged and d.converged):
        status = "inconclusive"
    elif gap <= tol and abs(obj_a - obj_b) <= tol:
        status = "agree"
    else:
        status = "disagree"
    return EquivalenceReport(status, a.x, theta_b, s_priv, gap, obj_a, obj_b, d.objective)


# -- sensitivity -------------------------------------------------------------


@dataclass
class SensitivityReport:
    max_distance: float
    distances: list[float]
    assumed_scale: float

    @property
    def violated(self) -> bool:
        return self.max_distance > self.assumed_scale


def empirical_sensitivity(
    prob: ErmProblem, point_sampler, num_pairs: int, seed: int = 0
) -> SensitivityReport:
    """Largest ``||theta_hat(D) - theta_hat(D')||_2`` over sampled neighbours.

    ``D'`` replaces one uniformly chosen point of ``prob.data`` with
    ``point_sampler(rng) -> (x, y)``.  The result is a lower bound on the
    global sensitivity, reported next to the ``4 L R2 / lam`` scale the
    Gaussian output mechanism is calibrated for.
    """
    if num_pairs < 1:
        raise ValueError("num_pairs must be >= 1")
    base = _solve_or_refuse(prob).x
    dists = []
    for k in range(num_pairs):
        rng = stream(seed, "sensitivity", k)
        i = int(rng.integers(prob.n))
        x, y = point_sampler(rng)
        other = ErmProblem(prob.data.replace(i, x, y), prob.loss, prob.F, prob.lam, prob.shift, prob.ridge)
        dists.append(float(np.linalg.norm(_solve_or_refuse(other).x - base)))
    assumed = 4.0 * prob.loss.lipschitz * prob.data.R2 / prob.lam
    return SensitivityReport(max(dists), dists, assumed)
