"""Penalised empirical risk minimisation with a submodular norm, and its dual.

The primal problem is

    min_theta  Lhat(theta) + (lam / n) * omega_inf(F, theta),
    Lhat(theta) = (1/n) sum_i l(theta; x_i, y_i) + shift^T theta,

where ``shift`` is an optional linear term (objective perturbation uses it).
Its dual is ``sup_{s in K} -Lhat^*(-s)`` with ``K = (lam / n) |P|(F)``, and a
dual point maps back to ``theta(s) = argmin_theta Lhat(theta) + s^T theta``,
which is also the gradient of the dual objective at ``s``.  All dual vectors
handled here live in ``K`` (they already carry the ``lam / n`` factor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.optimize
from numpy.typing import ArrayLike, NDArray

from .submodular import (
    MAX_ENUMERATION_P,
    CapabilityError,
    SubmodularFn,
    WidthEstimate,
    enumerate_vertices,
    gaussian_width_mc,
    max_violation,
    omega_inf,
    polytope_diameter,
    polytope_linmax,
)

LOSS_KINDS = ("squared", "logistic", "hinge")
DIVERGENCE_LIMIT = 1e12
# Stall window for subgradient runs whose answer is consumed downstream; the
# default window of 50 stops while the best iterate is still plateaued.
ACCURATE_WINDOW = 5000


class SolverError(RuntimeError):
    """A solver diverged or failed to reach its tolerance."""


@dataclass(frozen=True)
class Dataset:
    """``n`` labelled points ``(x_i, y_i)`` stored as a design matrix."""

    X: NDArray[np.float64]
    y: NDArray[np.float64]

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if X.shape[0] < 1:
            raise ValueError("a dataset needs at least one point")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_points(cls, points) -> "Dataset":
        xs, ys = zip(*points)
        return cls(np.array(xs, dtype=float), np.array(ys, dtype=float))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @cached_property
    def R2(self) -> float:
        """Largest Euclidean norm of an input vector."""
        return float(np.max(np.linalg.norm(self.X, axis=1)))

    @property
    def y_range(self) -> tuple[float, float]:
        return float(self.y.min()), float(self.y.max())

    def replace(self, i: int, x: ArrayLike, y: float) -> "Dataset":
        """Neighbouring dataset with point ``i`` replaced."""
        X = self.X.copy()
        Y = self.y.copy()
        X[i] = x
        Y[i] = y
        return Dataset(X, Y)


@dataclass(frozen=True)
class LossModel:
    """A GLM loss ``l(theta; x, y) = phi(theta^T x, y)`` and its constants.

    ``lipschitz`` is the Lipschitz constant in ``theta``; ``strong_convexity``
    refers to the averaged empirical loss; ``smoothness`` bounds the second
    derivative in ``theta`` (``inf`` for the hinge loss).
    """

    kind: str
    lipschitz: float
    strong_convexity: float = 0.0
    smoothness: float = math.inf

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.kind!r}; expected one of {LOSS_KINDS}")
        if not self.lipschitz > 0:
            raise ValueError("lipschitz constant must be positive")

    @classmethod
    def for_data(cls, kind: str, data: Dataset, theta_bound: float = 1.0) -> "LossModel":
        """Constants for ``kind`` on ``data`` with ``||theta||_2 <= theta_bound``.

        The squared loss is only Lipschitz on a bounded domain, hence
        ``theta_bound``: ``|d/dtheta (theta^T x - y)^2| <= 2 R2 (B R2 + max|y|)``.
        """
        R2 = data.R2
        ymax = float(np.max(np.abs(data.y)))
        if kind == "squared":
            L = 2.0 * R2 * (theta_bound * R2 + ymax)
            H = 2.0 * data.X.T @ data.X / data.n
            delta = float(np.linalg.eigvalsh(H)[0])
            return cls(kind, L, max(delta, 0.0), 2.0 * R2**2)
        if kind == "logistic":
            return cls(kind, R2 * max(ymax, 1e-300), 0.0, R2**2 / 4.0)
        if kind == "hinge":
            return cls(kind, R2 * max(ymax, 1e-300), 0.0, math.inf)
        raise ValueError(f"unknown loss {kind!r}; expected one of {LOSS_KINDS}")

    def phi(self, z: NDArray, y: NDArray) -> NDArray:
        if self.kind == "squared":
            return (z - y) ** 2
        if self.kind == "logistic":
            return np.logaddexp(0.0, -y * z)
        return np.maximum(0.0, 1.0 - y * z)

    def dphi(self, z: NDArray, y: NDArray) -> NDArray:
        """Derivative (a subgradient for the hinge) of ``phi`` in ``z``."""
        if self.kind == "squared":
            return 2.0 * (z - y)
        if self.kind == "logistic":
            return -y * _sigmoid(-y * z)
        return np.where(1.0 - y * z > 0.0, -y, 0.0)

    def d2phi(self, z: NDArray, y: NDArray) -> NDArray:
        if self.kind == "squared":
            return np.full_like(z, 2.0)
        if self.kind == "logistic":
            s = _sigmoid(y * z)
            return y * y * s * (1.0 - s)
        raise CapabilityError("the hinge loss has no second derivative")


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


class ObjectiveValue(NamedTuple):
    loss: float
    penalty: float
    total: float


@dataclass(eq=False)
class ErmProblem:
    """Data, loss, submodular function and regularisation weight ``lam``.

    ``shift`` adds ``shift^T theta`` to the smooth part; ``ridge`` adds
    ``ridge * ||theta||^2`` (used to make conjugates well defined).
    """

    data: Dataset
    loss: LossModel
    F: SubmodularFn
    lam: float
    shift: NDArray[np.float64] | None = None
    ridge: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.F.p != self.data.p:
            raise ValueError(f"F is defined on p={self.F.p} but data has p={self.data.p}")
        if self.shift is not None:
            self.shift = np.asarray(self.shift, dtype=float).reshape(self.data.p)

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def p(self) -> int:
        return self.data.p

    @property
    def weight(self) -> float:
        """The penalty weight ``lam / n``."""
        return self.lam / self.data.n

    def with_shift(self, shift: ArrayLike | None) -> "ErmProblem":
        return ErmProblem(self.data, self.loss, self.F, self.lam, shift, self.ridge)

    def with_lambda(self, lam: float) -> "ErmProblem":
        return ErmProblem(self.data, self.loss, self.F, lam, self.shift, self.ridge)

    # -- smooth part ----------------------------------------------------

    def smooth_value(self, theta: NDArray) -> float:
        z = self.data.X @ theta
        v = float(np.mean(self.loss.phi(z, self.data.y)))
        if self.shift is not None:
            v += float(self.shift @ theta)
        if self.ridge:
            v += self.ridge * float(theta @ theta)
        return v

    def smooth_grad(self, theta: NDArray) -> NDArray:
        z = self.data.X @ theta
        g = self.data.X.T @ self.loss.dphi(z, self.data.y) / self.n
        if self.shift is not None:
            g = g + self.shift
        if self.ridge:
            g = g + 2.0 * self.ridge * theta
        return g

    def smooth_hessian(self, theta: NDArray) -> NDArray:
        z = self.data.X @ theta
        w = self.loss.d2phi(z, self.data.y) / self.n
        H = (self.data.X * w[:, None]).T @ self.data.X
        if self.ridge:
            H = H + 2.0 * self.ridge * np.eye(self.p)
        return H

    @cached_property
    def quadratic(self) -> "_Quadratic":
        """Closed-form pieces of the squared loss (only for ``kind == 'squared'``)."""
        if self.loss.kind != "squared":
            raise CapabilityError("closed-form conjugate needs the squared loss")
        return _Quadratic.build(self)


@dataclass(frozen=True)
class _Quadratic:
    """``Lhat(theta) = theta^T A theta - u^T theta + c`` with a Cholesky of ``2A``."""

    A: NDArray
    u: NDArray
    c: float
    chol: tuple
    ridge_added: float

    @classmethod
    def build(cls, prob: ErmProblem) -> "_Quadratic":
        X, y, n, p = prob.data.X, prob.data.y, prob.n, prob.p
        A = X.T @ X / n + prob.ridge * np.eye(p)
        u = 2.0 * X.T @ y / n
        if prob.shift is not None:
            u = u - prob.shift
        c = float(y @ y / n)
        extra = 0.0
        if np.linalg.eigvalsh(A)[0] <= 1e-12 * max(np.trace(A), 1e-300) / p:
            # rank deficient design: regularise so the conjugate is finite
            extra = 1e-8 * max(np.trace(A), 1.0) / p
            A = A + extra * np.eye(p)
        chol = scipy.linalg.cho_factor(2.0 * A)
        return cls(A, u, c, chol, extra)

    def argmin(self, z: NDArray) -> NDArray:
        """``argmax_theta z^T theta - Lhat(theta)``."""
        return scipy.linalg.cho_solve(self.chol, z + self.u)

    def value(self, theta: NDArray) -> float:
        return float(theta @ self.A @ theta - self.u @ theta + self.c)


# -- primal -----------------------------------------------------------------


def primal_objective(prob: ErmProblem, theta: ArrayLike) -> ObjectiveValue:
    """Smooth part, penalty ``(lam/n) omega_inf(theta)`` and their sum."""
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    loss = prob.smooth_value(theta)
    pen = prob.weight * omega_inf(prob.F, theta)
    return ObjectiveValue(loss, pen, loss + pen)


def penalty_subgradient(F: SubmodularFn, theta: NDArray) -> NDArray:
    """A subgradient of ``omega_inf`` at ``theta``: the greedy maximiser of
    ``theta^T s`` over ``|P|(F)``.  Zero coordinates get a ``+`` sign."""
    return polytope_linmax(F, theta).s


@dataclass
class SolveReport:
    x: NDArray[np.float64]
    objective_trace: list[float]
    gap_trace: list[float]
    iterations: int
    converged: bool
    status: str = "ok"
    iterates: list[NDArray[np.float64]] | None = None
    extra: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else math.nan


def solve_primal_subgradient(
    prob: ErmProblem,
    max_iter: int = 10_000,
    eta0: float | None = None,
    theta0: ArrayLike | None = None,
    rel_tol: float = 1e-9,
    window: int = 50,
) -> SolveReport:
    """Subgradient descent with steps ``eta0 / sqrt(t)`` and best-iterate tracking.

    ``eta0`` defaults to ``1 / L``.  The run stops once the best objective
    has improved by less than ``rel_tol`` (relative) over ``window``
    iterations.  The reported point is the best iterate seen; the objective
    trace records the best value after each iteration.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    eta0 = 1.0 / prob.loss.lipschitz if eta0 is None else float(eta0)
    theta = np.zeros(prob.p) if theta0 is None else np.array(theta0, dtype=float)
    best = theta.copy()
    best_val = primal_objective(prob, theta).total
    trace = [best_val]
    status = "max_iter"
    converged = False
    t = 0
    for t in range(1, max_iter + 1):
        g = prob.smooth_grad(theta) + prob.weight * penalty_subgradient(prob.F, theta)
        theta = theta - eta0 / math.sqrt(t) * g
        val = primal_objective(prob, theta).total
        if not math.isfinite(val) or abs(val) > DIVERGENCE_LIMIT:
            status = "diverged"
            break
        if val < best_val:
            best_val = val
            best = theta.copy()
        trace.append(best_val)
        if t >= window:
            old = trace[-window - 1]
            if old - best_val <= rel_tol * max(1.0, abs(best_val)):
                converged = True
                status = "converged"
                break
    return SolveReport(best, trace, [], t, converged, status)


def solve_primal_epigraph(prob: ErmProblem, vertices: NDArray | None = None) -> SolveReport:
    """Solve the primal as a smooth program over ``(theta, t)``.

    ``omega_inf(theta) = max_v v^T theta`` over the vertices of ``|P|(F)``,
    so the problem becomes ``min Lhat(theta) + (lam/n) t`` subject to
    ``v^T theta <= t``.  Solved with SLSQP; intended for ``p <= 8``.
    """
    V = enumerate_vertices(prob.F) if vertices is None else np.asarray(vertices)
    V = V[np.any(V != 0.0, axis=1)]
    p, w = prob.p, prob.weight

    def f(x):
        return prob.smooth_value(x[:p]) + w * x[p]

    def jac(x):
        return np.concatenate([prob.smooth_grad(x[:p]), [w]])

    cons = {
        "type": "ineq",
        "fun": lambda x: x[p] - V @ x[:p],
        "jac": lambda x: np.hstack([-V, np.ones((len(V), 1))]),
    }
    x0 = np.zeros(p + 1)
    res = scipy.optimize.minimize(
        f, x0, jac=jac, constraints=[cons], method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 2000},
    )
    theta = res.x[:p]
    val = primal_objective(prob, theta).total
    return SolveReport(theta, [val], [], int(res.nit), bool(res.success), res.message)


# -- conjugate and dual -------------------------------------------------------


class Conjugate(NamedTuple):
    value: float
    theta: NDArray[np.float64]


def fenchel_conjugate(prob: ErmProblem, z: ArrayLike, tol: float = 1e-10) -> Conjugate:
    """``Lhat^*(z) = sup_theta z^T theta - Lhat(theta)`` and its maximiser.

    Closed form for the squared loss; Newton's method (to gradient norm
    ``tol``) for the logistic loss, which needs ``prob.ridge > 0`` unless
    ``z`` lies inside the range of the loss gradient.
    """
    z = np.asarray(z, dtype=float)
    kind = prob.loss.kind
    if kind == "squared":
        q = prob.quadratic
        theta = q.argmin(z)
        return Conjugate(float(z @ theta) - q.value(theta), theta)
    if kind == "hinge":
        raise CapabilityError("the hinge loss is not strongly convex; no smooth conjugate")
    theta = np.zeros(prob.p)
    for _ in range(200):
        g = prob.smooth_grad(theta) - z
        if np.linalg.norm(g) <= tol:
            return Conjugate(float(z @ theta) - prob.smooth_value(theta), theta)
        H = prob.smooth_hessian(theta)
        step = np.linalg.solve(H + 1e-300 * np.eye(prob.p), g)
        h0 = prob.smooth_value(theta) - z @ theta
        a = 1.0
        while a > 1e-12:
            cand = theta - a * step
            if prob.smooth_value(cand) - z @ cand <= h0 - 1e-4 * a * (g @ step):
                break
            a *= 0.5
        theta = theta - a * step
        if not np.all(np.isfinite(theta)) or np.linalg.norm(theta) > DIVERGENCE_LIMIT:
            break
    raise CapabilityError(
        "conjugate maximisation did not converge; the loss is not strongly convex "
        "at this point (set a ridge)"
    )


@dataclass(eq=False)
class DualProblem:
    """The dual over ``K = (lam/n) |P|(F)``.

    ``vertices`` are the enumerated points of ``K`` (``p <= 8``) or ``None``;
    ``width`` is the Gaussian width estimate of the unscaled ``|P|(F)``.
    """

    problem: ErmProblem
    vertices: NDArray[np.float64] | None
    gamma_K: float
    width: WidthEstimate | None = None

    @classmethod
    def build(
        cls,
        prob: ErmProblem,
        *,
        enumerate: bool | None = None,
        width_samples: int = 0,
        seed: int = 0,
        width: WidthEstimate | None = None,
        unit_vertices: NDArray | None = None,
    ) -> "DualProblem":
        if enumerate is None:
            enumerate = prob.p <= MAX_ENUMERATION_P
        V = None
        if unit_vertices is not None:
            V = prob.weight * np.asarray(unit_vertices, dtype=float)
        elif enumerate:
            V = prob.weight * enumerate_vertices(prob.F)
        if V is not None:
            gamma = polytope_diameter(prob.F, V / prob.weight)
        elif prob.F.cardinality_based or prob.p <= MAX_ENUMERATION_P:
            gamma = polytope_diameter(prob.F)
        else:
            gamma = math.nan
        if width is None and width_samples:
            width = gaussian_width_mc(prob.F, width_samples, seed)
        return cls(prob, V, prob.weight * gamma, width)

    @property
    def scale(self) -> float:
        return self.problem.weight

    @property
    def G_K(self) -> float:
        if self.width is None:
            raise ValueError("no Gaussian width estimate attached to this dual problem")
        return self.scale * self.width.mean

    def theta(self, s: NDArray) -> NDArray:
        """Dual gradient ``grad Lhat^*(-s)``, i.e. the primal point of ``s``."""
        return fenchel_conjugate(self.problem, -s).theta

    def value(self, s: NDArray) -> float:
        return -fenchel_conjugate(self.problem, -s).value

    def linmax(self, theta: NDArray) -> NDArray:
        """``argmax_{s in K} s^T theta`` by the greedy algorithm."""
        return self.scale * polytope_linmax(self.problem.F, theta).s

    def lipschitz_l1(self) -> float:
        """Lipschitz constant of ``Lhat^*`` w.r.t. the L1 norm on ``-K``.

        For the squared loss ``theta(s)`` is affine, so ``||theta(s)||_inf``
        is maximised at a vertex and the enumeration gives the exact value.
        """
        if self.vertices is None or self.problem.loss.kind != "squared":
            raise CapabilityError("pass the L1-Lipschitz constant explicitly for this problem")
        q = self.problem.quadratic
        thetas = scipy.linalg.cho_solve(q.chol, (q.u[:, None] - self.vertices.T))
        return float(np.max(np.abs(thetas)))


def dual_objective(dp: DualProblem, s: ArrayLike, tol: float = 1e-9) -> float:
    """``-Lhat^*(-s)`` for ``s`` in ``K``; raises ``ValueError`` if infeasible."""
    s = np.asarray(s, dtype=float)
    viol = max_violation(dp.problem.F, s / dp.scale)
    if viol > tol:
        raise ValueError(f"s is outside K: max constraint violation {viol:.3e} (unscaled)")
    return dp.value(s)


def primal_from_dual(dp: DualProblem, s: ArrayLike) -> NDArray[np.float64]:
    """``argmin_theta Lhat(theta) + s^T theta`` for ``s`` in ``K``."""
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("s must be finite")
    return dp.theta(s)


def _require_smooth_dual(prob: ErmProblem) -> None:
    if prob.loss.kind == "hinge":
        raise CapabilityError("Frank-Wolfe on the dual needs a strongly convex loss")
    if prob.loss.kind == "logistic" and prob.ridge <= 0:
        raise CapabilityError("the logistic loss needs ridge > 0 for a smooth dual")


def vertex_scores(s: NDArray, V: NDArray, theta: NDArray) -> NDArray:
    """``(s - v)^T theta`` for every row ``v`` of ``V``."""
    return (s - V) @ theta


def frank_wolfe_dual(
    dp: DualProblem,
    T: int,
    *,
    vertex_argmin: bool = False,
    record_iterates: bool = False,
) -> SolveReport:
    """Plain Frank-Wolfe on the dual, step ``1 / (t + 2)``, from ``s_0 = 0``.

    The linear step uses the greedy oracle, or with ``vertex_argmin=True``
    the first minimiser of ``(s - v)^T theta`` over ``dp.vertices``.  The gap
    trace holds ``max_{v in K} (v - s_{t-1})^T theta_{t-1}``, which for these
    problems equals the primal-dual gap at ``s_{t-1}``.
    """
    _require_smooth_dual(dp.problem)
    if T < 0:
        raise ValueError("T must be >= 0")
    if vertex_argmin and dp.vertices is None:
        raise ValueError("vertex_argmin needs enumerated vertices")
    s = np.zeros(dp.problem.p)
    objs: list[float] = []
    gaps: list[float] = []
    its = [s.copy()] if record_iterates else None
    for t in range(1, T + 1):
        theta = dp.theta(s)
        if vertex_argmin:
            scores = vertex_scores(s, dp.vertices, theta)
            i = int(np.argmin(scores))
            s_bar = dp.vertices[i]
            gaps.append(float(-scores[i]))
        else:
            s_bar = dp.linmax(theta)
            gaps.append(float((s_bar - s) @ theta))
        rho = 1.0 / (t + 2)
        s = (1.0 - rho) * s + rho * s_bar
        objs.append(dp.value(s))
        if its is not None:
            its.append(s.copy())
    return SolveReport(s, objs, gaps, T, False, "max_iter", its)


def solve_dual_precise(
    dp: DualProblem, tol: float = 1e-11, max_iter: int = 200_000
) -> SolveReport:
    """Away-step Frank-Wolfe with exact line search, for high-accuracy duals.

    The dual objective is strongly concave for the losses accepted here, so
    the away-step variant converges linearly on the polytope.  Stops when
    the Frank-Wolfe gap (the primal-dual gap) drops below
    ``tol * max(1, |dual|)``.  Only the greedy oracle is used, so this works
    for any ``p``.
    """
    prob = dp.problem
    _require_smooth_dual(prob)
    p = prob.p
    atoms: dict[bytes, list] = {np.zeros(p).tobytes(): [np.zeros(p), 1.0]}
    s = np.zeros(p)
    gaps: list[float] = []
    objs: list[float] = []
    converged = False
    quad = prob.quadratic if prob.loss.kind == "squared" else None
    it = 0
    for it in range(1, max_iter + 1):
        theta = dp.theta(s)
        v = dp.linmax(theta)
        g_fw = float((v - s) @ theta)
        gaps.append(g_fw)
        val = dp.value(s)
        objs.append(val)
        if g_fw <= tol * max(1.0, abs(val)):
            converged = True
            break
        keys = list(atoms)
        dots = [atoms[k][0] @ theta for k in keys]
        ka = keys[int(np.argmin(dots))]
        a, wa = atoms[ka]
        g_away = float((s - a) @ theta)
        if g_fw >= g_away or wa >= 1.0:
            d, gmax, fw = v - s, 1.0, True
        else:
            d, gmax, fw = s - a, wa / (1.0 - wa), False
        if quad is not None:
            curv = float(d @ scipy.linalg.cho_solve(quad.chol, d))
            gamma = min(gmax, float(d @ theta) / curv) if curv > 0 else gmax
        else:
            res = scipy.optimize.minimize_scalar(
                lambda g: -dp.value(s + g * d), bounds=(0.0, gmax), method="bounded",
                options={"xatol": 1e-14},
            )
            gamma = float(res.x)
        gamma = max(gamma, 0.0)
        if fw:
            for k in atoms:
                atoms[k][1] *= 1.0 - gamma
            kv = v.tobytes()
            if kv in atoms:
                atoms[kv][1] += gamma
            else:
                atoms[kv] = [v, gamma]
            if gamma >= 1.0:
                atoms = {kv: [v, 1.0]}
        else:
            for k in atoms:
                atoms[k][1] *= 1.0 + gamma
            atoms[ka][1] -= gamma
            if gamma >= gmax or atoms[ka][1] <= 1e-15:
                del atoms[ka]
        atoms = {k: a_ for k, a_ in atoms.items() if a_[1] > 0.0}
        s = sum(w_ * a_ for a_, w_ in atoms.values())
    return SolveReport(
        s, objs, gaps, it, converged, "converged" if converged else "max_iter",
        extra={"active_set": len(atoms)},
    )


def solve_erm(prob: ErmProblem, tol: float = 1e-11, max_iter: int = 100_000) -> SolveReport:
    """Solve the primal to high accuracy.

    Smooth strongly convex losses go through the precise dual solver and
    the primal-dual map; the hinge loss falls back to subgradient descent
    with ``max_iter`` iterations and a long stall window.  ``x`` of the report is ``theta``.
    """
    if prob.loss.kind == "hinge" or (prob.loss.kind == "logistic" and prob.ridge <= 0):
        return solve_primal_subgradient(prob, max_iter=max_iter, window=ACCURATE_WINDOW)
    dp = DualProblem.build(prob, enumerate=False)
    rep = solve_dual_precise(dp, tol=tol)
    theta = dp.theta(rep.x)
    rep.extra["s"] = rep.x
    rep.x = theta
    return rep
