"""Naive reference implementations for cross-checking the production code.

Nothing in here calls the greedy algorithm, the Lovász extension or the
solvers it is meant to validate: vertices are enumerated from raw set
evaluations, minimisers come from grids, objectives from explicit loops.
Everything is slow and meant for tiny instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .rng import stream

MAX_GRID_POINTS = 10_000_000


class OracleCapacityError(RuntimeError):
    pass


def naive_vertices(F, p: int) -> list[tuple[float, ...]]:
    """Every signed greedy prefix point, straight from the definition."""
    if p > 8:
        raise OracleCapacityError(f"naive vertex enumeration is limited to p <= 8 (got {p})")
    pts = set()
    for perm in itertools.permutations(range(p)):
        for k in range(p + 1):
            mags = []
            for i in range(k):
                hi = F(frozenset(perm[: i + 1]))
                lo = F(frozenset(perm[:i]))
                mags.append(hi - lo)
            for signs in itertools.product((1.0, -1.0), repeat=k):
                v = [0.0] * p
                for i in range(k):
                    v[perm[i]] = signs[i] * mags[i]
                pts.add(tuple(v))
    return sorted(pts)


def lp_over_vertices(F, w, vertices=None) -> float:
    """``max_v w^T v`` over the naive vertex list of ``|P|(F)``."""
    w = np.asarray(w, dtype=float)
    V = np.asarray(naive_vertices(F, len(w)) if vertices is None else vertices, dtype=float)
    return float(np.max(V @ w))


def in_convex_hull(points, x, tol: float = 1e-9) -> bool:
    """Feasibility LP: is ``x`` a convex combination of ``points``?"""
    P = np.asarray(points, dtype=float)
    m = len(P)
    A_eq = np.vstack([P.T, np.ones((1, m))])
    b_eq = np.concatenate([np.asarray(x, dtype=float), [1.0]])
    res = scipy.optimize.linprog(
        np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m, method="highs"
    )
    return bool(res.status == 0 and np.max(np.abs(A_eq @ res.x - b_eq)) <= tol)


def naive_in_polytope(F, s, tol: float = 1e-9) -> bool:
    """Check ``|s|(A) <= F(A)`` for every nonempty ``A`` with plain loops."""
    p = len(s)
    for r in range(1, p + 1):
        for A in itertools.combinations(range(p), r):
            if sum(abs(s[j]) for j in A) > F(frozenset(A)) + tol:
                return False
    return True


@dataclass(frozen=True)
class GridSpec:
    lo: tuple
    hi: tuple
    steps_per_dim: int

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have the same length")
        if self.steps_per_dim < 3:
            raise ValueError("steps_per_dim must be >= 3")
        if self.steps_per_dim ** len(self.lo) > MAX_GRID_POINTS:
            raise OracleCapacityError(
                f"grid of {self.steps_per_dim}^{len(self.lo)} points exceeds {MAX_GRID_POINTS}"
            )


def grid_minimize(objective, spec: GridSpec, refine_rounds: int = 3, vectorized: bool = False):
    """Exhaustive grid search followed by ``refine_rounds`` local passes.

    Each refinement halves the spacing and re-searches the ``5^d`` points
    around the incumbent (clipped to the box).  Ties go to the lowest grid
    index, so a constant objective returns the ``lo`` corner.  With
    ``vectorized=True`` the objective receives an ``(m, d)`` array.
    """
    lo = np.asarray(spec.lo, dtype=float)
    hi = np.asarray(spec.hi, dtype=float)
    d = len(lo)
    axes = [np.linspace(lo[i], hi[i], spec.steps_per_dim) for i in range(d)]
    pts = np.array(list(itertools.product(*axes))) if d > 1 else axes[0][:, None]
    vals = _evaluate(objective, pts, vectorized)
    k = int(np.argmin(vals))
    best, best_val = pts[k].copy(), float(vals[k])
    h = (hi - lo) / (spec.steps_per_dim - 1)
    for _ in range(refine_rounds):
        h = h / 2.0
        offs = np.array(list(itertools.product(range(-2, 3), repeat=d)), dtype=float)
        cand = np.clip(best + offs * h, lo, hi)
        cv = _evaluate(objective, cand, vectorized)
        j = int(np.argmin(cv))
        if cv[j] < best_val:
            best, best_val = cand[j].copy(), float(cv[j])
    return best, best_val


def _evaluate(objective, pts, vectorized):
    if vectorized:
        return np.asarray(objective(pts), dtype=float)
    return np.array([objective(x) for x in pts], dtype=float)


def mc_width_named(ball: str, p: int, samples: int, seed: int = 0):
    """Direct Monte-Carlo Gaussian width of a named unit ball.

    ``Linf``: ``E ||b||_1``; ``L1``: ``E ||b||_inf``.  Returns
    ``(mean, std_error)``.  Uses its own random stream.
    """
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    B = stream(seed, f"mc_width_named:{ball}").standard_normal((samples, p))
    if ball == "Linf":
        v = np.abs(B).sum(axis=1)
    elif ball == "L1":
        v = np.abs(B).max(axis=1)
    else:
        raise ValueError(f"unknown ball {ball!r}; expected 'L1' or 'Linf'")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(samples))


def naive_objective(X, y, F, lam, theta, loss: str = "squared", shift=None) -> float:
    """Penalised empirical risk from explicit loops.

    The norm is computed as ``max_v theta^T v`` over :func:`naive_vertices`.
    """
    n, p = len(X), len(theta)
    total = 0.0
    for i in range(n):
        z = sum(X[i][j] * theta[j] for j in range(p))
        if loss == "squared":
            total += (z - y[i]) ** 2
        elif loss == "logistic":
            total += math.log1p(math.exp(-y[i] * z))
        else:
            total += max(0.0, 1.0 - y[i] * z)
    total /= n
    if shift is not None:
        total += sum(shift[j] * theta[j] for j in range(p))
    return total + lam / n * lp_over_vertices(F, theta)
