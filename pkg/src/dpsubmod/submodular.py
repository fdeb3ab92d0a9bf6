"""Submodular set functions, the Lovász extension and the symmetric polyhedron.

Subsets of the ground set ``{0, ..., p-1}`` are passed around either as
``frozenset`` objects or, on the exhaustive paths, as integer bit masks with
bit ``j`` standing for element ``j``.  The exhaustive oracles (membership,
dual norm) are test aids and are capped at ``p <= 24``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .rng import stream

MAX_EXHAUSTIVE_P = 24
MAX_ENUMERATION_P = 8
EXHAUSTIVE_CHECK_P = 12
MEMBERSHIP_TOL = 1e-9
DEDUP_TOL = 1e-12
_WIDTH_CHUNK = 1 << 16


class CapabilityError(RuntimeError):
    """Raised when an exact routine is asked to run beyond its size cap."""


class NotSubmodularError(ValueError):
    pass


def _check_cap(p: int, cap: int, what: str, hint: str = "") -> None:
    if p > cap:
        msg = f"{what} is exhaustive and limited to p <= {cap} (got p={p})"
        if hint:
            msg += f"; {hint}"
        raise CapabilityError(msg)


@dataclass(eq=False)
class SubmodularFn:
    """A nondecreasing submodular function on ``{0, ..., p-1}``.

    Use the named constructors (:meth:`cardinality`,
    :meth:`truncated_cardinality`, :meth:`concave_cardinality`,
    :meth:`custom`) rather than building instances directly.  Cardinality
    based functions keep the table ``g(0..p)`` with ``F(A) = g(|A|)``, which
    lets the greedy algorithm skip set evaluations entirely.
    """

    p: int
    kind: str
    evaluate: Callable[[frozenset], float]
    card_values: NDArray[np.float64] | None = None
    param: object = None
    _table: NDArray[np.float64] | None = field(default=None, repr=False)

    # -- constructors -----------------------------------------------------

    @classmethod
    def cardinality(cls, p: int) -> "SubmodularFn":
        return cls._from_card("cardinality", p, np.arange(p + 1, dtype=float))

    @classmethod
    def truncated_cardinality(cls, p: int, k: int) -> "SubmodularFn":
        if k < 1:
            raise ValueError(f"truncation level must be >= 1, got {k}")
        g = np.minimum(np.arange(p + 1, dtype=float), float(k))
        return cls._from_card("truncated", p, g, param=k)

    @classmethod
    def concave_cardinality(
        cls, p: int, g: Callable[[int], float] | ArrayLike
    ) -> "SubmodularFn":
        """``F(A) = g(|A|)`` for a concave nondecreasing ``g`` with ``g(0) = 0``."""
        if callable(g):
            values = np.array([float(g(k)) for k in range(p + 1)])
        else:
            values = np.asarray(g, dtype=float)
            if values.shape != (p + 1,):
                raise ValueError(f"need p+1={p + 1} values of g, got {values.shape}")
        inc = np.diff(values)
        if np.any(inc < -1e-12) or np.any(np.diff(inc) > 1e-12):
            raise NotSubmodularError("g must be nondecreasing and concave")
        return cls._from_card("concave", p, values, param=g)

    @classmethod
    def custom(
        cls,
        p: int,
        fn: Callable[[frozenset], float],
        *,
        validate: bool = True,
        num_checks: int = 1000,
        seed: int = 0,
    ) -> "SubmodularFn":
        """Wrap a black-box set function.

        ``fn`` receives a ``frozenset`` of 0-based indices.  Monotonicity
        and submodularity are verified exhaustively for ``p <= 12`` and on
        ``num_checks`` random pairs otherwise.
        """
        F = cls(p=_check_p(p), kind="custom", evaluate=fn)
        F._check_basic()
        if validate:
            check_submodular(F, num_checks=num_checks, seed=seed)
        return F

    @classmethod
    def _from_card(cls, kind, p, values, param=None) -> "SubmodularFn":
        p = _check_p(p)
        values = np.asarray(values, dtype=float)
        card = values.copy()
        F = cls(
            p=p,
            kind=kind,
            evaluate=lambda A: float(card[len(A)]),
            card_values=card,
            param=param,
        )
        F._check_basic()
        return F

    def _check_basic(self) -> None:
        if self(frozenset()) != 0.0:
            raise NotSubmodularError("F(empty set) must be 0")
        for j in range(self.p):
            if not self(frozenset([j])) > 0.0:
                raise NotSubmodularError(f"F({{{j}}}) must be strictly positive")

    # -- evaluation -------------------------------------------------------

    def __call__(self, A: Iterable[int]) -> float:
        A = A if isinstance(A, frozenset) else frozenset(A)
        return float(self.evaluate(A))

    @property
    def cardinality_based(self) -> bool:
        return self.card_values is not None

    def gains(self, order: ArrayLike) -> NDArray[np.float64]:
        """Marginal gains ``F({j_1..j_k}) - F({j_1..j_{k-1}})`` along ``order``."""
        order = np.asarray(order, dtype=int)
        if self.card_values is not None:
            return np.diff(self.card_values)[: len(order)]
        out = np.empty(len(order))
        prefix: set[int] = set()
        prev = 0.0
        for k, j in enumerate(order.tolist()):
            prefix.add(j)
            cur = self(frozenset(prefix))
            out[k] = cur - prev
            prev = cur
        return out

    def table(self) -> NDArray[np.float64]:
        """``F`` on every bit mask ``0 .. 2**p - 1`` (cached)."""
        _check_cap(self.p, MAX_EXHAUSTIVE_P, "the subset table")
        if self._table is None:
            masks = np.arange(1 << self.p, dtype=np.int64)
            if self.card_values is not None:
                self._table = self.card_values[_popcount(masks)]
            else:
                self._table = np.array(
                    [self(_mask_to_set(m)) for m in range(1 << self.p)]
                )
        return self._table

    def describe(self) -> str:
        if self.kind == "truncated":
            return f"min(|A|, {self.param})"
        return {"cardinality": "|A|", "concave": "g(|A|)", "custom": "custom"}[
            self.kind
        ]


def _check_p(p: int) -> int:
    p = int(p)
    if p < 1:
        raise ValueError(f"ground set size must be >= 1, got {p}")
    return p


def _popcount(masks: NDArray[np.int64]) -> NDArray[np.int64]:
    counts = np.zeros_like(masks)
    m = masks.copy()
    while np.any(m):
        counts += m & 1
        m >>= 1
    return counts


def _mask_to_set(mask: int) -> frozenset:
    return frozenset(j for j in range(mask.bit_length()) if mask >> j & 1)


def _subset_sums(a: NDArray[np.float64]) -> NDArray[np.float64]:
    """``sum_{j in A} a_j`` for every mask ``A``, built by doubling."""
    sums = np.zeros(1)
    for v in a:
        sums = np.concatenate([sums, sums + v])
    return sums


def check_submodular(F: SubmodularFn, num_checks: int = 1000, seed: int = 0) -> None:
    """Raise :class:`NotSubmodularError` if ``F`` is not monotone submodular.

    Uses the local characterisation on every mask when ``p <= 12``:
    ``F(A+i) >= F(A)`` and ``F(A+i) + F(A+j) >= F(A+i+j) + F(A)``.
    Larger ground sets are checked on random ``(A, B)`` pairs.
    """
    tol = 1e-10
    if F.p <= EXHAUSTIVE_CHECK_P:
        T = F.table()
        masks = np.arange(1 << F.p)
        for i in range(F.p):
            bi = 1 << i
            free = masks[(masks & bi) == 0]
            if np.any(T[free | bi] < T[free] - tol):
                raise NotSubmodularError(f"F is decreasing when adding element {i}")
            for j in range(i + 1, F.p):
                bj = 1 << j
                A = free[(free & bj) == 0]
                lhs = T[A | bi] + T[A | bj]
                rhs = T[A | bi | bj] + T[A]
                if np.any(lhs < rhs - tol):
                    bad = int(A[np.argmax(rhs - lhs)])
                    raise NotSubmodularError(
                        f"diminishing returns fails at A={sorted(_mask_to_set(bad))}, "
                        f"i={i}, j={j}"
                    )
        return
    rng = stream(seed, "submodular_check")
    for _ in range(num_checks):
        a = rng.random(F.p) < 0.5
        b = rng.random(F.p) < 0.5
        A = frozenset(np.flatnonzero(a).tolist())
        B = frozenset(np.flatnonzero(b).tolist())
        fa, fb = F(A), F(B)
        if F(A | B) + F(A & B) > fa + fb + tol:
            raise NotSubmodularError(f"submodularity fails at A={sorted(A)}, B={sorted(B)}")
        if F(A | B) < max(fa, fb) - tol:
            raise NotSubmodularError(f"monotonicity fails at A={sorted(A)}, B={sorted(B)}")


def _as_vector(F: SubmodularFn, w: ArrayLike, name: str = "w") -> NDArray[np.float64]:
    w = np.asarray(w, dtype=float)
    if w.shape != (F.p,):
        raise ValueError(f"{name} must have shape ({F.p},), got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{name} must be finite")
    return w


def _descending_order(w: NDArray[np.float64]) -> NDArray[np.intp]:
    # stable sort on -w: ties keep ascending index order
    return np.argsort(-w, kind="stable")


def lovasz_extension(F: SubmodularFn, w: ArrayLike) -> float:
    """Evaluate the Lovász extension ``f(w)`` with the greedy formula.

    Terms are accumulated left to right in the sorted order, so for
    ``F(A) = |A|`` and nonnegative ``w`` the result is bitwise the running
    sum of ``w`` sorted in decreasing order.
    """
    w = _as_vector(F, w)
    order = _descending_order(w)
    terms = (w[order] * F.gains(order)).tolist()
    total = 0.0
    for t in terms:
        total += t
    return total


def omega_inf(F: SubmodularFn, theta: ArrayLike) -> float:
    """The norm ``f(|theta|)``."""
    theta = _as_vector(F, theta, "theta")
    return lovasz_extension(F, np.abs(theta))


def dual_norm_bruteforce(F: SubmodularFn, s: ArrayLike) -> float:
    """``max_{A nonempty} |s|(A) / F(A)`` by exhaustive enumeration."""
    _check_cap(F.p, MAX_EXHAUSTIVE_P, "dual_norm_bruteforce", "estimate by sampling subsets instead")
    s = _as_vector(F, s, "s")
    sums = _subset_sums(np.abs(s))
    return float(np.max(sums[1:] / F.table()[1:]))


@dataclass(frozen=True)
class GreedyVertex:
    s: NDArray[np.float64]
    ordering: NDArray[np.intp]
    signs: NDArray[np.float64]
    value: float


def polytope_linmax(F: SubmodularFn, w: ArrayLike) -> GreedyVertex:
    """Maximise ``w^T s`` over ``|P|(F)`` with the signed greedy algorithm.

    Coordinates are visited by decreasing ``|w_j|`` (ties by index); each
    receives its marginal gain with the sign of ``w_j`` (``+`` when
    ``w_j == 0``).  The maximum value equals ``omega_inf(F, w)``.
    """
    w = _as_vector(F, w)
    a = np.abs(w)
    order = _descending_order(a)
    signs = np.where(w < 0, -1.0, 1.0)
    s = np.zeros(F.p)
    s[order] = signs[order] * F.gains(order) + 0.0
    return GreedyVertex(s=s, ordering=order, signs=signs, value=lovasz_extension(F, a))


def polytope_membership(F: SubmodularFn, s: ArrayLike, tol: float = MEMBERSHIP_TOL) -> bool:
    return max_violation(F, s) <= tol


def max_violation(F: SubmodularFn, s: ArrayLike) -> float:
    """``max_A |s|(A) - F(A)``; nonpositive exactly when ``s`` is in ``|P|(F)``."""
    _check_cap(F.p, MAX_EXHAUSTIVE_P, "polytope membership")
    s = _as_vector(F, s, "s")
    return float(np.max(_subset_sums(np.abs(s))[1:] - F.table()[1:]))


def enumerate_vertices(F: SubmodularFn) -> NDArray[np.float64]:
    """All signed greedy prefix points of ``|P|(F)``, deduplicated.

    For every ordering, prefix length and sign pattern this produces the
    point whose first ``k`` ordered coordinates carry the signed marginal
    gains and whose remaining coordinates are zero.  The origin is always
    included.  Rows are returned in lexicographic order.  Cost grows like
    ``p! * 2**p``, hence the cap ``p <= 8``.
    """
    _check_cap(F.p, MAX_ENUMERATION_P, "enumerate_vertices")
    p = F.p
    unsigned = []
    for perm in itertools.permutations(range(p)):
        order = np.array(perm)
        g = F.gains(order)
        v = np.zeros(p)
        unsigned.append(v.copy())
        for k in range(p):
            v[order[k]] = g[k]
            unsigned.append(v.copy())
    base = _dedup(np.array(unsigned))
    signed = []
    for v in base:
        support = np.flatnonzero(v)
        patterns = np.array(list(itertools.product((1.0, -1.0), repeat=len(support))))
        block = np.tile(v, (len(patterns), 1))
        if len(support):
            block[:, support] *= patterns
        signed.append(block)
    return _dedup(np.vstack(signed))


def _dedup(V: NDArray[np.float64], tol: float = DEDUP_TOL) -> NDArray[np.float64]:
    V = V[np.lexsort(V.T[::-1])]
    step = np.max(np.abs(np.diff(V, axis=0)), axis=1) > tol
    return V[np.concatenate([[True], step])]


def polytope_diameter(F: SubmodularFn, vertices: NDArray[np.float64] | None = None) -> float:
    """Euclidean diameter of ``|P|(F)``.

    The polytope is centrally symmetric, so the diameter is twice the
    largest vertex norm.  Cardinality-based functions use the full gain
    vector directly (gains are nonnegative, so the longest greedy point is
    the full prefix).
    """
    if vertices is None:
        if F.cardinality_based:
            return 2.0 * float(np.linalg.norm(np.diff(F.card_values)))
        vertices = enumerate_vertices(F)
    return 2.0 * float(np.max(np.linalg.norm(vertices, axis=1)))


@dataclass(frozen=True)
class WidthEstimate:
    mean: float
    std_error: float
    num_samples: int
    seed: int

    def scaled(self, c: float) -> "WidthEstimate":
        """Width of ``c * C`` for ``c >= 0`` (the width is positively homogeneous)."""
        return WidthEstimate(c * self.mean, c * self.std_error, self.num_samples, self.seed)


def support_values(F: SubmodularFn, B: NDArray[np.float64]) -> NDArray[np.float64]:
    """``f(|b|)`` for every row ``b`` of ``B``."""
    A = np.abs(B)
    if F.cardinality_based:
        return -np.sort(-A, axis=1) @ np.diff(F.card_values)
    return np.array([lovasz_extension(F, row) for row in A])


def gaussian_width_mc(F: SubmodularFn, num_samples: int, seed: int = 0) -> WidthEstimate:
    """Monte-Carlo estimate of ``E_b sup_{s in |P|(F)} b^T s`` with ``b ~ N(0, I)``.

    Samples are drawn in chunks of 65536 rows, chunk ``c`` from stream
    ``(seed, "gaussian_width", c)``, so the estimate does not depend on how
    the chunks are scheduled.
    """
    if num_samples < 2:
        raise ValueError("num_samples must be >= 2")
    vals = []
    for c, start in enumerate(range(0, num_samples, _WIDTH_CHUNK)):
        m = min(_WIDTH_CHUNK, num_samples - start)
        B = stream(seed, "gaussian_width", c).standard_normal((m, F.p))
        vals.append(support_values(F, B))
    v = np.concatenate(vals)
    return WidthEstimate(
        mean=float(v.mean()),
        std_error=float(v.std(ddof=1) / math.sqrt(num_samples)),
        num_samples=int(num_samples),
        seed=int(seed),
    )


def make_function(kind: str, p: int, **kw) -> SubmodularFn:
    """Build a named function: ``cardinality``, ``truncated`` (needs ``k``),
    ``sqrt`` (``g(k) = sqrt(k)``) or ``linf`` (``min(|A|, 1)``)."""
    if kind in ("cardinality", "l1"):
        return SubmodularFn.cardinality(p)
    if kind == "linf":
        return SubmodularFn.truncated_cardinality(p, 1)
    if kind == "truncated":
        return SubmodularFn.truncated_cardinality(p, int(kw.get("k", 2)))
    if kind == "sqrt":
        return SubmodularFn.concave_cardinality(p, math.sqrt)
    raise ValueError(
        f"unknown function kind {kind!r}; expected one of cardinality, linf, truncated, sqrt"
    )
