import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dpsubmod.submodular import (
    CapabilityError,
    NotSubmodularError,
    SubmodularFn,
    dual_norm_bruteforce,
    enumerate_vertices,
    gaussian_width_mc,
    lovasz_extension,
    make_function,
    max_violation,
    omega_inf,
    polytope_diameter,
    polytope_linmax,
    polytope_membership,
)

CARD2 = SubmodularFn.cardinality(2)
LINF2 = SubmodularFn.truncated_cardinality(2, 1)


def finite_vec(p, lo=-10.0, hi=10.0):
    return arrays(np.float64, p, elements=st.floats(lo, hi, allow_nan=False, allow_infinity=False))


FUNCS = ["cardinality", "linf", "truncated", "sqrt"]


# -- construction ---------------------------------------------------------


def test_rejects_nonzero_empty_set():
    with pytest.raises(ValueError, match="empty"):
        SubmodularFn.custom(2, lambda A: 1.0 + len(A))


def test_rejects_zero_singleton():
    with pytest.raises(ValueError):
        SubmodularFn.custom(2, lambda A: float(1 in A))


def test_rejects_supermodular():
    with pytest.raises(NotSubmodularError):
        SubmodularFn.custom(3, lambda A: float(len(A)) ** 2)


def test_rejects_decreasing():
    with pytest.raises(NotSubmodularError):
        SubmodularFn.custom(3, lambda A: [0.0, 2.0, 1.5, 1.0][len(A)])


def test_sampled_check_for_large_p():
    # p > 12 switches to sampling; a concave cardinality function must pass
    F = SubmodularFn.custom(14, lambda A: math.sqrt(len(A)), num_checks=200)
    assert F(range(14)) == pytest.approx(math.sqrt(14))


def test_concave_cardinality_validates_concavity():
    with pytest.raises(NotSubmodularError):
        SubmodularFn.concave_cardinality(3, lambda k: k**2)


@pytest.mark.parametrize("kind", FUNCS)
def test_named_functions_basic(kind):
    F = make_function(kind, 5)
    assert F([]) == 0.0
    assert all(F([j]) > 0 for j in range(5))


# -- Lovász extension ---------------------------------------------------------


@pytest.mark.parametrize(
    "F, w, expected",
    [
        (CARD2, [0.5, 0.2], 0.7),
        (LINF2, [0.5, 0.2], 0.5),
        (CARD2, [0.0, 0.0], 0.0),
        (LINF2, [0.0, 0.0], 0.0),
    ],
)
def test_lovasz_examples(F, w, expected):
    assert lovasz_extension(F, np.array(w)) == pytest.approx(expected, abs=1e-15)


def test_lovasz_rejects_nonfinite():
    with pytest.raises(ValueError):
        lovasz_extension(CARD2, np.array([np.nan, 1.0]))


def test_lovasz_matches_definition_for_custom():
    F = SubmodularFn.custom(3, lambda A: [0, 1.0, 1.7, 2.1][len(A)] + 0.1 * (0 in A))
    w = np.array([0.2, 0.9, -0.4])
    order = [1, 0, 2]
    expected = 0.0
    for k in range(3):
        expected += w[order[k]] * (F(order[: k + 1]) - F(order[:k]))
    assert lovasz_extension(F, w) == pytest.approx(expected, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(finite_vec(4, 0.0, 5.0), st.floats(0.0, 100.0))
def test_lovasz_positively_homogeneous(w, c):
    F = make_function("sqrt", 4)
    assert lovasz_extension(F, c * w) == pytest.approx(c * lovasz_extension(F, w), rel=1e-12, abs=1e-12)


# -- omega_inf norm -----------------------------------------------------------


@pytest.mark.parametrize(
    "F, theta, expected",
    [
        (SubmodularFn.cardinality(3), [1, -2, 3], 6.0),
        (SubmodularFn.truncated_cardinality(3, 1), [1, -2, 3], 3.0),
        (LINF2, [0.7, 0.7], 0.7),
        (LINF2, [4.0, 4.0], 4.0),
    ],
)
def test_omega_examples(F, theta, expected):
    assert omega_inf(F, np.array(theta, dtype=float)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("kind", FUNCS)
@settings(max_examples=40, deadline=None)
@given(a=finite_vec(5), b=finite_vec(5), c=st.floats(-50, 50))
def test_norm_axioms(kind, a, b, c):
    F = make_function(kind, 5)
    na, nb = omega_inf(F, a), omega_inf(F, b)
    assert na >= 0.0
    assert omega_inf(F, a + b) <= na + nb + 1e-12 * (1 + na + nb)
    assert omega_inf(F, c * a) == pytest.approx(abs(c) * na, rel=1e-12, abs=1e-12)
    if not np.any(a):
        assert na == 0.0
    else:
        assert na > 0.0


@settings(max_examples=40, deadline=None)
@given(u=finite_vec(4, 0.0, 3.0), d=finite_vec(4, 0.0, 3.0))
def test_monotone_and_subadditive_on_orthant(u, d):
    F = make_function("sqrt", 4)
    v = u + d
    assert lovasz_extension(F, u) <= lovasz_extension(F, v) + 1e-12
    assert lovasz_extension(F, u + v) <= lovasz_extension(F, u) + lovasz_extension(F, v) + 1e-12


# -- dual norm ------------------------------------------------------------------


@pytest.mark.parametrize(
    "F, s, expected",
    [
        (CARD2, [3, -1], 3.0),
        (LINF2, [3, -1], 4.0),
        (SubmodularFn.truncated_cardinality(3, 2), [2, 2, 1], 2.5),
    ],
)
def test_dual_norm_examples(F, s, expected):
    assert dual_norm_bruteforce(F, np.array(s, dtype=float)) == pytest.approx(expected)


def test_dual_norm_capability_cap():
    F = SubmodularFn.cardinality(25)
    with pytest.raises(CapabilityError, match="24"):
        dual_norm_bruteforce(F, np.ones(25))


@pytest.mark.parametrize("kind", FUNCS)
@settings(max_examples=40, deadline=None)
@given(theta=finite_vec(4), s=finite_vec(4))
def test_generalised_cauchy_schwarz(kind, theta, s):
    F = make_function(kind, 4)
    assert theta @ s <= omega_inf(F, theta) * dual_norm_bruteforce(F, s) + 1e-9 * (1 + abs(theta @ s))


@pytest.mark.parametrize("kind", FUNCS)
def test_cauchy_schwarz_tight_at_greedy_vertex(kind):
    F = make_function(kind, 5)
    rng = np.random.default_rng(3)
    for _ in range(50):
        theta = rng.standard_normal(5)
        s = polytope_linmax(F, theta).s
        assert theta @ s == pytest.approx(omega_inf(F, theta) * dual_norm_bruteforce(F, s), abs=1e-9)


# -- greedy vertices and membership ----------------------------------------


@pytest.mark.parametrize(
    "F, w, s_exp, value",
    [
        (CARD2, [0.5, -0.2], [1.0, -1.0], 0.7),
        (LINF2, [0.5, -0.2], [1.0, 0.0], 0.5),
        (LINF2, [0.0, 0.0], None, 0.0),
    ],
)
def test_linmax_examples(F, w, s_exp, value):
    g = polytope_linmax(F, np.array(w))
    assert g.value == pytest.approx(value)
    if s_exp is not None:
        np.testing.assert_array_equal(g.s, s_exp)


def test_linmax_tie_breaks_by_index():
    g = polytope_linmax(LINF2, np.array([1.0, 1.0]))
    np.testing.assert_array_equal(g.ordering, [0, 1])
    np.testing.assert_array_equal(g.s, [1.0, 0.0])


@pytest.mark.parametrize("kind", FUNCS)
def test_greedy_vertex_invariants(kind):
    F = make_function(kind, 6)
    rng = np.random.default_rng(0)
    for _ in range(30):
        w = rng.standard_normal(6)
        g = polytope_linmax(F, w)
        assert polytope_membership(F, g.s)
        assert w @ g.s == pytest.approx(lovasz_extension(F, np.abs(w)), abs=1e-12)


@pytest.mark.parametrize(
    "F, s, inside",
    [
        (CARD2, [1.0, -1.0], True),
        (CARD2, [1.1, 0.0], False),
        (LINF2, [0.6, 0.6], False),
        (LINF2, [0.5, -0.5], True),
    ],
)
def test_membership_examples(F, s, inside):
    assert polytope_membership(F, np.array(s)) is inside


def test_max_violation_reports_worst_set():
    assert max_violation(LINF2, np.array([0.6, 0.6])) == pytest.approx(0.2)


# -- vertex enumeration --------------------------------------------------------


def test_vertices_cardinality_p2():
    V = enumerate_vertices(CARD2)
    expected = {(a, b) for a in (-1.0, 0.0, 1.0) for b in (-1.0, 0.0, 1.0)}
    assert {tuple(v) for v in V} == expected


def test_vertices_linf_p2():
    V = enumerate_vertices(LINF2)
    assert {tuple(v) for v in V} == {(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (0.0, 0.0)}


@pytest.mark.parametrize("kind", FUNCS)
def test_vertices_p1(kind):
    F = make_function(kind, 1)
    f1 = F([0])
    assert sorted(enumerate_vertices(F)[:, 0].tolist()) == [-f1, 0.0, f1]


def test_vertices_linf_p4_count():
    assert len(enumerate_vertices(make_function("linf", 4))) == 9


@pytest.mark.parametrize("kind", FUNCS)
def test_vertices_in_polytope(kind):
    F = make_function(kind, 4)
    for v in enumerate_vertices(F):
        assert polytope_membership(F, v)


def test_enumeration_cap():
    with pytest.raises(CapabilityError, match="8"):
        enumerate_vertices(SubmodularFn.cardinality(9))


@pytest.mark.parametrize("kind, expected", [("cardinality", 2 * math.sqrt(5)), ("linf", 2.0)])
def test_diameter(kind, expected):
    F = make_function(kind, 5)
    assert polytope_diameter(F) == pytest.approx(expected)
    assert polytope_diameter(F, enumerate_vertices(F)) == pytest.approx(expected)


# -- Gaussian width ------------------------------------------------------------


def test_width_cardinality_p4():
    w = gaussian_width_mc(SubmodularFn.cardinality(4), 100_000, seed=0)
    assert w.mean == pytest.approx(4 * math.sqrt(2 / math.pi), rel=0.02)


def test_width_p1_is_half_normal_mean():
    F = SubmodularFn.custom(1, lambda A: 2.5 * len(A))
    w = gaussian_width_mc(F, 200_000, seed=1)
    assert abs(w.mean - 2.5 * math.sqrt(2 / math.pi)) < 4 * w.std_error


def test_width_is_bit_reproducible():
    F = make_function("sqrt", 6)
    a = gaussian_width_mc(F, 5000, seed=7)
    b = gaussian_width_mc(F, 5000, seed=7)
    assert a == b
    assert a.mean != gaussian_width_mc(F, 5000, seed=8).mean


def test_width_std_error_scaling():
    F = make_function("cardinality", 6)
    small = gaussian_width_mc(F, 10_000, seed=2)
    large = gaussian_width_mc(F, 40_000, seed=2)
    ratio = small.std_error / large.std_error
    assert ratio == pytest.approx(2.0, rel=0.2)


def test_width_needs_two_samples():
    with pytest.raises(ValueError):
        gaussian_width_mc(CARD2, 1, seed=0)


def test_width_scaled():
    w = gaussian_width_mc(CARD2, 1000, seed=0).scaled(0.5)
    assert w.mean == pytest.approx(0.5 * gaussian_width_mc(CARD2, 1000, seed=0).mean)
