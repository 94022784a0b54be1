from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import polynomials
from jetvar.bundle import COVECTOR, SCALAR, SYMMETRIC2, BundleSpec
from jetvar.errors import ExpressionClassError, OrderBoundExceeded, ParseError
from jetvar.expr import (
    Expression,
    adjugate_expression,
    base_coord,
    definite_integral_unit,
    det_expression,
    evaluate_numeric,
    is_zero,
    jet_var,
    parameter,
    partial_derivative,
    root_atom,
    total_derivative,
)

B1 = BundleSpec.of(1, ("u", SCALAR), ("g", SYMMETRIC2))
B2 = BundleSpec.of(2, ("u", SCALAR), ("g", SYMMETRIC2), ("A", COVECTOR))
U1 = jet_var("u", (), (1,))
S1 = root_atom("g", 1)
S2 = root_atom("g", 2)


def e(text, bundle=B1):
    return bundle.parse(text)


# --- parsing -----------------------------------------------------------------

def test_parse_half_square():
    assert e("u[;1]^2 / 2") == Expression.from_atom(U1, 2) * Fraction(1, 2)
    assert str(e("u[;1]^2 / 2")) == "1/2*u[;1]^2"


def test_parse_det_two_by_two():
    assert str(e("det(g)", B2)) == "g[1,1]*g[2,2] - g[1,2]^2"


def test_parse_sqrtdet_inverse():
    assert e("sqrtdet(g)^-1") == Expression.from_atom(S1, -1)


def test_parse_det_half_integer_power_is_root():
    assert e("det(g)^(3/2)", B2) == Expression.from_atom(S2, 3)


def test_parse_inverse_metric_is_adjugate_over_det():
    assert e("inv(g)[1,2]", B2) == e("-g[1,2]", B2) * Expression.from_atom(S2, -2)
    assert e("inv(g)[1,1]*det(g)", B2) == e("g[2,2]", B2)


def test_parse_symmetric_components_are_identified():
    assert e("g[2,1;1]", B2) == e("g[1,2;1]", B2)
    assert e("u[;2,1]", B2) == e("u[;1,2]", B2)


@pytest.mark.parametrize("text, position", [
    ("u[;1", 4),
    ("w[]", 0),
    ("u[;3]", 3),
    ("g[1,3]", 4),
    ("u[;1,0]", 5),
    ("2**3", 2),
    ("u[] +", 5),
    ("u[;1]/(u[]+1)", 5),
    ("u[]^(1/2)", 4),
])
def test_parse_errors_report_position(text, position):
    with pytest.raises(ParseError) as info:
        e(text)
    assert info.value.position == position


def test_parse_rejects_order_above_bound():
    with pytest.raises(ParseError, match="bound"):
        e("u[;1,1,1,1,1,1,1,1,1]")
    assert e("u[;1,1,1,1,1,1,1,1,1]", B1.with_order_bound(9)).jet_order() == 9


def test_parse_covector_component_arity():
    with pytest.raises(ParseError):
        e("A[1,2]", B2)
    with pytest.raises(ParseError):
        e("u[1]", B2)


# --- zero testing ------------------------------------------------------------

def test_is_zero_ring_identity():
    assert is_zero(e("(u[;1] + u[;1]) - 2*u[;1]"))


def test_is_zero_root_relation():
    assert is_zero(e("sqrtdet(g)^2 - det(g)", B2))


def test_is_zero_distinct_atoms():
    assert not is_zero(e("u[;1] - u[;2]", B2))


def test_root_times_inverse_is_one():
    s = Expression.from_atom(S2)
    assert s * s.reciprocal() == Expression.constant(1)
    assert (s ** 3) * Expression.from_atom(S2, -3) == Expression.constant(1)


def test_division_by_polynomial_rejected():
    with pytest.raises(ExpressionClassError):
        e("u[;1]") / e("u[]")


# --- partial derivatives -----------------------------------------------------

def test_partial_power_rule():
    assert partial_derivative(e("u[;1]^2"), U1) == e("2*u[;1]")


def test_partial_of_coordinate_product():
    assert partial_derivative(e("x[1]*u[]"), jet_var("u")) == Expression.from_atom(base_coord(1))


def test_partial_of_root_is_implicit():
    assert partial_derivative(e("sqrtdet(g)"), jet_var("g", (1, 1))) == \
        Expression.from_atom(S1, -1) * Fraction(1, 2)


def test_partial_of_root_two_dimensional():
    # d sqrt(det) / d g_ab = 1/2 sqrt(det) * adj_ab / det, off-diagonal counted twice
    s = Expression.from_atom(S2)
    got = partial_derivative(s, jet_var("g", (1, 2)))
    assert got == s * Expression.from_atom(S2, -2) * e("-g[1,2]", B2)


def test_partial_with_respect_to_root_rejected():
    with pytest.raises(ExpressionClassError):
        partial_derivative(e("sqrtdet(g)"), S1)


# --- total derivatives -------------------------------------------------------

def test_total_derivative_of_coordinate():
    assert total_derivative(e("x[1]"), 1) == Expression.constant(1)


def test_total_derivative_chain_rule():
    assert total_derivative(e("u[;1]^2"), 1) == e("2*u[;1]*u[;1,1]")


def test_total_derivative_of_root():
    assert total_derivative(e("sqrtdet(g)"), 1) == e("1/2*sqrtdet(g)^-1*g[1,1;1]")


def test_total_derivative_order_bound():
    top = e("u[;1,1,1,1,1,1,1,1]")
    with pytest.raises(OrderBoundExceeded):
        total_derivative(top, 1)
    assert total_derivative(top, 1, order_bound=9).jet_order() == 9


def test_total_derivative_of_root_matches_finite_difference():
    # g_11 = 2 + sin(x) along a path; d/dx sqrt(g_11) by central differences
    x0, h = 0.3, 1e-5
    g = lambda x: 2 + np.sin(x)  # noqa: E731
    fd = (np.sqrt(g(x0 + h)) - np.sqrt(g(x0 - h))) / (2 * h)
    expr = total_derivative(e("sqrtdet(g)"), 1)
    value = evaluate_numeric(expr, {jet_var("g", (1, 1)): g(x0), S1: np.sqrt(g(x0)),
                                    jet_var("g", (1, 1), (1,)): np.cos(x0)})
    assert value == pytest.approx(fd, abs=1e-8)


# --- numeric evaluation ------------------------------------------------------

def test_evaluate_examples():
    assert evaluate_numeric(e("1/2*u[;1]^2"), {U1: 3.0}) == pytest.approx(4.5)
    assert evaluate_numeric(e("x[1]*u[]"), {base_coord(1): 2.0, jet_var("u"): -1.0}) == -2
    assert evaluate_numeric(e("sqrtdet(g)^-1"),
                            {jet_var("g", (1, 1)): 4.0, S1: 2.0}) == pytest.approx(0.5)


def test_evaluate_missing_atom():
    with pytest.raises(KeyError):
        evaluate_numeric(e("u[]"), {})


def test_evaluate_inconsistent_root():
    with pytest.raises(ValueError):
        evaluate_numeric(e("sqrtdet(g)"), {jet_var("g", (1, 1)): 4.0, S1: 3.0})
    with pytest.raises(ValueError):
        evaluate_numeric(e("sqrtdet(g)"), {jet_var("g", (1, 1)): 4.0, S1: -2.0})


# --- definite integral in the homotopy parameter -----------------------------

def test_definite_integral_examples():
    t = Expression.from_atom(parameter("t"))
    assert definite_integral_unit(t * e("u[]*u[;1,1]"), parameter("t")) == e("1/2*u[]*u[;1,1]")
    assert definite_integral_unit(e("u[]"), parameter("t")) == e("u[]")
    assert definite_integral_unit(t ** 2 * e("u[]^3"), parameter("t")) == e("1/3*u[]^3")


def test_definite_integral_rejects_negative_power():
    t = parameter("t")
    with pytest.raises(ExpressionClassError):
        definite_integral_unit(Expression.from_atom(t, -1), t)


# --- determinant helpers -----------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_adjugate_times_metric_is_det_identity(n):
    bundle = BundleSpec.of(n, ("g", SYMMETRIC2))
    det = det_expression("g", n)
    for a in range(1, n + 1):
        for c in range(1, n + 1):
            total = Expression()
            for b in range(1, n + 1):
                total = total + adjugate_expression("g", n, a, b) * bundle.jet("g", (b, c))
            assert total == (det if a == c else Expression())


# --- properties --------------------------------------------------------------

poly1 = polynomials(B1, roots=True)
poly2 = polynomials(B2, roots=True)


@given(poly2, poly2, poly2)
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a - a).is_zero


@given(poly2)
def test_print_parse_roundtrip(a):
    assert B2.parse(str(a)) == a


@given(poly2)
def test_equal_expressions_hash_equal(a):
    b = B2.parse(str(a))
    assert hash(a) == hash(b)


@given(poly2, poly2, st.sampled_from([jet_var("u"), jet_var("g", (1, 2)), jet_var("u", (), (1, 2)),
                                      jet_var("A", (1,), (2,))]))
def test_partial_leibniz(a, b, atom):
    lhs = partial_derivative(a * b, atom)
    assert lhs == partial_derivative(a, atom) * b + a * partial_derivative(b, atom)


@given(poly2, poly2, st.sampled_from([1, 2]))
def test_total_derivative_leibniz(a, b, i):
    lhs = total_derivative(a * b, i)
    assert lhs == total_derivative(a, i) * b + a * total_derivative(b, i)


@given(poly2)
def test_total_derivatives_commute(a):
    assert total_derivative(total_derivative(a, 1), 2) == total_derivative(total_derivative(a, 2), 1)


@settings(max_examples=50)
@given(poly2, poly2, st.integers(0, 2 ** 32 - 1))
def test_evaluation_is_a_ring_homomorphism(a, b, seed):
    rng = np.random.default_rng(seed)
    values = {}
    for atom in a.atoms() | b.atoms():
        values[atom] = rng.uniform(-1, 1)
    # a positive-definite metric and its consistent root
    g11, g22, g12 = 1 + rng.uniform(0, 1), 1 + rng.uniform(0, 1), rng.uniform(-0.5, 0.5)
    values.update({jet_var("g", (1, 1)): g11, jet_var("g", (2, 2)): g22,
                   jet_var("g", (1, 2)): g12, S2: np.sqrt(g11 * g22 - g12 ** 2)})
    ev = lambda x: evaluate_numeric(x, values)  # noqa: E731
    assert ev(a * b) == pytest.approx(ev(a) * ev(b), rel=1e-9, abs=1e-9)
    assert ev(a + b) == pytest.approx(ev(a) + ev(b), rel=1e-9, abs=1e-9)


@given(poly1, st.integers(-4, 4))
def test_root_powers_reduce_consistently(a, k):
    # n = 1: sqrtdet(g)^2 = g[1,1]
    s = Expression.from_atom(S1)
    g11 = Expression.from_atom(jet_var("g", (1, 1)))
    if k >= 0:
        assert a * s ** (2 * k) == a * g11 ** k
    else:
        assert a * s ** (2 * k) * g11 ** (-k) == a
