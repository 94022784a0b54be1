"""Random expression generators and numeric oracles shared by the test modules."""
from __future__ import annotations

import itertools
import random

import numpy as np
from hypothesis import strategies as st
from numpy.polynomial import legendre
from numpy.polynomial import polynomial as P

from jetvar.bundle import SYMMETRIC2, BundleSpec
from jetvar.expr import (
    BASE,
    JET,
    ROOT,
    Expression,
    base_coord,
    evaluate_numeric,
    jet_var,
    root_atom,
)
from jetvar.jet import HorizontalForm, EvolutionaryField


def multi_indices(n: int, max_order: int):
    for k in range(max_order + 1):
        yield from itertools.combinations_with_replacement(range(1, n + 1), k)


def jet_atoms(bundle: BundleSpec, max_order: int):
    return [jet_var(name, comp, I) for name, comp in bundle.components()
            for I in multi_indices(bundle.n, max_order)]


def random_polynomial(rng: random.Random, bundle: BundleSpec, *, max_order: int = 2,
                      max_degree: int = 3, n_terms: int = 4, x_weight: float = 0.3) -> Expression:
    """Sum of ``n_terms`` random monomials with small nonzero integer coefficients."""
    atoms = jet_atoms(bundle, max_order)
    xs = [base_coord(i) for i in range(1, bundle.n + 1)]
    out = Expression()
    for _ in range(n_terms):
        term = Expression.constant(rng.choice([-3, -2, -1, 1, 2, 3]))
        for _ in range(rng.randint(1, max_degree)):
            pool = xs if rng.random() < x_weight else atoms
            term = term * Expression.from_atom(rng.choice(pool))
        out = out + term
    return out


def random_jet_dependent(rng, bundle, **kw) -> Expression:
    while True:
        e = random_polynomial(rng, bundle, **kw)
        if e.has_kind(JET):
            return e


def random_form(rng, bundle, **kw) -> HorizontalForm:
    return HorizontalForm(tuple(random_polynomial(rng, bundle, **kw)
                                for _ in range(bundle.n)))


def random_field(rng, bundle, **kw) -> EvolutionaryField:
    return EvolutionaryField(bundle, {k: random_polynomial(rng, bundle, **kw)
                                      for k in bundle.components()})


@st.composite
def polynomials(draw, bundle: BundleSpec, *, max_order: int = 2, max_terms: int = 4,
                max_degree: int = 3, roots: bool = False) -> Expression:
    """Hypothesis strategy for small polynomials, optionally with sqrtdet powers."""
    pool = jet_atoms(bundle, max_order) + [base_coord(i) for i in range(1, bundle.n + 1)]
    metrics = [f.name for f in bundle.fields if f.kind == SYMMETRIC2]
    out = Expression()
    for _ in range(draw(st.integers(0, max_terms))):
        term = Expression.constant(draw(st.fractions(-5, 5, max_denominator=4)))
        for a in draw(st.lists(st.sampled_from(pool), max_size=max_degree)):
            term = term * Expression.from_atom(a)
        if roots and metrics:
            k = draw(st.integers(-3, 3))
            if k:
                term = term * Expression.from_atom(root_atom(draw(st.sampled_from(metrics)),
                                                              bundle.n), k)
        out = out + term
    return out


# ---------------------------------------------------------------------------
# numeric oracle: first variation of the action by finite differences

class Section:
    """Polynomial section near a base point, stored as numpy power-series coefficient arrays.

    Coefficients are in local coordinates xi = x - origin, which keeps the
    monomial expansion well conditioned away from x = 0.
    """

    def __init__(self, bundle: BundleSpec, coeffs: dict, origin: np.ndarray):
        if bundle.n not in (1, 2):
            raise ValueError("numeric oracle supports n = 1, 2")
        self.bundle = bundle
        self.coeffs = coeffs
        self.origin = np.asarray(origin, dtype=float)

    def derivative(self, key, derivs) -> np.ndarray:
        c = self.coeffs[key]
        for i in derivs:
            c = P.polyder(c, axis=i - 1)
        return c

    def plus(self, other: Section, eps: float) -> Section:
        out = {}
        for k, c in self.coeffs.items():
            d = other.coeffs.get(k)
            if d is None:
                out[k] = c
            else:
                shape = tuple(max(a, b) for a, b in zip(c.shape, d.shape))
                cc = np.zeros(shape)
                cc[tuple(slice(0, s) for s in c.shape)] += c
                cc[tuple(slice(0, s) for s in d.shape)] += eps * d
                out[k] = cc
        return Section(self.bundle, out, self.origin)


def _evaluate_poly(c: np.ndarray, points: list[np.ndarray]) -> np.ndarray:
    if len(points) == 1:
        return P.polyval(points[0], c)
    return P.polyval2d(points[0], points[1], c)


def jet_assignment(e: Expression, section: Section, points: list[np.ndarray]) -> dict:
    """Values of every atom of ``e`` along the jet prolongation of ``section``.

    ``points`` are local coordinates relative to ``section.origin``.
    """
    values = {}
    for a in e.atoms():
        if a.kind == BASE:
            k = a.comp[0] - 1
            values[a] = section.origin[k] + points[k]
        elif a.kind == JET:
            values[a] = _evaluate_poly(section.derivative((a.name, a.comp), a.derivs), points)
    for a in e.atoms():
        if a.kind == ROOT:
            n = a.comp[0]
            mat = np.empty(points[0].shape + (n, n))
            for i in range(1, n + 1):
                for j in range(1, n + 1):
                    key = (a.name, (min(i, j), max(i, j)))
                    v = _evaluate_poly(section.coeffs[key], points)
                    mat[..., i - 1, j - 1] = v
                    values[jet_var(a.name, key[1])] = v
            values[a] = np.sqrt(np.linalg.det(mat))
    return values


def quadrature(n: int, radius: float, nodes: int):
    """Tensor Gauss-Legendre rule on the local box [-radius, radius]^n."""
    x, w = legendre.leggauss(nodes)
    grids = np.meshgrid(*([radius * x] * n), indexing="ij")
    weight = radius * w if n == 1 else np.outer(radius * w, radius * w)
    return [g.ravel() for g in grids], weight.ravel()


def integrate(e: Expression, section: Section, points, weights) -> float:
    values = evaluate_numeric(e, jet_assignment(e, section, points))
    return float(np.sum(weights * values))


def bump(n: int, radius: float, power: int = 4) -> np.ndarray:
    """prod_k (radius^2 - xi_k^2)^power / radius^(2 power), flat to high order on the box boundary."""
    f = P.polypow([1.0, 0.0, -1.0 / radius ** 2], power)
    return f if n == 1 else np.outer(f, f)


def action_derivative(L: Expression, section: Section, variation: Section, points, weights,
                      h: float = 1e-2) -> float:
    """d/de of the quadrature action at e = 0 by a fourth-order central difference."""
    S = lambda eps: integrate(L, section.plus(variation, eps), points, weights)  # noqa: E731
    return (8 * (S(h) - S(-h)) - (S(2 * h) - S(-2 * h))) / (12 * h)


def random_trial(rng: np.random.Generator, bundle: BundleSpec, *, degree: int = 3,
                 radius: float = 0.3, metric_scale: float = 0.2):
    """Random section around a random base point and a variation supported near it."""
    n = bundle.n
    origin = rng.uniform(-1, 1, size=n)
    shape = (degree + 1,) * n
    coeffs, var = {}, {}
    for name, comp in bundle.components():
        if bundle.field(name).kind == SYMMETRIC2:
            # identity plus a small perturbation keeps g positive definite on the box
            c = rng.uniform(-metric_scale, metric_scale, size=shape)
            if comp[0] == comp[1]:
                c[(0,) * n] += 1.0
            coeffs[(name, comp)] = c
        else:
            coeffs[(name, comp)] = rng.uniform(-1, 1, size=shape)
        var[(name, comp)] = bump(n, radius) * rng.uniform(-1, 1)
    return Section(bundle, coeffs, origin), Section(bundle, var, origin), radius


def source_pairing(E, section: Section, variation: Section, points, weights) -> float:
    """Quadrature of sum_a E_a * eta^a for a source equation E and variation eta."""
    total = 0.0
    for key, Ek in E.items():
        if Ek.is_zero:
            continue
        values = evaluate_numeric(Ek, jet_assignment(Ek, section, points))
        eta = _evaluate_poly(variation.coeffs[key], points)
        total += float(np.sum(weights * values * eta))
    return total


def variation_defect(L: Expression, E, rng: np.random.Generator, *, nodes: int = 24) -> float:
    """|dS/de - integral E.eta| for one random section and compactly supported variation."""
    section, variation, radius = random_trial(rng, E.bundle)
    points, weights = quadrature(E.bundle.n, radius, nodes)
    return abs(action_derivative(L, section, variation, points, weights)
               - source_pairing(E, section, variation, points, weights))
