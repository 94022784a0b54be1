"""Euler-Lagrange operator, first variation, inverse problem and conservation laws."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Hashable

from .bundle import BundleSpec
from .cancel import checkpoint
from .errors import ExpressionClassError, ExtractionError
from .expr import (
    AUX,
    BASE,
    DEFAULT_ORDER_BOUND,
    JET,
    PARAM,
    ROOT,
    Expression,
    aux_var,
    base_coord,
    definite_integral_unit,
    parameter,
    partial_derivative,
    total_derivative,
)
from .jet import (
    ZERO,
    Density,
    EvolutionaryField,
    HorizontalForm,
    SourceEquation,
    _DerivativeTable,
    component_atom,
    horizontal_differential,
    jet_atoms_by_component,
    total_derivative_multi,
)

_T = parameter("t")


@dataclass(frozen=True)
class FirstVariationResult:
    source_times_V: Density
    current: HorizontalForm


def _sign(index: tuple) -> int:
    return -1 if len(index) % 2 else 1


def euler_lagrange(L: Density, bundle: BundleSpec) -> SourceEquation:
    """T_a = sum_I (-1)^|I| D_I (dL/dy^a_I), summed over sorted multi-indices."""
    comps = {}
    present = jet_atoms_by_component(L.coeff, bundle)
    for key in bundle.components():
        total = ZERO
        for index in sorted(present.get(key, {()}) | {()}):
            checkpoint()
            p = partial_derivative(L.coeff, component_atom(key, index))
            if p.is_zero:
                continue
            term = total_derivative_multi(p, index, order_bound=bundle.order_bound)
            total = total + term * _sign(index)
        comps[key] = total
    return SourceEquation(bundle, comps)


def _aux_indices(e: Expression, n: int) -> dict[int, set[tuple]]:
    found: dict[int, set[tuple]] = {i: {()} for i in range(1, n + 1)}
    for a in e.atoms():
        if a.kind == AUX:
            found.setdefault(a.comp[0], set()).add(a.derivs)
    return found


def euler_operator_aux(P: Density, n: int, *,
                       order_bound: int = DEFAULT_ORDER_BOUND) -> tuple[Expression, ...]:
    """Euler operator with respect to the formal vector-field components D^i."""
    out = []
    for i, indices in sorted(_aux_indices(P.coeff, n).items()):
        total = ZERO
        for index in sorted(indices):
            checkpoint()
            p = partial_derivative(P.coeff, aux_var(i, index))
            if p.is_zero:
                continue
            total = total + total_derivative_multi(p, index, order_bound=order_bound) * _sign(index)
        out.append(total)
    return tuple(out)


def integrate_by_parts(coeffs: dict[tuple[Hashable, tuple], Expression],
                       variation: Callable[[Hashable, tuple], Expression],
                       n: int, order_bound: int) -> tuple[dict, HorizontalForm]:
    """Rewrite sum A_{k,I} * D_I(v_k) as sum B_k * v_k + sum_i D_i omega^i.

    ``coeffs`` maps (key, I) to A_{k,I}; ``variation(key, J)`` returns D_J(v_k).
    Terms are processed from the longest, lexicographically largest multi-index
    down; each step peels the largest base index i off I = J + (i,) using
    A D_I v = D_i(A D_J v) - D_i(A) D_J v.
    """
    pending = {k: v for k, v in coeffs.items() if not v.is_zero}
    omega = [ZERO] * n
    base: dict = {}
    while pending:
        checkpoint()
        key, index = max(pending, key=lambda k: (len(k[1]), k[1], k[0]))
        A = pending.pop((key, index))
        if A.is_zero:
            continue
        if not index:
            base[key] = base.get(key, ZERO) + A
            continue
        i, rest = index[-1], index[:-1]
        omega[i - 1] = omega[i - 1] + variation(key, rest) * A
        pending[(key, rest)] = pending.get((key, rest), ZERO) - total_derivative(
            A, i, order_bound=order_bound)
    return base, HorizontalForm(tuple(omega))


def first_variation(L: Density, V: EvolutionaryField) -> FirstVariationResult:
    """Split pr(V)L into sum_a E(L)_a V^a plus the total divergence of i_V Theta."""
    bundle = V.bundle
    coeffs = {}
    for key, indices in jet_atoms_by_component(L.coeff, bundle).items():
        for index in indices:
            coeffs[(key, index)] = partial_derivative(L.coeff, component_atom(key, index))
    tables = {key: _DerivativeTable(v, bundle.order_bound) for key, v in V.items()}
    base, current = integrate_by_parts(coeffs, lambda key, J: tables[key](J), bundle.n,
                                       bundle.order_bound)
    source = ZERO
    for key, A in base.items():
        source = source + A * V.comps[key]
    return FirstVariationResult(Density(source), current)


def source_apply(T: SourceEquation, V: EvolutionaryField) -> Density:
    T._check(V)
    out = ZERO
    for key, t in T.items():
        v = V.comps[key]
        if not t.is_zero and not v.is_zero:
            out = out + t * v
    return Density(out)


def _scale_fiber(e: Expression, t: Expression) -> Expression:
    """Substitute y -> t*y in every jet variable of the bundle fiber."""
    def scale(m, c):
        degree = sum(x for a, x in m if a.kind == JET)
        return {m: c} if degree == 0 else {m + ((_T, degree),): c}
    return e.map_monomials(scale)


def _check_polynomial_fiber(e: Expression, what: str) -> None:
    for a in e.atoms():
        if a.kind == ROOT:
            raise ExpressionClassError(f"{what} contains {a}; the fiber homotopy needs polynomials")
        if a.kind in (AUX, PARAM):
            raise ExpressionClassError(f"{what} contains the non-fiber atom {a}")


def tonti_lagrangian(T: SourceEquation) -> Density:
    """L = integral over t in [0,1] of sum_a y^a T_a(x, t y) dt."""
    integrand = ZERO
    for key, t in T.items():
        _check_polynomial_fiber(t, "source equation")
        if t.is_zero:
            continue
        integrand = integrand + Expression.from_atom(component_atom(key, ())) * _scale_fiber(t, _T)
    return Density(definite_integral_unit(integrand, _T))


def is_locally_variational(T: SourceEquation) -> bool:
    L = tonti_lagrangian(T)
    return (euler_lagrange(L, T.bundle) - T).is_zero


def is_null_lagrangian(L: Density, bundle: BundleSpec) -> bool:
    return euler_lagrange(L, bundle).is_zero


def lie_derivative_source(V: EvolutionaryField, T: SourceEquation) -> SourceEquation:
    """Lie derivative of a locally variational source along pr(V), as E(T(V))."""
    return euler_lagrange(source_apply(T, V), T.bundle)


def is_symmetry(V: EvolutionaryField, T: SourceEquation) -> bool:
    return lie_derivative_source(V, T).is_zero


def _antiderivative_x1(e: Expression) -> Expression:
    x1 = base_coord(1)

    def integrate(m, c):
        for idx, (a, x) in enumerate(m):
            if a == x1:
                return {m[:idx] + ((a, x + 1),) + m[idx + 1:]: c / (x + 1)}
        return {tuple(sorted(m + ((x1, 1),))): c}
    return e.map_monomials(integrate)


def total_divergence_potential(P: Density, bundle: BundleSpec) -> HorizontalForm:
    """An (n-1,0)-form omega with d_h omega = P, for P polynomial with E(P) = 0.

    Uses the fiber homotopy d/dt P(x, t y) = sum_I y_I (dP/dy_I)(x, t y): the
    integration-by-parts engine moves every derivative off y_I, the Euler part
    vanishes, and integrating the boundary terms over t in [0, 1] gives omega up
    to the part of P at y = 0, which depends on x only and is integrated in x^1.
    Raises ExtractionError with the residual when P is not a total divergence.
    """
    e = P.coeff
    _check_polynomial_fiber(e, "density")
    coeffs = {}
    for key, indices in jet_atoms_by_component(e, bundle).items():
        for index in indices:
            dP = partial_derivative(e, component_atom(key, index))
            coeffs[(key, index)] = _scale_fiber(dP, _T)
    _, omega_t = integrate_by_parts(
        coeffs, lambda key, J: Expression.from_atom(component_atom(key, J)),
        bundle.n, bundle.order_bound)
    comps = [definite_integral_unit(w, _T) for w in omega_t.comps]
    base_part = e.select(lambda m: all(a.kind == BASE for a, _ in m))
    comps[0] = comps[0] + _antiderivative_x1(base_part)
    omega = HorizontalForm(tuple(comps))
    residual = e - horizontal_differential(omega, order_bound=bundle.order_bound).coeff
    if not residual.is_zero:
        raise ExtractionError("density is not a total divergence", residual)
    return omega


def conserved_current(V: EvolutionaryField, T: SourceEquation) -> HorizontalForm:
    """omega with d_h omega = T(V) exactly (Noether's first theorem)."""
    return total_divergence_potential(source_apply(T, V), T.bundle)


def base_multi_indices(n: int, max_order: int):
    for k in range(max_order + 1):
        yield from itertools.combinations_with_replacement(range(1, n + 1), k)


def base_monomial_witness(L: Density, bundle: BundleSpec) -> tuple[int, ...] | None:
    """A multi-index K with E(x^K L) != 0, searched up to the jet order of L.

    A density whose coefficient genuinely depends on jet variables cannot stay
    in the kernel of E under multiplication by every base function; this returns
    the first monomial x^K exhibiting that, or None if L is jet-free.
    """
    for K in base_multi_indices(bundle.n, L.coeff.jet_order()):
        xK = Expression.constant(1)
        for k in K:
            xK = xK * Expression.from_atom(base_coord(k))
        if not euler_lagrange(Density(xK * L.coeff), bundle).is_zero:
            return K
    return None
