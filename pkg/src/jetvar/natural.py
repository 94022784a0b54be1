"""Natural lifts of base vector fields and the generalized divergence.

A base vector field D = D^k d/dx^k is represented by formal aux atoms
``aux[k;J]`` standing for the derivatives of its components.  Its lift to a
tensor bundle has vertical part Delta(D) = -L_D(section); the generalized
divergence is the Euler operator, with respect to D, of T(Delta(D)).
"""
from __future__ import annotations

from dataclasses import dataclass

from .bundle import COVECTOR, SCALAR, SYMMETRIC2, BundleSpec
from .errors import InvariantViolation
from .expr import AUX, Expression, aux_var, partial_derivative
from .jet import ZERO, Density, EvolutionaryField, SourceEquation, horizontal_differential
from .variational import euler_lagrange, euler_operator_aux, integrate_by_parts, source_apply


@dataclass(frozen=True)
class DivergenceCovector:
    """Densities (Div T)_i with Div T(D) = sum_i (Div T)_i D^i."""

    comps: tuple[Expression, ...]

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.comps)

    def __getitem__(self, i: int) -> Expression:
        return self.comps[i - 1]

    def pair(self) -> Expression:
        """sum_i (Div T)_i * aux[i]"""
        out = ZERO
        for i, c in enumerate(self.comps, start=1):
            out = out + c * Expression.from_atom(aux_var(i))
        return out

    def as_text(self) -> list[str]:
        return [f"Div[{i}] = {c}" for i, c in enumerate(self.comps, start=1)]


def _D(k: int, *derivs: int) -> Expression:
    return Expression.from_atom(aux_var(k, derivs))


def delta_lift(bundle: BundleSpec, sign: int = -1) -> EvolutionaryField:
    """Vertical part of the canonical lift of a generic base field D.

    ``sign=-1`` gives Delta(D) = -L_D(section), the convention used throughout.
    """
    n = bundle.n
    ks = range(1, n + 1)
    comps = {}
    for f in bundle.fields:
        for comp in bundle.field_components(f.name):
            jet = lambda c, *d: bundle.jet(f.name, c, d)  # noqa: E731
            transport = sum((_D(k) * jet(comp, k) for k in ks), ZERO)
            if f.kind == SCALAR:
                lie = transport
            elif f.kind == COVECTOR:
                (a,) = comp
                lie = transport + sum((jet((k,)) * _D(k, a) for k in ks), ZERO)
            elif f.kind == SYMMETRIC2:
                a, b = comp
                lie = transport + sum((jet((k, b)) * _D(k, a) + jet((a, k)) * _D(k, b)
                                       for k in ks), ZERO)
            else:
                raise ValueError(f"no natural lift for field kind {f.kind!r}")
            comps[(f.name, comp)] = lie * sign
    return EvolutionaryField(bundle, comps)


def _aux_linear_coefficients(P: Expression) -> dict:
    coeffs = {}
    for a in sorted(P.atoms()):
        if a.kind == AUX:
            coeffs[(a.comp[0], a.derivs)] = partial_derivative(P, a)
    return coeffs


def generalized_divergence(T: SourceEquation, bundle: BundleSpec | None = None,
                           *, sign: int = -1) -> DivergenceCovector:
    """Div T, the canonical part of T(Delta(D)) after stripping total divergences.

    The residual T(Delta(D)) - Div T(D) is rebuilt as an explicit total
    divergence d_h Pi(D) by integration by parts; a nonzero remainder raises
    InvariantViolation.
    """
    bundle = bundle or T.bundle
    P = source_apply(T, delta_lift(bundle, sign)).coeff
    div = DivergenceCovector(euler_operator_aux(Density(P), bundle.n,
                                                order_bound=bundle.order_bound))
    # realize Pi: P is linear in the aux atoms, so peeling derivatives off them works
    coeffs = _aux_linear_coefficients(P)
    if any(c.has_kind(AUX) for c in coeffs.values()):
        raise InvariantViolation("T(Delta(D)) is not linear in the base vector field")
    _, pi = integrate_by_parts(coeffs, lambda k, J: _D(k, *J), bundle.n, bundle.order_bound)
    residual = P - div.pair() - horizontal_differential(pi, order_bound=bundle.order_bound).coeff
    if not residual.is_zero:
        raise InvariantViolation("T(Delta(D)) - Div T(D) is not a total divergence", residual)
    return div


def naturality_defect(T: SourceEquation, bundle: BundleSpec | None = None) -> SourceEquation:
    """L_{Delta(D)} T computed directly as E(T(Delta(D))), aux atoms kept symbolic."""
    bundle = bundle or T.bundle
    return euler_lagrange(source_apply(T, delta_lift(bundle)), bundle)


def is_natural(T: SourceEquation, bundle: BundleSpec | None = None, *,
               cross_check: bool = True) -> bool:
    """Noether II verdict for a locally variational T: natural iff Div T = 0.

    With ``cross_check`` the verdict is compared against the direct criterion
    L_{Delta(D)} T = 0; a disagreement means T was not locally variational (or
    an internal error) and raises InvariantViolation.
    """
    bundle = bundle or T.bundle
    verdict = generalized_divergence(T, bundle).is_zero
    if cross_check:
        direct = naturality_defect(T, bundle).is_zero
        if direct != verdict:
            raise InvariantViolation(
                f"Div T = 0 is {verdict} but L_Delta(D) T = 0 is {direct}; "
                "is the source equation locally variational?")
    return verdict

