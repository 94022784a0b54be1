"""Built-in models and an independent covariant-calculus oracle.

The Riemannian helpers here (inverse metric, Christoffel symbols, curvature,
covariant divergence) are written directly from their textbook definitions and
share no code with the Euler operator in :mod:`jetvar.variational`; tests use
them to check the generalized divergence from the outside.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .bundle import COVECTOR, SCALAR, SYMMETRIC2, BundleSpec
from .expr import Expression, adjugate_expression, root_atom, total_derivative
from .jet import ZERO, Density, EvolutionaryField, SourceEquation
from .variational import euler_lagrange

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Model:
    name: str
    bundle: BundleSpec
    lagrangian: Density | None = None
    source: SourceEquation | None = None
    known_symmetries: dict[str, EvolutionaryField] = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self):
        if self.lagrangian is None and self.source is None:
            raise ValueError(f"model {self.name!r} needs a lagrangian or a source")
        if self.lagrangian is not None and self.source is not None:
            el = euler_lagrange(self.lagrangian, self.bundle)
            if el != self.source:
                raise ValueError(f"model {self.name!r}: source differs from E(lagrangian)")

    def source_equation(self) -> SourceEquation:
        if self.source is not None:
            return self.source
        return euler_lagrange(self.lagrangian, self.bundle)


# ---------------------------------------------------------------------------
# Riemannian helpers in jet variables

class Geometry:
    """Metric quantities of the section g of a symmetric2 field, as jet expressions."""

    def __init__(self, bundle: BundleSpec, metric: str):
        if bundle.field(metric).kind != SYMMETRIC2:
            raise ValueError(f"{metric!r} is not a symmetric2 field")
        self.bundle = bundle
        self.metric = metric
        self.n = bundle.n
        self.sqrtdet = Expression.from_atom(root_atom(metric, self.n))
        self._inv = {}
        self._gamma = {}

    def g(self, a: int, b: int, *derivs: int) -> Expression:
        return self.bundle.jet(self.metric, (a, b), derivs)

    def inv(self, a: int, b: int) -> Expression:
        key = (min(a, b), max(a, b))
        if key not in self._inv:
            self._inv[key] = adjugate_expression(self.metric, self.n, a, b) * self.sqrtdet ** -2
        return self._inv[key]

    def D(self, e: Expression, i: int) -> Expression:
        return total_derivative(e, i, order_bound=self.bundle.order_bound)

    def christoffel(self, c: int, a: int, b: int) -> Expression:
        """Gamma^c_{ab} = 1/2 g^{ck} (g_{ka,b} + g_{kb,a} - g_{ab,k})"""
        key = (c, min(a, b), max(a, b))
        if key not in self._gamma:
            out = ZERO
            for k in range(1, self.n + 1):
                out = out + self.inv(c, k) * (self.g(k, a, b) + self.g(k, b, a) - self.g(a, b, k))
            self._gamma[key] = out * HALF
        return self._gamma[key]

    def ricci(self, a: int, b: int) -> Expression:
        """R_ab = d_c G^c_ab - d_b G^c_ac + G^c_cd G^d_ab - G^c_bd G^d_ac"""
        r = range(1, self.n + 1)
        out = ZERO
        for c in r:
            out = out + self.D(self.christoffel(c, a, b), c) - self.D(self.christoffel(c, a, c), b)
            for d in r:
                out = out + (self.christoffel(c, c, d) * self.christoffel(d, a, b)
                             - self.christoffel(c, b, d) * self.christoffel(d, a, c))
        return out

    def scalar_curvature(self) -> Expression:
        r = range(1, self.n + 1)
        out = ZERO
        for a in r:
            for b in r:
                out = out + self.inv(a, b) * self.ricci(a, b)
        return out


def full_symmetric_source(T: SourceEquation, metric: str) -> list[list[Expression]]:
    """Full tensor T^{ab} from independent components (off-diagonals halved)."""
    n = T.bundle.n
    full = [[ZERO] * n for _ in range(n)]
    for a in range(1, n + 1):
        for b in range(a, n + 1):
            v = T.comps[(metric, (a, b))]
            if a != b:
                v = v * HALF
            full[a - 1][b - 1] = full[b - 1][a - 1] = v
    return full


def covariant_divergence_oracle(bundle: BundleSpec, T: SourceEquation, metric: str | None = None,
                                potential: str | None = None) -> tuple[Expression, ...]:
    """div_g T (+ i_J dA + (div_g J) A on the product with a covector bundle).

    T^{ab} and J^a are densities, so (div_g T)_k = 2 g_{kb} (d_a T^{ab} + Gamma^b_{ac} T^{ac})
    and div_g J = d_a J^a.  The normalization matches Div T(D) = sum_k (Div T)_k D^k.
    """
    if metric is None:
        metric = next((f.name for f in bundle.fields if f.kind == SYMMETRIC2), None)
        if metric is None:
            raise ValueError("the oracle needs a metric (symmetric2) field")
    if potential is None:
        potential = next((f.name for f in bundle.fields if f.kind == COVECTOR), None)
    for f in bundle.fields:
        if f.name not in (metric, potential):
            if any(not T.comps[(f.name, c)].is_zero for c in bundle.field_components(f.name)):
                raise ValueError(f"oracle does not cover nonzero sources for field {f.name!r}")
    if bundle.n > 3:
        raise ValueError("oracle supports n <= 3")
    geo = Geometry(bundle, metric)
    n = bundle.n
    r = range(1, n + 1)
    full = full_symmetric_source(T, metric)
    div_up = []
    for b in r:
        acc = ZERO
        for a in r:
            acc = acc + geo.D(full[a - 1][b - 1], a)
            for c in r:
                acc = acc + geo.christoffel(b, a, c) * full[a - 1][c - 1]
        div_up.append(acc)
    out = []
    for k in r:
        acc = ZERO
        for b in r:
            acc = acc + geo.g(k, b) * div_up[b - 1] * 2
        out.append(acc)
    if potential is not None:
        J = [T.comps[(potential, (a,))] for a in r]
        A = lambda a, *d: bundle.jet(potential, (a,), d)  # noqa: E731
        divJ = sum((geo.D(J[a - 1], a) for a in r), ZERO)
        for k in r:
            contraction = sum((J[a - 1] * (A(k, a) - A(a, k)) for a in r), ZERO)
            out[k - 1] = out[k - 1] + contraction + divJ * A(k)
    return tuple(out)


# ---------------------------------------------------------------------------
# built-in models

def _scalar_model(name: str, n: int, lagrangian: str, source: str, symmetries: dict[str, str],
                  notes: str) -> Model:
    bundle = BundleSpec.of(n, ("u", SCALAR))
    return Model(
        name=name,
        bundle=bundle,
        lagrangian=Density.parse(lagrangian, bundle),
        source=SourceEquation.parse(bundle, {"u": source}),
        known_symmetries={k: EvolutionaryField.parse(bundle, {"u": v})
                          for k, v in symmetries.items()},
        notes=notes,
    )


def _laplace_1d() -> Model:
    return _scalar_model(
        "laplace-1d", 1, "1/2*u[;1]^2", "-u[;1,1]",
        {"translation": "u[;1]", "shift": "1"},
        "Dirichlet energy on the line.")


def _wave_1d() -> Model:
    return _scalar_model(
        "wave-1d", 2, "1/2*u[;1]^2 - 1/2*u[;2]^2", "-u[;1,1] + u[;2,2]",
        {"time-translation": "u[;1]", "space-translation": "u[;2]", "shift": "1"},
        "Wave equation in 1+1 dimensions; x[1] is time, x[2] is space.")


def _laplace_2d() -> Model:
    return _scalar_model(
        "laplace-2d", 2, "1/2*u[;1]^2 + 1/2*u[;2]^2", "-u[;1,1] - u[;2,2]",
        {"translation-1": "u[;1]", "translation-2": "u[;2]", "shift": "1"},
        "Dirichlet energy in the plane.")


def _hilbert_2d() -> Model:
    bundle = BundleSpec.of(2, ("g", SYMMETRIC2))
    geo = Geometry(bundle, "g")
    L = Density(geo.sqrtdet * geo.scalar_curvature())
    return Model("hilbert-2d", bundle, lagrangian=L,
                 notes="Einstein-Hilbert density sqrtdet(g)*R on a surface; a null Lagrangian.")


def maxwell_density(bundle: BundleSpec, metric: str = "g", potential: str = "A") -> Expression:
    """-1/4 sqrtdet(g) F_ij F_kl g^ik g^jl with F_ij = A[j;i] - A[i;j]."""
    geo = Geometry(bundle, metric)
    r = range(1, bundle.n + 1)
    F = {(i, j): bundle.jet(potential, (j,), (i,)) - bundle.jet(potential, (i,), (j,))
         for i in r for j in r}
    # raise both indices: F^{kl} = g^{ki} g^{lj} F_ij
    out = ZERO
    for k in r:
        for l in r:
            raised = ZERO
            for i in r:
                for j in r:
                    if not F[(i, j)].is_zero:
                        raised = raised + geo.inv(k, i) * geo.inv(l, j) * F[(i, j)]
            out = out + F[(k, l)] * raised
    return out * geo.sqrtdet * Fraction(-1, 4)


def _maxwell_2d() -> Model:
    bundle = BundleSpec.of(2, ("g", SYMMETRIC2), ("A", COVECTOR))
    return Model("maxwell-2d", bundle, lagrangian=Density(maxwell_density(bundle)),
                 notes="Maxwell density coupled to the metric; natural and gauge invariant.")


def _generic_sources(bundle: BundleSpec, names: dict[tuple[str, tuple], str]) -> SourceEquation:
    return SourceEquation(bundle, {key: bundle.jet(name) for key, name in names.items()})


def _metric_generic_2d() -> Model:
    bundle = BundleSpec.of(2, ("g", SYMMETRIC2), ("t11", SCALAR), ("t12", SCALAR), ("t22", SCALAR))
    T = _generic_sources(bundle, {("g", (1, 1)): "t11", ("g", (1, 2)): "t12",
                                  ("g", (2, 2)): "t22"})
    return Model("metric-generic-2d", bundle, source=T,
                 notes="Generic source on the metric bundle: its components are the free "
                       "functions t11, t12, t22 (auxiliary scalar fields with zero source).")


def _em_generic_2d() -> Model:
    bundle = BundleSpec.of(2, ("g", SYMMETRIC2), ("A", COVECTOR),
                           ("t11", SCALAR), ("t12", SCALAR), ("t22", SCALAR),
                           ("j1", SCALAR), ("j2", SCALAR))
    T = _generic_sources(bundle, {("g", (1, 1)): "t11", ("g", (1, 2)): "t12",
                                  ("g", (2, 2)): "t22", ("A", (1,)): "j1", ("A", (2,)): "j2"})
    return Model("em-generic-2d", bundle, source=T,
                 notes="Generic source (T, J) on metrics x covectors; components are the free "
                       "functions t11, t12, t22, j1, j2 (auxiliary scalar fields with zero source).")


_BUILDERS = {
    "laplace-1d": _laplace_1d,
    "wave-1d": _wave_1d,
    "laplace-2d": _laplace_2d,
    "hilbert-2d": _hilbert_2d,
    "maxwell-2d": _maxwell_2d,
    "metric-generic-2d": _metric_generic_2d,
    "em-generic-2d": _em_generic_2d,
}

MODEL_NAMES = tuple(_BUILDERS)


@lru_cache(maxsize=None)
def builtin_model(name: str) -> Model:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(MODEL_NAMES)}") from None
    return builder()
