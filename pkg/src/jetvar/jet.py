"""Forms and fields on the jet space, total derivatives and prolongations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .bundle import BundleSpec, ComponentKey
from .errors import ComponentMismatch
from .expr import (
    DEFAULT_ORDER_BOUND,
    JET,
    ROOT,
    Atom,
    Expression,
    jet_var,
    partial_derivative,
    total_derivative,
)

ZERO = Expression()


def total_derivative_multi(e: Expression, index: Iterable[int], *,
                           order_bound: int = DEFAULT_ORDER_BOUND) -> Expression:
    """D_I e = D_{i1}(D_{i2}(... e))."""
    for i in index:
        if e.is_zero:
            break
        e = total_derivative(e, i, order_bound=order_bound)
    return e


@dataclass(frozen=True)
class Density:
    """The (n,0)-form ``coeff * dx^1 ^ ... ^ dx^n``."""

    coeff: Expression

    @classmethod
    def parse(cls, text: str, bundle: BundleSpec) -> Density:
        return cls(bundle.parse(text))

    @property
    def is_zero(self) -> bool:
        return self.coeff.is_zero

    def __add__(self, other: Density) -> Density:
        return Density(self.coeff + other.coeff)

    def __sub__(self, other: Density) -> Density:
        return Density(self.coeff - other.coeff)

    def __str__(self) -> str:
        return str(self.coeff)


@dataclass(frozen=True)
class HorizontalForm:
    """An (n-1,0)-form, stored as components against the contractions i_{d/dx^i}(dX)."""

    comps: tuple[Expression, ...]

    def __post_init__(self):
        object.__setattr__(self, "comps", tuple(Expression.coerce(c) for c in self.comps))

    @property
    def n(self) -> int:
        return len(self.comps)

    @classmethod
    def zero(cls, n: int) -> HorizontalForm:
        return cls((ZERO,) * n)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.comps)

    def __add__(self, other: HorizontalForm) -> HorizontalForm:
        return HorizontalForm(tuple(a + b for a, b in zip(self.comps, other.comps)))

    def __sub__(self, other: HorizontalForm) -> HorizontalForm:
        return HorizontalForm(tuple(a - b for a, b in zip(self.comps, other.comps)))

    def __getitem__(self, i: int) -> Expression:
        """1-based component access."""
        return self.comps[i - 1]


class _FiberVector:
    """One expression per independent fiber component of a bundle."""

    __slots__ = ("bundle", "comps")

    def __init__(self, bundle: BundleSpec, comps: Mapping | None = None):
        keys = bundle.components()
        given = {}
        for k, v in (comps or {}).items():
            try:
                key = bundle.key_from_label(k) if isinstance(k, str) else (k[0], tuple(k[1]))
            except (KeyError, ValueError) as exc:
                raise ComponentMismatch(f"{k!r} is not a component of the bundle") from exc
            if key not in keys:
                raise ComponentMismatch(f"{key} is not a component of the bundle")
            given[key] = Expression.coerce(v)
        self.bundle = bundle
        self.comps: dict[ComponentKey, Expression] = {k: given.get(k, ZERO) for k in keys}

    @classmethod
    def parse(cls, bundle: BundleSpec, texts: Mapping[str, str]):
        return cls(bundle, {label: bundle.parse(t) for label, t in texts.items()})

    @classmethod
    def uniform(cls, bundle: BundleSpec, value):
        """Same expression in every component (handy for scalar bundles)."""
        return cls(bundle, {k: value for k in bundle.components()})

    def __getitem__(self, key) -> Expression:
        if isinstance(key, str):
            key = self.bundle.key_from_label(key)
        return self.comps[key]

    def items(self):
        return self.comps.items()

    @property
    def is_zero(self) -> bool:
        return all(v.is_zero for v in self.comps.values())

    def _check(self, other: _FiberVector) -> None:
        if self.bundle.components() != other.bundle.components():
            raise ComponentMismatch("fiber vectors live on different bundles")

    def __add__(self, other):
        self._check(other)
        return type(self)(self.bundle, {k: v + other.comps[k] for k, v in self.comps.items()})

    def __sub__(self, other):
        self._check(other)
        return type(self)(self.bundle, {k: v - other.comps[k] for k, v in self.comps.items()})

    def __neg__(self):
        return type(self)(self.bundle, {k: -v for k, v in self.comps.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, type(self)):
            return NotImplemented
        return self.bundle.components() == other.bundle.components() and self.comps == other.comps

    __hash__ = None

    def as_text(self, prefix: str) -> list[str]:
        return [f"{prefix}[{self.bundle.label(k)}] = {v}" for k, v in self.comps.items()]

    def __repr__(self) -> str:
        inner = ", ".join(f"{self.bundle.label(k)}: {v}" for k, v in self.comps.items())
        return f"{type(self).__name__}({{{inner}}})"


class EvolutionaryField(_FiberVector):
    """A vertical field V = sum V^a d/dy^a with jet-dependent coefficients."""

    __slots__ = ()


class SourceEquation(_FiberVector):
    """T = sum T_a dy^a (x) dx^1 ^ ... ^ dx^n."""

    __slots__ = ()


def jet_atoms_by_component(e: Expression, bundle: BundleSpec) -> dict[ComponentKey, set[tuple]]:
    """Multi-indices at which each fiber component occurs in ``e``.

    A sqrtdet atom makes every component of its field depend on the undifferentiated
    variables.
    """
    found: dict[ComponentKey, set[tuple]] = {}
    for a in e.atoms():
        if a.kind == JET and bundle.has_field(a.name):
            found.setdefault((a.name, a.comp), set()).add(a.derivs)
        elif a.kind == ROOT and bundle.has_field(a.name):
            for comp in bundle.field_components(a.name):
                found.setdefault((a.name, comp), set()).add(())
    return found


def component_atom(key: ComponentKey, derivs: tuple[int, ...]) -> Atom:
    return jet_var(key[0], key[1], derivs)


class _DerivativeTable:
    """Memoized D_I of a fixed expression, built by extending I one index at a time."""

    def __init__(self, e: Expression, order_bound: int):
        self.order_bound = order_bound
        self.cache: dict[tuple[int, ...], Expression] = {(): e}

    def __call__(self, index: tuple[int, ...]) -> Expression:
        if index in self.cache:
            return self.cache[index]
        prev = self(index[:-1])
        out = total_derivative(prev, index[-1], order_bound=self.order_bound)
        self.cache[index] = out
        return out


def prolong_apply(V: EvolutionaryField, e: Expression) -> Expression:
    """Lie derivative of the function ``e`` along the prolongation of ``V``."""
    bundle = V.bundle
    out = ZERO
    for key, indices in sorted(jet_atoms_by_component(e, bundle).items()):
        if V.comps[key].is_zero:
            continue
        table = _DerivativeTable(V.comps[key], bundle.order_bound)
        for index in sorted(indices):
            de = partial_derivative(e, component_atom(key, index))
            if not de.is_zero:
                out = out + table(index) * de
    return out


def horizontal_differential(omega: HorizontalForm, *,
                            order_bound: int = DEFAULT_ORDER_BOUND) -> Density:
    """d_h of an (n-1,0)-form: the total divergence sum_i D_i omega^i."""
    out = ZERO
    for i, w in enumerate(omega.comps, start=1):
        if not w.is_zero:
            out = out + total_derivative(w, i, order_bound=order_bound)
    return Density(out)
