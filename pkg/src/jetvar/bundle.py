"""Bundle declarations: base dimension and the fiber fields living over it."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

from .expr import DEFAULT_ORDER_BOUND, Atom, Expression, jet_var, root_atom

SCALAR, COVECTOR, SYMMETRIC2 = "scalar", "covector", "symmetric2"
FIELD_KINDS = (SCALAR, COVECTOR, SYMMETRIC2)
RESERVED_NAMES = frozenset({"x", "det", "sqrtdet", "inv", "aux"})
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

ComponentKey = tuple[str, tuple[int, ...]]


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: str

    def __post_init__(self):
        if not _NAME_RE.match(self.name) or self.name in RESERVED_NAMES:
            raise ValueError(f"invalid field name {self.name!r}")
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unsupported field kind {self.kind!r}")


@dataclass(frozen=True)
class BundleSpec:
    n: int
    fields: tuple[FieldSpec, ...]
    order_bound: int = DEFAULT_ORDER_BOUND
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        fields = tuple(f if isinstance(f, FieldSpec) else FieldSpec(*f) for f in self.fields)
        object.__setattr__(self, "fields", fields)
        if self.n < 1:
            raise ValueError("base dimension must be at least 1")
        if self.order_bound < 1:
            raise ValueError("order bound must be at least 1")
        names = [f.name for f in fields]
        if len(set(names)) != len(names):
            raise ValueError("field names must be unique")
        object.__setattr__(self, "_index", {f.name: f for f in fields})

    @classmethod
    def of(cls, n: int, *fields: tuple[str, str], order_bound: int = DEFAULT_ORDER_BOUND):
        """``BundleSpec.of(2, ("g", "symmetric2"), ("A", "covector"))``"""
        return cls(n, tuple(FieldSpec(name, kind) for name, kind in fields), order_bound)

    def with_order_bound(self, k: int) -> BundleSpec:
        return BundleSpec(self.n, self.fields, k)

    def field(self, name: str) -> FieldSpec:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown field {name!r}") from None

    def has_field(self, name: str) -> bool:
        return name in self._index

    def field_components(self, name: str) -> list[tuple[int, ...]]:
        kind = self.field(name).kind
        n = self.n
        if kind == SCALAR:
            return [()]
        if kind == COVECTOR:
            return [(a,) for a in range(1, n + 1)]
        return [(a, b) for a in range(1, n + 1) for b in range(a, n + 1)]

    def components(self) -> list[ComponentKey]:
        """Independent fiber components, in declaration order."""
        return [(f.name, c) for f in self.fields for c in self.field_components(f.name)]

    def normalize_component(self, name: str, comp: Iterable[int]) -> tuple[int, ...]:
        """Validate a component tuple; symmetric indices are sorted."""
        kind = self.field(name).kind
        comp = tuple(comp)
        expected = {SCALAR: 0, COVECTOR: 1, SYMMETRIC2: 2}[kind]
        if len(comp) != expected:
            raise ValueError(f"field {name!r} ({kind}) takes {expected} component indices")
        for a in comp:
            if not 1 <= a <= self.n:
                raise ValueError(f"component index {a} out of range 1..{self.n}")
        return tuple(sorted(comp)) if kind == SYMMETRIC2 else comp

    def jet_atom(self, name: str, comp: Iterable[int] = (), derivs: Iterable[int] = ()) -> Atom:
        comp = self.normalize_component(name, comp)
        derivs = tuple(sorted(derivs))
        for i in derivs:
            if not 1 <= i <= self.n:
                raise ValueError(f"derivative index {i} out of range 1..{self.n}")
        if len(derivs) > self.order_bound:
            raise ValueError(f"jet order {len(derivs)} exceeds bound {self.order_bound}")
        return jet_var(name, comp, derivs)

    def jet(self, name: str, comp: Iterable[int] = (), derivs: Iterable[int] = ()) -> Expression:
        return Expression.from_atom(self.jet_atom(name, comp, derivs))

    def sqrtdet(self, name: str) -> Expression:
        if self.field(name).kind != SYMMETRIC2:
            raise ValueError(f"sqrtdet needs a symmetric2 field, {name!r} is not")
        return Expression.from_atom(root_atom(name, self.n))

    def label(self, key: ComponentKey) -> str:
        name, comp = key
        return f"{name}[{','.join(map(str, comp))}]" if comp else name

    def key_from_label(self, label: str) -> ComponentKey:
        m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\[([0-9,\s]*)\])?\s*", label)
        if not m:
            raise ValueError(f"malformed component label {label!r}")
        name, inner = m.group(1), m.group(2)
        comp = tuple(int(s) for s in inner.split(",") if s.strip()) if inner else ()
        return name, self.normalize_component(name, comp)

    def parse(self, text: str) -> Expression:
        from .parsing import parse_expression
        return parse_expression(text, self)
