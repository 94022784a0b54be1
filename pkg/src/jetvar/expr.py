"""Exact expressions over jet atoms.

An :class:`Expression` is a finite sum of monomials with :class:`~fractions.Fraction`
coefficients.  Monomials are products of atoms raised to integer powers:

* ``x[i]``            base coordinates,
* ``u[c;I]``          jet variables (field, component tuple, sorted multi-index),
* ``aux[i;J]``        components of a formal base vector field and their derivatives,
* ``sqrtdet(g)``      the positive square root of ``det(g)`` for a symmetric 2-tensor field,
* parameters          formal scalars such as the homotopy parameter ``t``.

Only ``sqrtdet`` atoms may carry negative exponents.  The relation
``sqrtdet(g)^2 = det(g)`` is applied during canonicalization: every expression is
kept as ``(N0 + s*N1) / det^K`` with ``s = sqrtdet(g)`` and ``K`` as small as
possible, which makes the representation unique.  Structural equality is
therefore mathematical equality and zero-testing is exact.
"""
from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Mapping, NamedTuple

from .errors import ExpressionClassError, OrderBoundExceeded

__all__ = [
    "Atom",
    "Expression",
    "base_coord",
    "jet_var",
    "aux_var",
    "root_atom",
    "parameter",
    "partial_derivative",
    "total_derivative",
    "evaluate_numeric",
    "definite_integral_unit",
    "is_zero",
    "det_expression",
    "adjugate_expression",
    "DEFAULT_ORDER_BOUND",
]

BASE, JET, AUX, ROOT, PARAM = range(5)
DEFAULT_ORDER_BOUND = 8


class Atom(NamedTuple):
    kind: int
    name: str
    comp: tuple[int, ...]
    derivs: tuple[int, ...]

    def __str__(self) -> str:
        if self.kind == BASE:
            return f"x[{self.comp[0]}]"
        if self.kind == ROOT:
            return f"sqrtdet({self.name})"
        if self.kind == PARAM:
            return self.name
        head = ",".join(map(str, self.comp))
        tail = ";" + ",".join(map(str, self.derivs)) if self.derivs else ""
        name = "aux" if self.kind == AUX else self.name
        return f"{name}[{head}{tail}]"

    @property
    def order(self) -> int:
        return len(self.derivs)

    def shifted(self, i: int) -> Atom:
        return self._replace(derivs=tuple(sorted(self.derivs + (i,))))

    def family(self) -> tuple:
        """The atom with its derivative multi-index stripped."""
        return (self.kind, self.name, self.comp)


def base_coord(i: int) -> Atom:
    return Atom(BASE, "", (i,), ())


def jet_var(field: str, comp: Iterable[int] = (), derivs: Iterable[int] = ()) -> Atom:
    return Atom(JET, field, tuple(comp), tuple(sorted(derivs)))


def aux_var(i: int, derivs: Iterable[int] = ()) -> Atom:
    return Atom(AUX, "", (i,), tuple(sorted(derivs)))


def root_atom(field: str, n: int) -> Atom:
    """``sqrtdet(field)`` for a symmetric 2-tensor field on an ``n``-dimensional base."""
    return Atom(ROOT, field, (n,), ())


def parameter(name: str) -> Atom:
    return Atom(PARAM, name, (), ())


# ---------------------------------------------------------------------------
# monomial helpers; a monomial is a tuple of (Atom, exponent) sorted by atom

def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for a, x in m2:
        y = d.get(a, 0) + x
        if y:
            d[a] = y
        else:
            del d[a]
    return tuple(sorted(d.items()))


def _mono_pow(m: tuple, k: int) -> tuple:
    return tuple((a, x * k) for a, x in m) if k else ()


def _mono_str(m: tuple) -> str:
    return "*".join(str(a) if x == 1 else f"{a}^{x}" for a, x in m)


def _coerce_coeff(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    raise TypeError(f"coefficients must be exact rationals, got {type(c).__name__}")


# ---------------------------------------------------------------------------
# determinant bookkeeping for sqrtdet atoms

def _det_vars(r: Atom) -> tuple[Atom, ...]:
    n = r.comp[0]
    return tuple(jet_var(r.name, (a, b)) for a in range(1, n + 1) for b in range(a, n + 1))


def _sym_entry(field: str, a: int, b: int) -> Atom:
    return jet_var(field, (min(a, b), max(a, b)))


def _det_of(matrix: list[list[dict]]) -> dict:
    """Laplace expansion of a determinant whose entries are raw term dicts."""
    size = len(matrix)
    if size == 0:
        return {(): Fraction(1)}

    @lru_cache(maxsize=None)
    def minor(rows: tuple[int, ...], col: int) -> tuple:
        if not rows:
            return (((), Fraction(1)),)
        out: dict = defaultdict(Fraction)
        for k, row in enumerate(rows):
            entry = matrix[row][col]
            if not entry:
                continue
            sub = dict(minor(rows[:k] + rows[k + 1:], col + 1))
            sign = -1 if k % 2 else 1
            for m1, c1 in entry.items():
                for m2, c2 in sub.items():
                    out[_mono_mul(m1, m2)] += sign * c1 * c2
        return tuple((m, c) for m, c in out.items() if c)

    return dict(minor(tuple(range(size)), 0))


@lru_cache(maxsize=None)
def _det_terms(r: Atom) -> tuple:
    n = r.comp[0]
    matrix = [[{((_sym_entry(r.name, a, b), 1),): Fraction(1)} for b in range(1, n + 1)]
              for a in range(1, n + 1)]
    return tuple(sorted(_det_of(matrix).items()))


@lru_cache(maxsize=None)
def _det_power(r: Atom, k: int) -> tuple:
    if k == 0:
        return (((), Fraction(1)),)
    if k == 1:
        return _det_terms(r)
    out: dict = defaultdict(Fraction)
    for m1, c1 in _det_power(r, k - 1):
        for m2, c2 in _det_terms(r):
            out[_mono_mul(m1, m2)] += c1 * c2
    return tuple((m, c) for m, c in sorted(out.items()) if c)


@lru_cache(maxsize=None)
def _det_division_data(r: Atom):
    variables = _det_vars(r)
    index = {v: i for i, v in enumerate(variables)}
    terms = []
    for m, c in _det_terms(r):
        g = [0] * len(variables)
        for a, x in m:
            g[index[a]] = x
        terms.append((tuple(g), c))
    lead = max(t[0] for t in terms)
    lead_coeff = dict(terms)[lead]
    # the diagonal product leads in lex order and is monic
    assert lead_coeff == 1
    return variables, index, lead, tuple(t for t in terms if t[0] != lead)


def _divide_by_det(num: dict, r: Atom) -> dict | None:
    """Exact quotient ``num / det``, or None when det does not divide num."""
    variables, index, lead, others = _det_division_data(r)
    width = len(variables)
    groups: dict[tuple, dict] = {}
    for m, c in num.items():
        g = [0] * width
        rest = []
        for a, x in m:
            j = index.get(a)
            if j is None:
                rest.append((a, x))
            else:
                g[j] = x
        groups.setdefault(tuple(g), {})[tuple(rest)] = c
    quotient: dict[tuple, dict] = {}
    while groups:
        e = max(groups)
        poly = groups.pop(e)
        qe = tuple(a - b for a, b in zip(e, lead))
        if min(qe) < 0:
            return None
        quotient[qe] = poly
        for de, dc in others:
            t = tuple(a + b for a, b in zip(qe, de))
            grp = groups.setdefault(t, {})
            for rm, rc in poly.items():
                v = grp.get(rm, 0) - dc * rc
                if v:
                    grp[rm] = v
                else:
                    grp.pop(rm, None)
            if not grp:
                del groups[t]
    out = {}
    for qe, poly in quotient.items():
        gmono = tuple((variables[j], x) for j, x in enumerate(qe) if x)
        for rm, rc in poly.items():
            out[_mono_mul(rm, gmono)] = rc
    return out


def _reduce_root(terms: dict, r: Atom) -> dict:
    split = []
    kmax = 0
    trivial = True
    for m, c in terms.items():
        e, rest = 0, m
        for idx, (a, x) in enumerate(m):
            if a == r:
                e, rest = x, m[:idx] + m[idx + 1:]
                break
        q, p = divmod(e, 2)
        if q:
            trivial = False
            kmax = max(kmax, -q)
        split.append((rest, p, q, c))
    if trivial:
        return terms
    num: dict = defaultdict(Fraction)
    for rest, p, q, c in split:
        base = _mono_mul(rest, ((r, 1),)) if p else rest
        power = q + kmax
        if power == 0:
            num[base] += c
        else:
            for dm, dc in _det_power(r, power):
                num[_mono_mul(base, dm)] += c * dc
    num = {m: c for m, c in num.items() if c}
    k = kmax
    while k and num:
        quot = _divide_by_det(num, r)
        if quot is None:
            break
        num, k = quot, k - 1
    if k == 0 or not num:
        return num
    return {_mono_mul(m, ((r, -2 * k),)): c for m, c in num.items()}


def _canon(raw: Mapping) -> dict:
    terms = {m: c for m, c in raw.items() if c}
    roots = {a for m in terms for a, _ in m if a.kind == ROOT}
    for r in sorted(roots):
        terms = _reduce_root(terms, r)
    return terms


# ---------------------------------------------------------------------------

class Expression:
    """Immutable exact expression in canonical form."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping | None = None, *, _canonical: bool = False):
        if terms is None:
            terms = {}
        elif not _canonical:
            terms = _canon({m: _coerce_coeff(c) for m, c in terms.items()})
        self._terms = dict(terms)
        self._hash = None

    # construction -------------------------------------------------------
    @classmethod
    def _raw(cls, terms: dict) -> Expression:
        """Wrap an already canonical dict without copying."""
        e = cls.__new__(cls)
        e._terms = terms
        e._hash = None
        return e

    @classmethod
    def constant(cls, c) -> Expression:
        c = _coerce_coeff(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def from_atom(cls, a: Atom, exponent: int = 1) -> Expression:
        if exponent == 0:
            return cls.constant(1)
        if exponent < 0 and a.kind != ROOT:
            raise ExpressionClassError(f"negative power of {a} is outside the expression class")
        return cls({((a, exponent),): Fraction(1)})

    @classmethod
    def coerce(cls, value) -> Expression:
        if isinstance(value, Expression):
            return value
        if isinstance(value, Atom):
            return cls.from_atom(value)
        return cls.constant(value)

    # inspection ---------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self._terms

    def terms(self) -> list[tuple[tuple, Fraction]]:
        """(monomial, coefficient) pairs in canonical order."""
        return sorted(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def atoms(self) -> set[Atom]:
        return {a for m in self._terms for a, _ in m}

    def jet_order(self) -> int:
        return max((a.order for a in self.atoms() if a.kind in (JET, AUX)), default=0)

    def is_constant(self) -> bool:
        return all(m == () for m in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self._terms.get((), Fraction(0))

    def has_kind(self, kind: int) -> bool:
        return any(a.kind == kind for m in self._terms for a, _ in m)

    def is_polynomial(self) -> bool:
        """No sqrtdet atoms at all."""
        return not self.has_kind(ROOT)

    def select(self, predicate) -> Expression:
        """Sum of the monomials for which ``predicate(monomial)`` holds."""
        return Expression._raw({m: c for m, c in self._terms.items() if predicate(m)})

    # arithmetic ---------------------------------------------------------
    def __add__(self, other) -> Expression:
        other = Expression.coerce(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                del out[m]
        if self._has_denominator() or other._has_denominator():
            out = _canon(out)
        return Expression._raw(out)

    __radd__ = __add__

    def __neg__(self) -> Expression:
        return Expression._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> Expression:
        return self + (-Expression.coerce(other))

    def __rsub__(self, other) -> Expression:
        return Expression.coerce(other) + (-self)

    def __mul__(self, other) -> Expression:
        if not isinstance(other, Expression):
            if isinstance(other, Atom):
                other = Expression.from_atom(other)
            else:
                c = _coerce_coeff(other)
                if not c:
                    return Expression()
                return Expression._raw({m: c * v for m, v in self._terms.items()})
        if not self._terms or not other._terms:
            return Expression()
        out: dict = defaultdict(Fraction)
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                out[_mono_mul(m1, m2)] += c1 * c2
        return Expression(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Expression:
        if not isinstance(k, int):
            raise ExpressionClassError("only integer powers are supported")
        if k < 0:
            return (self.reciprocal()) ** (-k)
        result = Expression.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def reciprocal(self) -> Expression:
        """Inverse of a single monomial whose non-constant atoms are all sqrtdet atoms."""
        if len(self._terms) != 1:
            raise ExpressionClassError(f"cannot divide by the non-monomial {self}")
        ((m, c),) = self._terms.items()
        for a, _ in m:
            if a.kind != ROOT:
                raise ExpressionClassError(f"cannot divide by {a}")
        return Expression({_mono_pow(m, -1): 1 / c})

    def __truediv__(self, other) -> Expression:
        if not isinstance(other, Expression):
            if isinstance(other, Atom):
                other = Expression.from_atom(other)
            else:
                c = _coerce_coeff(other)
                if not c:
                    raise ZeroDivisionError("division by zero")
                return self * (1 / c)
        if other.is_zero:
            raise ZeroDivisionError("division by zero")
        if len(other._terms) != 1:
            raise ExpressionClassError(f"cannot divide by the non-monomial {other}")
        ((m, c),) = other._terms.items()
        inverse = _mono_pow(m, -1)
        out = {}
        for mm, cc in self._terms.items():
            q = _mono_mul(mm, inverse)
            if any(x < 0 and a.kind != ROOT for a, x in q):
                raise ExpressionClassError(f"{self} is not divisible by {other}")
            out[q] = cc / c
        return Expression(out)

    def _has_denominator(self) -> bool:
        for m in self._terms:
            for a, x in m:
                if a.kind == ROOT and x < 0:
                    return True
        return False

    # comparison / hashing ------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, Expression):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Expression.constant(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # printing ------------------------------------------------------------
    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for m, c in self.terms():
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if not m:
                body = str(a)
            elif a == 1:
                body = _mono_str(m)
            else:
                body = f"{a}*{_mono_str(m)}"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self) -> str:
        return f"Expression({str(self)!r})"

    # substitution ----------------------------------------------------------
    def subs(self, mapping: Mapping[Atom, object]) -> Expression:
        """Replace atoms by expressions; negative powers need invertible images."""
        images = {a: Expression.coerce(v) for a, v in mapping.items()}
        out = Expression()
        for m, c in self._terms.items():
            term = Expression.constant(c)
            kept = []
            for a, x in m:
                if a in images:
                    term = term * images[a] ** x
                else:
                    kept.append((a, x))
            out = out + term * Expression({tuple(kept): 1})
        return out

    def map_monomials(self, fn) -> Expression:
        """Sum of ``fn(monomial, coeff)`` over the terms; ``fn`` returns a raw term dict."""
        out: dict = defaultdict(Fraction)
        for m, c in self._terms.items():
            for mm, cc in fn(m, c).items():
                out[mm] += cc
        return Expression(out)


def is_zero(e: Expression) -> bool:
    return e.is_zero


# ---------------------------------------------------------------------------
# derivatives

@lru_cache(maxsize=4096)
def _partial_atom(b: Atom, a: Atom) -> tuple:
    """d b / d a as a raw term tuple (sqrtdet handled by implicit differentiation)."""
    if b == a:
        return (((), Fraction(1)),)
    if b.kind == ROOT and a.kind == JET and a.name == b.name and not a.derivs and a in _det_vars(b):
        out: dict = defaultdict(Fraction)
        for m, c in _det_terms(b):
            for aa, x in m:
                if aa == a:
                    reduced = _mono_mul(m, ((aa, -1),))
                    out[_mono_mul(reduced, ((b, -1),))] += Fraction(x, 2) * c
        return tuple((m, c) for m, c in out.items() if c)
    return ()


def _differentiate(e: Expression, d_atom) -> Expression:
    out: dict = defaultdict(Fraction)
    for m, c in e._terms.items():
        for idx, (b, x) in enumerate(m):
            db = d_atom(b)
            if not db:
                continue
            rest = m[:idx] + ((b, x - 1),) + m[idx + 1:] if x != 1 else m[:idx] + m[idx + 1:]
            k = c * x
            for dm, dc in db:
                out[_mono_mul(rest, dm)] += k * dc
    return Expression(out)


def partial_derivative(e: Expression, a: Atom) -> Expression:
    """Partial derivative treating every sorted-multi-index jet variable as independent."""
    if a.kind == ROOT:
        raise ExpressionClassError("cannot differentiate with respect to a sqrtdet atom")
    return _differentiate(e, lambda b: _partial_atom(b, a))


@lru_cache(maxsize=None)
def _total_atom(b: Atom, i: int, order_bound: int) -> tuple:
    if b.kind == BASE:
        return (((), Fraction(1)),) if b.comp[0] == i else ()
    if b.kind in (JET, AUX):
        if b.order + 1 > order_bound:
            raise OrderBoundExceeded(
                f"total derivative of {b} exceeds the jet order bound {order_bound}")
        return ((((b.shifted(i), 1),), Fraction(1)),)
    if b.kind == ROOT:
        # D_i s = (1/2) s^-1 D_i det
        out: dict = defaultdict(Fraction)
        for v in _det_vars(b):
            dv = _partial_atom(b, v)
            for m, c in dv:
                out[_mono_mul(m, ((v.shifted(i), 1),))] += c
        return tuple((m, c) for m, c in out.items() if c)
    return ()


def total_derivative(e: Expression, i: int, *, order_bound: int = DEFAULT_ORDER_BOUND,
                     n: int | None = None) -> Expression:
    """D_i e = de/dx^i + sum over jet atoms of y_{I+i} * de/dy_I (aux atoms likewise)."""
    if i < 1 or (n is not None and i > n):
        raise ValueError(f"base index {i} out of range")
    return _differentiate(e, lambda b: _total_atom(b, i, order_bound))


# ---------------------------------------------------------------------------
# determinant helpers exposed to the parser and catalog

def det_expression(field: str, n: int) -> Expression:
    return Expression(dict(_det_terms(root_atom(field, n))))


def adjugate_expression(field: str, n: int, a: int, b: int) -> Expression:
    """Entry (a, b) of the adjugate of the symmetric component matrix of ``field``."""
    rows = [r for r in range(1, n + 1) if r != b]
    cols = [c for c in range(1, n + 1) if c != a]
    matrix = [[{((_sym_entry(field, r, c), 1),): Fraction(1)} for c in cols] for r in rows]
    sign = -1 if (a + b) % 2 else 1
    return Expression({m: sign * c for m, c in _det_of(matrix).items()})


# ---------------------------------------------------------------------------

def evaluate_numeric(e: Expression, assignment: Mapping[Atom, object], *, tol: float = 1e-9):
    """Floating-point value of ``e``.

    Values may be floats or numpy arrays (evaluated elementwise).  Every sqrtdet
    atom must be assigned the positive square root of the determinant of the
    assigned component values.
    """
    atoms = e.atoms()
    missing = sorted(str(a) for a in atoms if a not in assignment)
    if missing:
        raise KeyError(f"unassigned atoms: {', '.join(missing)}")
    for r in atoms:
        if r.kind != ROOT:
            continue
        comps = _det_vars(r)
        absent = [str(v) for v in comps if v not in assignment]
        if absent:
            raise KeyError(f"components needed to check {r}: {', '.join(absent)}")
        det = 0.0
        for m, c in _det_terms(r):
            term = float(c)
            for a, x in m:
                term = term * assignment[a] ** x
            det = det + term
        s = assignment[r]
        bad = abs(s * s - det) > tol * _maximum(1.0, abs(det))
        if _any(bad) or _any(s <= 0):
            raise ValueError(f"value assigned to {r} is not the positive square root of det")
    total = 0.0
    for m, c in e._terms.items():
        term = float(c)
        for a, x in m:
            term = term * assignment[a] ** x
        total = total + term
    return total


def _any(flag) -> bool:
    return bool(flag.any()) if hasattr(flag, "any") else bool(flag)


def _maximum(a, b):
    if hasattr(b, "shape"):
        import numpy as np
        return np.maximum(a, b)
    return max(a, b)


def definite_integral_unit(e: Expression, t: Atom) -> Expression:
    """Exact integral of ``e`` over t in [0, 1]; ``e`` must be polynomial in t."""
    out = {}
    for m, c in e._terms.items():
        k = 0
        rest = m
        for idx, (a, x) in enumerate(m):
            if a == t:
                k, rest = x, m[:idx] + m[idx + 1:]
                break
        if k < 0:
            raise ExpressionClassError(f"{e} is not polynomial in {t}")
        out[rest] = out.get(rest, 0) + c / (k + 1)
    return Expression(out)

