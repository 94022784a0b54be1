"""Recursive-descent parser for the textual expression grammar.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | factor
    factor := base ('^' exponent)?
    base   := rational | '(' expr ')' | 'x[' i ']'
            | field '[' components? (';' derivs)? ']'
            | 'det(' field ')' | 'sqrtdet(' field ')' | 'inv(' field ')[' a ',' b ']'
            | 'aux[' i (';' derivs)? ']'

Exponents are signed integers, optionally parenthesized; ``det(g)^(k/2)`` is
accepted and means ``sqrtdet(g)^k``.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .bundle import SYMMETRIC2, BundleSpec
from .errors import ExpressionClassError, ParseError
from .expr import (
    Expression,
    adjugate_expression,
    aux_var,
    base_coord,
    det_expression,
    parameter,
    root_atom,
)

_TOKEN = re.compile(r"(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.)")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items: list[tuple[str, str, int]] = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN.match(text, pos)
            if m.group(1) is not None:
                self.items.append(("int", m.group(1), pos))
            elif m.group(2) is not None:
                self.items.append(("name", m.group(2), pos))
            else:
                ch = m.group(3)
                if ch not in "+-*/^()[],;":
                    raise ParseError(f"unexpected character {ch!r}", pos, text)
                self.items.append(("op", ch, pos))
            pos = m.end()
        self.i = 0

    def peek(self) -> tuple[str, str, int] | None:
        return self.items[self.i] if self.i < len(self.items) else None

    def position(self) -> int:
        tok = self.peek()
        return tok[2] if tok else len(self.text)

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", len(self.text), self.text)
        self.i += 1
        return tok

    def accept(self, value: str) -> bool:
        tok = self.peek()
        if tok is not None and tok[0] == "op" and tok[1] == value:
            self.i += 1
            return True
        return False

    def expect(self, value: str) -> None:
        pos = self.position()
        if not self.accept(value):
            tok = self.peek()
            found = repr(tok[1]) if tok else "end of input"
            raise ParseError(f"expected {value!r}, found {found}", pos, self.text)

    def integer(self) -> int:
        pos = self.position()
        kind, value, _ = self.next()
        if kind != "int":
            raise ParseError(f"expected an integer, found {value!r}", pos, self.text)
        return int(value)


class _Parser:
    def __init__(self, text: str, bundle: BundleSpec, params: tuple[str, ...]):
        self.text = text
        self.bundle = bundle
        self.params = set(params)
        self.toks = _Tokens(text)

    def error(self, message: str, pos: int | None = None) -> ParseError:
        return ParseError(message, self.toks.position() if pos is None else pos, self.text)

    def parse(self) -> Expression:
        if not self.toks.items:
            raise self.error("empty expression", 0)
        e = self.expr()
        if self.toks.peek() is not None:
            raise self.error(f"unexpected token {self.toks.peek()[1]!r}")
        return e

    def expr(self) -> Expression:
        e = self.term()
        while True:
            if self.toks.accept("+"):
                e = e + self.term()
            elif self.toks.accept("-"):
                e = e - self.term()
            else:
                return e

    def term(self) -> Expression:
        e = self.unary()
        while True:
            if self.toks.accept("*"):
                e = e * self.unary()
            elif self.toks.peek() and self.toks.peek()[1] == "/":
                pos = self.toks.position()
                self.toks.next()
                e = self.divide(e, self.unary(), pos)
            else:
                return e

    def unary(self) -> Expression:
        if self.toks.accept("-"):
            return -self.unary()
        if self.toks.accept("+"):
            return self.unary()
        return self.factor()

    def factor(self) -> Expression:
        start = self.toks.position()
        base, det_field = self.base()
        if not self.toks.accept("^"):
            return base
        pos = self.toks.position()
        exponent = self.exponent()
        if exponent.denominator != 1:
            if det_field is None or exponent.denominator != 2:
                raise self.error("fractional exponents are only allowed on det(...)", pos)
            root = Expression.from_atom(root_atom(det_field, self.bundle.n))
            return root ** exponent.numerator
        k = exponent.numerator
        if det_field is not None and k < 0:
            root = Expression.from_atom(root_atom(det_field, self.bundle.n))
            return root ** (2 * k)
        try:
            return base ** k
        except ExpressionClassError as exc:
            raise self.error(str(exc), start) from None

    def exponent(self) -> Fraction:
        if self.toks.accept("("):
            sign = -1 if self.toks.accept("-") else 1
            num = self.toks.integer()
            den = 1
            if self.toks.accept("/"):
                den = self.toks.integer()
                if den == 0:
                    raise self.error("zero denominator in exponent")
            self.toks.expect(")")
            return Fraction(sign * num, den)
        sign = -1 if self.toks.accept("-") else 1
        return Fraction(sign * self.toks.integer())

    def divide(self, num: Expression, den: Expression, pos: int) -> Expression:
        if den.is_zero:
            raise self.error("division by zero", pos)
        if len(den) > 1:
            # division by det(g) is the one non-monomial divisor allowed
            for f in self.bundle.fields:
                if f.kind != SYMMETRIC2:
                    continue
                det = det_expression(f.name, self.bundle.n)
                lead = det.terms()[0]
                match = dict(den.terms()).get(lead[0])
                if match is not None and den == det * (match / lead[1]):
                    root = Expression.from_atom(root_atom(f.name, self.bundle.n))
                    return num * root ** -2 * (lead[1] / match)
            raise self.error("division by a general polynomial is not supported", pos)
        try:
            return num / den
        except ExpressionClassError as exc:
            raise self.error(str(exc), pos) from None

    def base(self) -> tuple[Expression, str | None]:
        pos = self.toks.position()
        kind, value, _ = self.toks.next()
        if kind == "int":
            return Expression.constant(int(value)), None
        if kind == "op":
            if value == "(":
                e = self.expr()
                self.toks.expect(")")
                return e, None
            raise self.error(f"unexpected {value!r}", pos)
        name = value
        if name == "x":
            self.toks.expect("[")
            i = self.index()
            self.toks.expect("]")
            return Expression.from_atom(base_coord(i)), None
        if name == "aux":
            self.toks.expect("[")
            i = self.index()
            derivs = self.index_list() if self.toks.accept(";") else ()
            self.toks.expect("]")
            self.check_order(derivs, pos)
            return Expression.from_atom(aux_var(i, derivs)), None
        if name in ("det", "sqrtdet", "inv"):
            self.toks.expect("(")
            fpos = self.toks.position()
            fname = self.field_name()
            self.toks.expect(")")
            if self.bundle.field(fname).kind != SYMMETRIC2:
                raise self.error(f"{name}() needs a symmetric2 field, {fname!r} is not", fpos)
            n = self.bundle.n
            if name == "det":
                return det_expression(fname, n), fname
            root = Expression.from_atom(root_atom(fname, n))
            if name == "sqrtdet":
                return root, None
            self.toks.expect("[")
            a = self.index()
            self.toks.expect(",")
            b = self.index()
            self.toks.expect("]")
            return adjugate_expression(fname, n, a, b) * root ** -2, None
        if name in self.params:
            return Expression.from_atom(parameter(name)), None
        if not self.bundle.has_field(name):
            raise self.error(f"unknown field {name!r}", pos)
        self.toks.expect("[")
        comp: tuple[int, ...] = ()
        tok = self.toks.peek()
        if tok is not None and tok[0] == "int":
            comp = self.index_list()
        derivs: tuple[int, ...] = ()
        if self.toks.accept(";"):
            derivs = self.index_list()
        self.toks.expect("]")
        try:
            comp = self.bundle.normalize_component(name, comp)
        except ValueError as exc:
            raise self.error(str(exc), pos) from None
        self.check_order(derivs, pos)
        return self.bundle.jet(name, comp, derivs), None

    def field_name(self) -> str:
        pos = self.toks.position()
        kind, value, _ = self.toks.next()
        if kind != "name":
            raise self.error(f"expected a field name, found {value!r}", pos)
        if not self.bundle.has_field(value):
            raise self.error(f"unknown field {value!r}", pos)
        return value

    def index(self) -> int:
        pos = self.toks.position()
        i = self.toks.integer()
        if not 1 <= i <= self.bundle.n:
            raise self.error(f"index {i} out of range 1..{self.bundle.n}", pos)
        return i

    def index_list(self) -> tuple[int, ...]:
        out = [self.index()]
        while self.toks.accept(","):
            out.append(self.index())
        return tuple(sorted(out))

    def check_order(self, derivs: tuple[int, ...], pos: int) -> None:
        if len(derivs) > self.bundle.order_bound:
            raise self.error(
                f"jet order {len(derivs)} exceeds the bound {self.bundle.order_bound}", pos)


def parse_expression(text: str, bundle: BundleSpec, params: tuple[str, ...] = ()) -> Expression:
    """Parse ``text`` into a canonical :class:`Expression` over ``bundle``'s jet atoms."""
    return _Parser(text, bundle, params).parse()
