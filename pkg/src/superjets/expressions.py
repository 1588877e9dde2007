"""Polynomial expression grammar and canonical printing.

Grammar (whitespace insensitive)::

    expr   := ["-"] term { ("+" | "-") term }
    term   := factor { "*" factor }
    factor := atom [ "^" nat ]
    atom   := rational | identifier | "(" expr ")"

Rational literals are ``p/q`` or plain integers; exponents are non-negative
integers (``x^-1`` is rejected).  Identifiers must name generators of the
table the expression is parsed against.

``print_canonical`` is the inverse on canonical forms: terms are ordered by
total even-formal degree, then even exponents, then odd subset (length,
indices), then base degree and exponents; rationals are reduced; odd words
are ascending, with sorting signs already folded into coefficients.
"""

from __future__ import annotations

from fractions import Fraction

from .graded import GeneratorTable, Key, SuperPoly


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.message = message
        self.line = line
        self.col = col


_OPS = set("+-*^()")


def _tokenize(text: str) -> list[tuple[str, str, int, int]]:
    """Return (kind, value, line, col) tokens; kinds: int, ident, op, end."""
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in _OPS or ch == "/":
            tokens.append(("op", ch, line, col))
            col += 1
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str, table: GeneratorTable):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.table = table

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok=None):
        kind, value, line, col = tok or self.peek()
        raise ParseError(message, line, col)

    def expect_op(self, op: str):
        kind, value, line, col = self.peek()
        if kind != "op" or value != op:
            self.error(f"expected {op!r}")
        return self.next()

    def parse(self) -> SuperPoly:
        value = self.expr()
        kind, tval, line, col = self.peek()
        if kind != "end":
            self.error(f"unexpected {tval!r} after expression")
        return value

    def expr(self) -> SuperPoly:
        negate = False
        kind, value, _, _ = self.peek()
        if kind == "op" and value == "-":
            self.next()
            negate = True
        acc = self.term()
        if negate:
            acc = -acc
        while True:
            kind, value, _, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next()
                rhs = self.term()
                acc = acc + rhs if value == "+" else acc - rhs
            else:
                return acc

    def term(self) -> SuperPoly:
        acc = self.factor()
        while True:
            kind, value, _, _ = self.peek()
            if kind == "op" and value == "*":
                self.next()
                acc = acc * self.factor()
            else:
                return acc

    def factor(self) -> SuperPoly:
        base = self.atom()
        kind, value, _, _ = self.peek()
        if kind == "op" and value == "^":
            self.next()
            kind, value, line, col = self.peek()
            if kind != "int":
                self.error("exponent must be a non-negative integer")
            self.next()
            return base ** int(value)
        return base

    def atom(self) -> SuperPoly:
        kind, value, line, col = self.next()
        if kind == "int":
            num = int(value)
            k2, v2, _, _ = self.peek()
            if k2 == "op" and v2 == "/":
                self.next()
                k3, v3, l3, c3 = self.peek()
                if k3 != "int":
                    self.error("denominator must be an integer")
                self.next()
                if int(v3) == 0:
                    raise ParseError("division by zero in rational literal", l3, c3)
                return SuperPoly.scalar(self.table, Fraction(num, int(v3)))
            return SuperPoly.scalar(self.table, num)
        if kind == "ident":
            if not self.table.has(value):
                raise ParseError(f"unknown generator {value!r}", line, col)
            return SuperPoly.gen(self.table, value)
        if kind == "op" and value == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ParseError(f"unexpected {value!r}" if value else "unexpected end of input", line, col)


def parse_poly(text: str, table: GeneratorTable) -> SuperPoly:
    """Parse an expression string into a polynomial over ``table``."""
    return _Parser(text, table).parse()


def _term_key(key: Key):
    b, e, s = key
    return (sum(e), tuple(-x for x in e), len(s), s, sum(b), tuple(-x for x in b))


def _monomial_text(table: GeneratorTable, key: Key) -> str:
    b, e, s = key
    factors = []
    for name, n in zip(table.base, b):
        if n == 1:
            factors.append(name)
        elif n > 1:
            factors.append(f"{name}^{n}")
    for name, n in zip(table.even, e):
        if n == 1:
            factors.append(name)
        elif n > 1:
            factors.append(f"{name}^{n}")
    for i in s:
        factors.append(table.odd[i])
    return "*".join(factors)


def print_canonical(p: SuperPoly) -> str:
    """Deterministic text form; ``parse_poly`` inverts it exactly."""
    if not p.terms:
        return "0"
    parts = []
    for key in sorted(p.terms, key=_term_key):
        coeff = p.terms[key]
        mono = _monomial_text(p.table, key)
        mag = abs(coeff)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        parts.append(("-" if coeff < 0 else "+", body))
    sign, body = parts[0]
    out = body if sign == "+" else f"-{body}"
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out
