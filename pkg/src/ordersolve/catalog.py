"""Tiny closed-form expression catalog for problem files.

Supported grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') integer)?
    atom   := number | coordinate | jet | func '(' expr ')' | '(' expr ')'

Coordinates are ``x1`` .. ``xn``; jet entries are ``xi(p1,...,pn)`` with one
part per axis, or ``xik`` as one-dimensional sugar (``xi0`` always names the
value entry).  Functions: sin, cos, exp, abs.  Expressions compile to
vectorized evaluators over (points, jets) arrays; this is deliberately a
closed catalog, not a general interpreter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)(?P<expo>[eE][+-]?\d+)?"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


class CatalogSyntaxError(ValueError):
    """Parse failure with 1-based column position."""

    def __init__(self, text: str, pos: int, message: str):
        self.column = pos + 1
        super().__init__(f"column {self.column}: {message} in {text!r}")


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise CatalogSyntaxError(text, pos, "unexpected character")
            break
        if m.group("num") is not None:
            tokens.append(_Token("num", m.group("num") + (m.group("expo") or ""), m.start()))
        elif m.group("name") is not None:
            tokens.append(_Token("name", m.group("name"), m.start()))
        else:
            op = m.group("op")
            tokens.append(_Token("op", "^" if op == "**" else op, m.start()))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str, dims: int, jet_index: dict):
        self.text = text
        self.tokens = _tokenize(text)
        self.k = 0
        self.dims = dims
        self.jet_index = jet_index  # multi-index tuple -> column, or None for rhs

    def error(self, message: str):
        pos = self.tokens[self.k].pos if self.k < len(self.tokens) else len(self.text)
        raise CatalogSyntaxError(self.text, pos, message)

    def peek(self):
        return self.tokens[self.k] if self.k < len(self.tokens) else None

    def accept(self, kind: str, value=None):
        tok = self.peek()
        if tok and tok.kind == kind and (value is None or tok.value == value):
            self.k += 1
            return tok
        return None

    def expect(self, kind: str, value=None):
        tok = self.accept(kind, value)
        if tok is None:
            want = value or kind
            self.error(f"expected {want!r}")
        return tok

    def parse(self):
        node = self.expr()
        if self.peek() is not None:
            self.error("trailing input")
        return node

    def expr(self):
        node = self.term()
        while True:
            if self.accept("op", "+"):
                rhs = self.term()
                node = (lambda a, b: lambda x, xi: a(x, xi) + b(x, xi))(node, rhs)
            elif self.accept("op", "-"):
                rhs = self.term()
                node = (lambda a, b: lambda x, xi: a(x, xi) - b(x, xi))(node, rhs)
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            if self.accept("op", "*"):
                rhs = self.unary()
                node = (lambda a, b: lambda x, xi: a(x, xi) * b(x, xi))(node, rhs)
            elif self.accept("op", "/"):
                rhs = self.unary()
                node = (lambda a, b: lambda x, xi: a(x, xi) / b(x, xi))(node, rhs)
            else:
                return node

    def unary(self):
        if self.accept("op", "-"):
            inner = self.unary()
            return lambda x, xi: -inner(x, xi)
        if self.accept("op", "+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("op", "^"):
            neg = bool(self.accept("op", "-"))
            tok = self.expect("num")
            if any(c in tok.value for c in ".eE"):
                self.error("exponents must be integers")
            exponent = -int(tok.value) if neg else int(tok.value)
            return lambda x, xi: np.power(base(x, xi), exponent)
        return base

    def atom(self):
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of expression")
        if self.accept("op", "("):
            node = self.expr()
            self.expect("op", ")")
            return node
        if tok.kind == "num":
            self.k += 1
            value = float(tok.value)
            return lambda x, xi: value
        if tok.kind == "name":
            self.k += 1
            return self.named(tok)
        self.error("expected a value")

    def named(self, tok: _Token):
        name = tok.value
        if name in _FUNCS:
            fn = _FUNCS[name]
            self.expect("op", "(")
            inner = self.expr()
            self.expect("op", ")")
            return lambda x, xi: fn(inner(x, xi))
        m = re.fullmatch(r"x(\d+)", name)
        if m:
            axis = int(m.group(1))
            if not 1 <= axis <= self.dims:
                self.error(f"coordinate x{axis} outside dimension {self.dims}")
            col = axis - 1
            return lambda x, xi: x[:, col]
        if name == "xi" or re.fullmatch(r"xi\d+", name):
            if self.jet_index is None:
                self.error("jet entries are not allowed in a right-hand side")
            return self.jet_entry(name)
        self.error(f"unknown name {name!r}")

    def jet_entry(self, name: str):
        if name != "xi":
            k = int(name[2:])
            if k == 0:
                p = (0,) * self.dims
            elif self.dims == 1:
                p = (k,)
            else:
                self.error("xiK sugar needs dimension 1; use xi(p1,...,pn)")
        else:
            self.expect("op", "(")
            parts = [int(self.expect("num").value)]
            while self.accept("op", ","):
                parts.append(int(self.expect("num").value))
            self.expect("op", ")")
            if len(parts) != self.dims:
                self.error(f"jet index needs {self.dims} parts")
            p = tuple(parts)
        if p not in self.jet_index:
            self.error(f"derivative order {p} exceeds the declared operator order")
        col = self.jet_index[p]
        return lambda x, xi: xi[:, col]


def compile_operator(text: str, dims: int, jet_index: dict):
    """Compile F(x, jet) -> values; arrays are (k, dims) and (k, #entries)."""
    node = _Parser(text, dims, jet_index).parse()

    def evaluate(x, xi):
        x = np.atleast_2d(np.asarray(x, float))
        xi = np.atleast_2d(np.asarray(xi, float))
        out = node(x, xi)
        return np.broadcast_to(np.asarray(out, float), (x.shape[0],)).copy()

    return evaluate


def compile_rhs(text: str, dims: int):
    """Compile f(x) -> values over (k, dims) point arrays."""
    node = _Parser(text, dims, None).parse()

    def evaluate(x):
        x = np.atleast_2d(np.asarray(x, float))
        out = node(x, None)
        return np.broadcast_to(np.asarray(out, float), (x.shape[0],)).copy()

    return evaluate
