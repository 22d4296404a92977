"""Tiny recursive-descent parser for scalar-field expressions.

Grammar (usual precedence, ``^`` binds tightest and is right-associative)::

    expr  := term  (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('+' | '-') unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | VARIABLE | FUNC '(' expr ')' | '(' expr ')'

Supported functions: exp, log, sin, cos, abs.  The single free variable is
named ``x`` by default.  Compilation produces a closure built on numpy ufuncs,
so the resulting callable accepts floats and arrays alike.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ExpressionError

_FUNCTIONS = {
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
}

_TOKEN_CHARS = set("+-*/^()")


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in _TOKEN_CHARS:
            tokens.append(("op", c, i))
            i += 1
        elif c.isdigit() or c == ".":
            j = i
            seen_e = False
            while j < n and (text[j].isdigit() or text[j] == "." or text[j] in "eE"
                             or (seen_e and text[j] in "+-" and text[j - 1] in "eE")):
                if text[j] in "eE":
                    seen_e = True
                j += 1
            try:
                value = float(text[i:j])
            except ValueError:
                raise ExpressionError(f"bad numeric literal {text[i:j]!r}", i)
            tokens.append(("num", value, i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
        else:
            raise ExpressionError(f"unexpected character {c!r}", i)
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, object, int]], variable: str):
        self.tokens = tokens
        self.pos = 0
        self.variable = variable

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None, -1)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, val, at = self.take()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected {op!r}", at)

    def parse(self) -> Callable:
        fn = self.expr()
        kind, val, at = self.peek()
        if kind is not None:
            raise ExpressionError(f"unexpected trailing token {val!r}", at)
        return fn

    def expr(self) -> Callable:
        left = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                right = self.term()
                if val == "+":
                    left = (lambda a, b: lambda x: a(x) + b(x))(left, right)
                else:
                    left = (lambda a, b: lambda x: a(x) - b(x))(left, right)
            else:
                return left

    def term(self) -> Callable:
        left = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                right = self.unary()
                if val == "*":
                    left = (lambda a, b: lambda x: a(x) * b(x))(left, right)
                else:
                    left = (lambda a, b: lambda x: a(x) / b(x))(left, right)
            else:
                return left

    def unary(self) -> Callable:
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            inner = self.unary()
            if val == "-":
                return lambda x: -inner(x)
            return inner
        return self.power()

    def power(self) -> Callable:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            exponent = self.unary()
            return lambda x: base(x) ** exponent(x)
        return base

    def atom(self) -> Callable:
        kind, val, at = self.take()
        if kind == "num":
            const = float(val)
            return lambda x: np.full_like(np.asarray(x, dtype=float), const) if np.ndim(x) else const
        if kind == "name":
            if val == self.variable:
                return lambda x: np.asarray(x, dtype=float) if np.ndim(x) else float(x)
            if val in _FUNCTIONS:
                fn = _FUNCTIONS[val]
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return lambda x: fn(arg(x))
            raise ExpressionError(f"unknown name {val!r}", at)
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ExpressionError("unexpected end of expression" if kind is None
                              else f"unexpected token {val!r}", at)


def compile_expression(text: str, variable: str = "x") -> Callable:
    """Compile ``text`` into a vectorized callable of one variable."""
    tokens = _tokenize(text)
    if not tokens:
        raise ExpressionError("empty expression")
    return _Parser(tokens, variable).parse()
