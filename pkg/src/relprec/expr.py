"""Arithmetic expression trees, a recursive-descent parser, and evaluators.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | '(' expr ')' | NUMBER | IDENT

Decimal literals are converted to rationals exactly, so ``1.1`` is 11/10.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

from .formats import Format, RoundingMode, round_rational


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __str__(self) -> str:
        text = _literal(abs(self.value))
        if self.value < 0:
            return f"(-{text})"
        return text


def _literal(v: Fraction) -> str:
    """Exact decimal text for v >= 0 when it terminates, else a parenthesized quotient."""
    d, twos, fives = v.denominator, 0, 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"({v.numerator}/{v.denominator})"
    digits = max(twos, fives)
    if digits == 0:
        return str(v.numerator)
    scaled = str(v.numerator * 10**digits // v.denominator).rjust(digits + 1, "0")
    return f"{scaled[:-digits]}.{scaled[-digits:]}"


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: "Expr"

    def __str__(self) -> str:
        return f"-{_wrap(self.operand)}"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


Expr = Union[Const, Var, Neg, BinOp]


def _wrap(e: Expr) -> str:
    return str(e) if isinstance(e, (Const, Var, BinOp)) else f"({e})"


def Add(a: Expr, b: Expr) -> BinOp:
    return BinOp("+", a, b)


def Sub(a: Expr, b: Expr) -> BinOp:
    return BinOp("-", a, b)


def Mul(a: Expr, b: Expr) -> BinOp:
    return BinOp("*", a, b)


def Div(a: Expr, b: Expr) -> BinOp:
    return BinOp("/", a, b)


class ParseError(ValueError):
    """Syntax error; ``position`` is the 1-based column of the offending token."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.message = message
        self.position = position


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/()])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unknown token {text[pos]!r}", pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "op" and text == "-":
            return Neg(self.factor())
        if kind == "op" and text == "(":
            inner = self.expr()
            kind, text, pos = self.take()
            if text != ")":
                raise ParseError("expected ')'", pos)
            return inner
        if kind == "number":
            return Const(Fraction(text))
        if kind == "ident":
            return Var(text)
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected {text!r}", pos)


def parse(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    kind, tok, pos = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {tok!r}", pos)
    return e


def variables(e: Expr) -> list[str]:
    """Variable names in first-occurrence order."""
    seen: dict[str, None] = {}

    def walk(n: Expr) -> None:
        if isinstance(n, Var):
            seen.setdefault(n.name)
        elif isinstance(n, Neg):
            walk(n.operand)
        elif isinstance(n, BinOp):
            walk(n.left)
            walk(n.right)

    walk(e)
    return list(seen)


def _apply(op: str, a: Fraction, b: Fraction) -> Fraction:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        raise ZeroDivisionError("division by zero")
    return a / b


def evaluate_exact(e: Expr, values: Mapping[str, Fraction]) -> Fraction:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return values[e.name]
    if isinstance(e, Neg):
        return -evaluate_exact(e.operand, values)
    return _apply(e.op, evaluate_exact(e.left, values), evaluate_exact(e.right, values))


def evaluate_fp(e: Expr, values: Mapping[str, Fraction], f: Format, mode: RoundingMode) -> Fraction:
    """Emulated evaluation: constants and every operation result are rounded.

    Variable values are taken as given (they are assumed representable).
    """
    def rnd(v: Fraction) -> Fraction:
        return round_rational(v, f, mode).to_fraction()

    if isinstance(e, Const):
        return rnd(e.value)
    if isinstance(e, Var):
        return values[e.name]
    if isinstance(e, Neg):
        return -evaluate_fp(e.operand, values, f, mode)
    return rnd(_apply(e.op, evaluate_fp(e.left, values, f, mode), evaluate_fp(e.right, values, f, mode)))


def inner_product_expr(n: int, xs: str = "x", ys: str = "y") -> Expr:
    """``x1*y1 + x2*y2 + ... + xn*yn``, associated to the left."""
    if n < 1:
        raise ValueError("n must be >= 1")
    e: Expr = Mul(Var(f"{xs}1"), Var(f"{ys}1"))
    for k in range(2, n + 1):
        e = Add(e, Mul(Var(f"{xs}{k}"), Var(f"{ys}{k}")))
    return e
