"""Closed-form expressions in one variable ``q``.

The grammar is deliberately tiny: decimal numbers, the variable ``q``,
binary ``+ - * / ^``, unary minus, ``sqrt(...)`` and parentheses.  That is
enough to express every purchasing-cost, transport-cost and price curve
this package works with (linear pieces, reciprocals like ``4500/q``,
square-root terms like ``50/sqrt(q)``).

Grammar (EBNF, also documented in docs/situation-format.md)::

    expr   = term   { ("+" | "-") term } ;
    term   = unary  { ("*" | "/") unary } ;
    unary  = "-" unary | power ;
    power  = atom [ "^" unary ] ;            (* right associative *)
    atom   = NUMBER | "q" | "sqrt" "(" expr ")" | "(" expr ")" ;

Parsed expressions are immutable.  Evaluation follows IEEE-754 semantics:
``x/0`` yields a signed infinity rather than raising, so a curve such as
``20/sqrt(2*q)`` is well defined (as ``+inf``) at ``q = 0``.  Evaluation
accepts scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Expression", "ExpressionError", "parse_expression"]


class ExpressionError(ValueError):
    """Malformed expression text; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


# ---------------------------------------------------------------------------
# AST nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Num:
    value: float

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class _Var:
    def __str__(self) -> str:
        return "q"


@dataclass(frozen=True)
class _Neg:
    operand: object

    def __str__(self) -> str:
        return f"(-{self.operand})"


@dataclass(frozen=True)
class _Sqrt:
    operand: object

    def __str__(self) -> str:
        return f"sqrt({self.operand})"


@dataclass(frozen=True)
class _BinOp:
    op: str
    left: object
    right: object

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


def _eval_node(node, q):
    if isinstance(node, _Num):
        return node.value
    if isinstance(node, _Var):
        return q
    if isinstance(node, _Neg):
        return -_eval_node(node.operand, q)
    if isinstance(node, _Sqrt):
        return np.sqrt(_eval_node(node.operand, q))
    left = _eval_node(node.left, q)
    right = _eval_node(node.right, q)
    op = node.op
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if op == "/":
        return np.divide(left, right)
    return np.power(left, right)


def _contains_var(node) -> bool:
    if isinstance(node, _Var):
        return True
    if isinstance(node, (_Num,)):
        return False
    if isinstance(node, (_Neg, _Sqrt)):
        return _contains_var(node.operand)
    return _contains_var(node.left) or _contains_var(node.right)


# ---------------------------------------------------------------------------
# Tokenizer / recursive-descent parser
# ---------------------------------------------------------------------------

_OPS = set("+-*/^")


def _tokenize(text: str):
    tokens = []  # (kind, value, offset)
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t":
            i += 1
        elif ch in _OPS or ch in "()":
            tokens.append((ch, ch, i))
            i += 1
        elif ch.isdigit() or ch == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            # exponent part, e.g. 1.5e-3
            if j < n and text[j] in "eE" and (
                j + 1 < n and (text[j + 1].isdigit() or text[j + 1] in "+-")
            ):
                j += 2
                while j < n and text[j].isdigit():
                    j += 1
            try:
                value = float(text[i:j])
            except ValueError:
                raise ExpressionError(f"bad number {text[i:j]!r}", i) from None
            tokens.append(("num", value, i))
            i = j
        elif ch.isalpha():
            j = i
            while j < n and text[j].isalnum():
                j += 1
            name = text[i:j]
            if name not in ("q", "sqrt"):
                raise ExpressionError(f"unknown identifier {name!r}", i)
            tokens.append((name, name, i))
            i = j
        else:
            raise ExpressionError(f"unexpected character {ch!r}", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ExpressionError(f"expected {kind!r}, found {tok[0]!r}", tok[2])
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionError(f"trailing input {tok[0]!r}", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            node = _BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            node = _BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "-":
            self.take()
            return _Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek()[0] == "^":
            self.take()
            node = _BinOp("^", node, self.unary())
        return node

    def atom(self):
        kind, value, offset = self.peek()
        if kind == "num":
            self.take()
            return _Num(value)
        if kind == "q":
            self.take()
            return _Var()
        if kind == "sqrt":
            self.take()
            self.take("(")
            inner = self.expr()
            self.take(")")
            return _Sqrt(inner)
        if kind == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        raise ExpressionError(f"unexpected {kind!r}", offset)


# ---------------------------------------------------------------------------
# Public wrapper
# ---------------------------------------------------------------------------


class Expression:
    """An immutable, evaluable expression in the variable ``q``."""

    __slots__ = ("root", "text", "_fn", "is_constant")

    def __init__(self, root, text: str):
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "text", text)
        object.__setattr__(self, "is_constant", not _contains_var(root))
        # Compiled form: the printed AST contains only numbers, q, operators
        # and sqrt, so evaluating it is safe and ~10x faster than recursion.
        src = str(root).replace("^", "**")
        fn = eval(f"lambda q: ({src})", {"__builtins__": {}, "sqrt": np.sqrt})
        object.__setattr__(self, "_fn", fn)

    def __setattr__(self, name, value):
        raise AttributeError("Expression is immutable")

    def __call__(self, q):
        """Evaluate at a scalar or numpy array; x/0 gives signed inf."""
        with np.errstate(divide="ignore", invalid="ignore"):
            try:
                out = self._fn(q)
            except ZeroDivisionError:
                # pure-python floats only; numpy operands never raise
                return math.inf
        if np.isscalar(q) and not isinstance(out, (float, np.floating)):
            return float(out)
        return out

    def eval_ast(self, q):
        """Reference evaluator walking the AST (used to cross-check _fn)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            try:
                return _eval_node(self.root, q)
            except ZeroDivisionError:
                return math.inf

    def __str__(self) -> str:
        return str(self.root)

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and self.root == other.root

    def __hash__(self) -> int:
        return hash(str(self.root))


def parse_expression(text: str) -> Expression:
    """Parse expression text into an :class:`Expression`.

    Raises :class:`ExpressionError` (with byte offset) on syntax errors or
    identifiers other than ``q``/``sqrt``.  Round trip is stable:
    ``parse_expression(str(e))`` is structurally equal to ``e``.
    """
    if not isinstance(text, str):
        raise ExpressionError(f"expected string, got {type(text).__name__}", 0)
    root = _Parser(_tokenize(text)).parse()
    return Expression(root, text)
