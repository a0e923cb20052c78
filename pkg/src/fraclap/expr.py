"""A tiny expression language for scalar fields in config files.

Grammar (loosest first)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          # right-associative
    atom   := number | name | name "(" expr ("," expr)* ")" | "(" expr ")"

Names are x1, x2, x3 and rnorm (= |x|).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import ArgumentError, Ball, FieldEvaluationError, FracLapError, Interface, ScalarField

MAX_SOURCE = 64 * 1024
MAX_DEPTH = 100
# tree depth limit keeps the recursive passes far from the interpreter's stack limit
MAX_TREE_DEPTH = 200

VARIABLES = ("x1", "x2", "x3", "rnorm")
# name -> (min arity, max arity)
FUNCTIONS = {
    "abs": (1, 1), "exp": (1, 1), "log": (1, 1), "sin": (1, 1), "cos": (1, 1), "sqrt": (1, 1),
    "pospart": (1, 1), "min": (2, None), "max": (2, None),
}


class ExprError(FracLapError, ValueError):
    def __init__(self, message: str, offset: Optional[int] = None):
        super().__init__(message if offset is None else f"{message} at offset {offset}")
        self.offset = offset


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifierError(ExprError):
    pass


class ArityError(ExprError):
    pass


# -- tree ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Neg, Bin, Call]


# -- lexer ----------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int  # 1-based byte offset


def _lex(src: str) -> list:
    toks, pos, off = [], 0, 1
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", off)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), off))
        off += len(m.group().encode("utf-8"))
        pos = m.end()
    toks.append(_Tok("end", "", off))
    return toks


# -- parser ---------------------------------------------------------------------


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0
        self.depth = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        if self.tok.text != text or self.tok.kind != "op":
            raise ExprSyntaxError(f"expected {text!r}, found {self._desc()}", self.tok.offset)
        return self.take()

    def _desc(self) -> str:
        return "end of input" if self.tok.kind == "end" else repr(self.tok.text)

    def _enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ExprSyntaxError("expression nested too deeply", self.tok.offset)

    def expr(self) -> Expr:
        self._enter()
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.take().text
            node = Bin(op, node, self.term())
        self.depth -= 1
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.take().text
            node = Bin(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.take()
            self._enter()
            node = Neg(self.unary())
            self.depth -= 1
            return node
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            self._enter()
            node = Bin("^", base, self.unary())
            self.depth -= 1
            return node
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.take()
            v = float(t.text)
            if not np.isfinite(v):
                raise ExprSyntaxError(f"numeric literal {t.text!r} out of range", t.offset)
            return Num(v)
        if t.kind == "name":
            self.take()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(t)
            if t.text in VARIABLES:
                return Var(t.text)
            if t.text in FUNCTIONS:
                raise ExprSyntaxError(f"expected '(' after function {t.text!r}", self.tok.offset)
            raise UnknownIdentifierError(f"unknown identifier {t.text!r}", t.offset)
        if t.kind == "op" and t.text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"expected a number, name or '(', found {self._desc()}", t.offset)

    def call(self, name: _Tok) -> Expr:
        if name.text not in FUNCTIONS:
            raise UnknownIdentifierError(f"unknown function {name.text!r}", name.offset)
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.take()
            args.append(self.expr())
        self.expect(")")
        lo, hi = FUNCTIONS[name.text]
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = str(lo) if hi == lo else f"at least {lo}"
            raise ArityError(f"{name.text} takes {want} argument(s), got {len(args)}", name.offset)
        return Call(name.text, tuple(args))


def parse(src: str) -> Expr:
    if not isinstance(src, str) or not src.strip():
        raise ExprSyntaxError("empty expression", 1)
    if len(src.encode("utf-8")) > MAX_SOURCE:
        raise ExprSyntaxError("expression source exceeds 64 KiB")
    p = _Parser(_lex(src))
    node = p.expr()
    if p.tok.kind != "end":
        raise ExprSyntaxError(f"expected an operator or end of input, found {p._desc()}", p.tok.offset)
    if _depth(node) > MAX_TREE_DEPTH:
        raise ExprSyntaxError(f"expression tree deeper than {MAX_TREE_DEPTH} levels")
    return node


def _children(e: Expr) -> tuple:
    if isinstance(e, Neg):
        return (e.arg,)
    if isinstance(e, Bin):
        return (e.left, e.right)
    if isinstance(e, Call):
        return e.args
    return ()


def _depth(root: Expr) -> int:
    best, stack = 0, [(root, 1)]
    while stack:
        e, d = stack.pop()
        best = max(best, d)
        stack.extend((c, d + 1) for c in _children(e))
    return best


def unparse(e: Expr) -> str:
    """Fully parenthesized source that parses back to the same tree."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{unparse(e.arg)})"
    if isinstance(e, Bin):
        return f"({unparse(e.left)} {e.op} {unparse(e.right)})"
    return f"{e.name}({', '.join(unparse(a) for a in e.args)})"


def variables(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, Bin):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return set().union(*(variables(a) for a in e.args))
    return set()


# -- compilation ----------------------------------------------------------------

_UNARY = {"abs": np.abs, "exp": np.exp, "log": np.log, "sin": np.sin, "cos": np.cos, "sqrt": np.sqrt,
          "pospart": lambda t: np.maximum(t, 0.0)}
_BINARY = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide, "^": np.power}


def _checked(vals: np.ndarray, P: np.ndarray, what: str) -> np.ndarray:
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise FieldEvaluationError(f"{what} is not finite at {P[i].tolist()}", P[i])
    return vals


def _evaluate(e: Expr, P: np.ndarray) -> np.ndarray:
    if isinstance(e, Num):
        return np.full(P.shape[0], e.value)
    if isinstance(e, Var):
        if e.name == "rnorm":
            return np.sqrt(np.einsum("ij,ij->i", P, P))
        return P[:, int(e.name[1]) - 1].copy()
    if isinstance(e, Neg):
        return -_evaluate(e.arg, P)
    with np.errstate(all="ignore"):
        if isinstance(e, Bin):
            out = _BINARY[e.op](_evaluate(e.left, P), _evaluate(e.right, P))
            return _checked(out, P, f"operator {e.op!r}")
        args = [_evaluate(a, P) for a in e.args]
        if e.name == "min":
            out = np.minimum.reduce(args)
        elif e.name == "max":
            out = np.maximum.reduce(args)
        else:
            out = _UNARY[e.name](args[0])
        return _checked(out, P, f"{e.name}(...)")


@dataclass(frozen=True)
class FieldSpec:
    expression: Union[Expr, str]
    dimension: int
    support: Optional[Ball] = None
    decay: Optional[tuple] = None
    holder_hint: Optional[float] = None
    interface_radii: tuple = ()

    def __post_init__(self):
        if isinstance(self.expression, str):
            object.__setattr__(self, "expression", parse(self.expression))
        if self.dimension not in (2, 3):
            raise ArgumentError("field dimension must be 2 or 3")
        used = variables(self.expression)
        for v in used - {"rnorm"}:
            if int(v[1]) > self.dimension:
                raise ArgumentError(f"variable {v} exceeds dimension {self.dimension}")


def compile(spec: FieldSpec) -> ScalarField:  # noqa: A001 - mirrors the operation name
    e = spec.expression
    ifs = tuple(Interface((0.0,) * spec.dimension, r) for r in spec.interface_radii)
    smooth = None if spec.holder_hint is None else "holder"
    return ScalarField(lambda P: _evaluate(e, P), spec.dimension, support=spec.support, decay=spec.decay,
                       smoothness=smooth, holder_alpha=spec.holder_hint, interfaces=ifs, label=unparse(e))
