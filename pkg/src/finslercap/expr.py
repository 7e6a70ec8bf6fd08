"""Analytic scalar fields of chart coordinates.

Expressions are written in a small grammar over the variables ``x1 .. xn``::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := number | 'pi' | 'e' | var | func '(' expr ')' | '(' expr ')'

so ``^`` binds tighter than unary minus (``-x1^2 == -(x1^2)``) and is right
associative, while the other binary operators associate to the left.
Supported functions are sin, cos, exp, log, sqrt and tanh.

Evaluation is generic in the value type: plain floats, numpy arrays (a batch
of points) or :class:`~finslercap.jet.Jet` objects, which is how exact first
and second derivatives are obtained.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import jet as J
from .jet import DomainError, Jet

__all__ = [
    "DomainError",
    "ExprSyntaxError",
    "ScalarField",
    "parse",
    "to_string",
    "Num",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
]

FUNCTIONS = {
    "sin": J.sin,
    "cos": J.cos,
    "exp": J.exp,
    "log": J.log,
    "sqrt": J.sqrt,
    "tanh": J.tanh,
}
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.text = text


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    index: int  # 0-based; printed as x{index+1}


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Const, Var, Neg, BinOp, Call]


# --- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos), text)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, nvars: int | None):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.nvars = nvars

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ExprSyntaxError(message, _byte_offset(self.text, tok.pos), self.text)

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok.kind == "op" and tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            tok = self.peek()
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise self.error(f"expected {text!r}, found {found}")

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            if tok.text == ")":
                raise self.error("unbalanced parenthesis")
            raise self.error(f"unexpected token {tok.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.next()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "name":
            name = tok.text
            if name in FUNCTIONS:
                if not self.accept("("):
                    raise self.error(f"expected '(' after {name}")
                if self.peek().kind == "op" and self.peek().text == ")":
                    raise self.error(f"empty argument list for {name}")
                arg = self.expr()
                if self.peek().kind == "op" and self.peek().text == ",":
                    raise self.error(f"{name} takes exactly one argument")
                if self.peek().kind == "end":
                    raise self.error("unbalanced parenthesis")
                self.expect(")")
                return Call(name, arg)
            if name in CONSTANTS:
                return Const(name)
            m = re.fullmatch(r"x([1-9][0-9]*)", name)
            if m:
                idx = int(m.group(1)) - 1
                if self.nvars is not None and idx >= self.nvars:
                    raise self.error(f"unknown identifier {name!r} (dimension is {self.nvars})", tok)
                return Var(idx)
            raise self.error(f"unknown identifier {name!r}", tok)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            if self.peek().kind == "end":
                raise self.error("unbalanced parenthesis")
            self.expect(")")
            return node
        if tok.kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected token {tok.text!r}", tok)


# --- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_string(node: Node) -> str:
    """Render an AST with the minimal parentheses that re-parse to the same tree."""
    return _fmt(node)[0]


def _fmt(node: Node) -> tuple[str, int]:
    if isinstance(node, Num):
        return repr(float(node.value)), 5
    if isinstance(node, Const):
        return node.name, 5
    if isinstance(node, Var):
        return f"x{node.index + 1}", 5
    if isinstance(node, Call):
        return f"{node.func}({_fmt(node.arg)[0]})", 5
    if isinstance(node, Neg):
        s, p = _fmt(node.operand)
        # operand of unary minus may itself be a unary minus or a power
        return "-" + (s if p >= _PREC["neg"] else f"({s})"), _PREC["neg"]
    op = node.op
    prec = _PREC[op]
    ls, lp = _fmt(node.left)
    rs, rp = _fmt(node.right)
    if op == "^":
        # base must be an atom; exponent may be a unary or power
        if lp < 5:
            ls = f"({ls})"
        if rp < _PREC["neg"]:
            rs = f"({rs})"
    else:
        if lp < prec:
            ls = f"({ls})"
        if rp <= prec:
            rs = f"({rs})"
    return f"{ls}{op}{rs}", prec


# --- evaluation ------------------------------------------------------------


def _has_vars(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Neg):
        return _has_vars(node.operand)
    if isinstance(node, Call):
        return _has_vars(node.arg)
    if isinstance(node, BinOp):
        return _has_vars(node.left) or _has_vars(node.right)
    return False


def _max_var(node: Node) -> int:
    if isinstance(node, Var):
        return node.index + 1
    if isinstance(node, Neg):
        return _max_var(node.operand)
    if isinstance(node, Call):
        return _max_var(node.arg)
    if isinstance(node, BinOp):
        return max(_max_var(node.left), _max_var(node.right))
    return 0


def _eval(node: Node, xs):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        return xs[node.index]
    if isinstance(node, Neg):
        return -_eval(node.operand, xs)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_eval(node.arg, xs))
    a = _eval(node.left, xs)
    op = node.op
    if op == "^":
        if _has_vars(node.right):
            # variable exponent: a^b := exp(b log a), a > 0
            b = _eval(node.right, xs)
            return J.exp(b * J.log(a))
        return J.power(a, _eval(node.right, xs))
    b = _eval(node.right, xs)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    return J.divide(a, b)


@dataclass(frozen=True)
class ScalarField:
    """A parsed expression; immutable, evaluation is a pure function."""

    ast: Node
    text: str = ""

    @property
    def nvars(self) -> int:
        """Smallest dimension in which the field is defined."""
        return _max_var(self.ast)

    @property
    def is_constant(self) -> bool:
        return not _has_vars(self.ast)

    def __str__(self):
        return self.text or to_string(self.ast)

    def _check_dim(self, n):
        if n < self.nvars:
            raise ValueError(f"expression {self} needs {self.nvars} coordinates, got {n}")

    def eval(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        self._check_dim(x.shape[-1])
        with np.errstate(all="ignore"):
            out = _eval(self.ast, [x[..., i] for i in range(x.shape[-1])])
        out = np.broadcast_to(np.asarray(out, dtype=float), x.shape[:-1])
        if not np.all(np.isfinite(out)):
            raise DomainError(f"non-finite value of {self}")
        return float(out) if out.ndim == 0 else np.array(out)

    def evaluate(self, xs):
        """Evaluate on a list of coordinate components (arrays or jets)."""
        self._check_dim(len(xs))
        return _eval(self.ast, xs)

    def jet(self, x: Sequence[float]) -> Jet:
        x = np.asarray(x, dtype=float)
        self._check_dim(x.shape[-1])
        xs = Jet.variables([x[..., i] for i in range(x.shape[-1])])
        out = _eval(self.ast, xs)
        if not isinstance(out, Jet):
            shape = x.shape[:-1]
            k = x.shape[-1]
            out = Jet(np.full(shape, float(out)), np.zeros((k,) + shape), np.zeros((k, k) + shape))
        return out

    def gradient(self, x):
        return self.jet(x).grad

    def hessian(self, x):
        return self.jet(x).hess

    def derivative(self, x: Sequence[float], idx: Sequence[int]) -> float:
        """Exact first or second partial derivative.

        ``idx`` lists 0-based coordinate indices, e.g. ``(0,)`` for d/dx1 and
        ``(0, 1)`` for d^2/dx1 dx2.
        """
        idx = tuple(int(i) for i in idx)
        if len(idx) not in (1, 2):
            raise ValueError("only first and second derivatives are available")
        with np.errstate(all="ignore"):
            jt = self.jet(x)
        d = jt.grad[idx[0]] if len(idx) == 1 else jt.hess[idx[0], idx[1]]
        if not np.all(np.isfinite(d)):
            raise DomainError(f"non-finite derivative of {self}")
        return float(d) if np.ndim(d) == 0 else np.array(d)


def parse(text: str, nvars: int | None = None) -> ScalarField:
    """Parse ``text`` into a :class:`ScalarField`.

    If ``nvars`` is given, references to coordinates beyond ``x{nvars}`` are
    rejected as unknown identifiers.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 0, text if isinstance(text, str) else "")
    return ScalarField(_Parser(text, nvars).parse(), text)


def constant(value: float) -> ScalarField:
    return ScalarField(Num(float(value)), repr(float(value)))
