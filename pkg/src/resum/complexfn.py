"""Branch-cut aware complex functions and a small expression language.

Two branch conventions are used throughout:

* ``principal``: the usual cut along the negative real axis, arg in (-pi, pi].
* ``slit``: cut along the positive real axis, arg in (0, 2pi).  The upper edge
  of the cut is approached with arg -> 0+, the lower edge with arg -> 2pi-.

One-sided values on a cut are obtained by nudging the point off the cut by a
relative offset of 1e-150 in the direction of the requested side.  The offset
is far below double-precision resolution of the real part, so it only acts
through the sign of imaginary parts inside ``log``.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

CUT_TOL = 1e-12
_SIDE_OFFSET = 1e-150


class Side(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"
    OFF = "off"

    @classmethod
    def parse(cls, text: str) -> "Side":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown side {text!r}; expected upper, lower or off") from None


class BranchError(ValueError):
    """Evaluation at a branch point or with an inconsistent side."""


# ---------------------------------------------------------------------------
# slit-plane primitives

def log_slit(w):
    """Logarithm with arg in (0, 2pi)."""
    return np.log(-np.asarray(w, dtype=complex)) + 1j * np.pi


def sqrt_slit(w):
    return np.exp(0.5 * log_slit(w))


def pow_slit(w, e):
    return np.exp(e * log_slit(w))


def pow_principal(w, e):
    w = np.asarray(w, dtype=complex)
    return np.exp(e * np.log(w))


# ---------------------------------------------------------------------------
# expression AST

@dataclass(frozen=True)
class Num:
    value: complex


@dataclass(frozen=True)
class Var:
    name: str = "p"


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    branch: str | None = None


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}

# name -> (arity, branch tag, evaluator)
_ELEMENTARY = {
    "exp": (1, None, np.exp),
    "ln": (1, "principal", np.log),
    "sqrt": (1, "principal", np.sqrt),
    "pow": (2, "principal", pow_principal),
    "ln_slit": (1, "slit", log_slit),
    "sqrt_slit": (1, "slit", sqrt_slit),
    "pow_slit": (2, "slit", pow_slit),
}

# Named kernels callable from expressions; filled in by resum.kernels.
BUILTIN_FUNCTIONS: dict[str, Callable] = {}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?i?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/(),]))"
)


def _tokenize(src: str):
    pos = 0
    tokens = []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value:
            raise ExprSyntaxError(f"expected {value!r}", pos)

    def parse(self) -> Expr:
        expr = self.sum()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return expr

    def sum(self):
        left = self.product()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            left = BinOp(op, left, self.product())
        return left

    def product(self):
        left = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.atom()

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            if text.endswith("i"):
                return Num(complex(0.0, float(text[:-1])))
            return Num(complex(float(text)))
        if kind == "name":
            if self.peek()[1] == "(":
                return self.call(text, pos)
            if text == "p":
                return Var()
            if text == "i":
                return Num(1j)
            if text in CONSTANTS:
                return Const(text)
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
        if text == "(":
            inner = self.sum()
            self.expect(")")
            return inner
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", pos)

    def call(self, name, pos):
        self.expect("(")
        args = [self.sum()]
        while self.peek()[1] == ",":
            self.take()
            args.append(self.sum())
        self.expect(")")
        if name in _ELEMENTARY:
            arity, branch, _ = _ELEMENTARY[name]
        elif name in BUILTIN_FUNCTIONS:
            arity, branch = 1, None
        else:
            raise ExprSyntaxError(f"unknown identifier {name!r}", pos)
        if len(args) != arity:
            raise ExprSyntaxError(f"{name} takes {arity} argument(s)", pos)
        return Call(name, tuple(args), branch)


def parse_expr(src: str) -> Expr:
    """Parse a kernel expression in the variable ``p``.

    >>> parse_expr("ln(1+p)")
    Call(name='ln', args=(BinOp(op='+', left=Num(value=(1+0j)), right=Var(name='p')),), branch='principal')
    """
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(src).parse()


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def pretty(expr: Expr, parent: int = 0, right: bool = False) -> str:
    """Inverse of :func:`parse_expr` up to whitespace and redundant parentheses."""
    if isinstance(expr, Num):
        v = expr.value
        if v.imag == 0:
            s, prec = _fmt_real(v.real), 4
            if v.real < 0:
                s, prec = s, 3
        elif v.real == 0:
            s, prec = ("i" if v.imag == 1 else _fmt_real(v.imag) + "i"), 4
            if v.imag < 0:
                prec = 3
        else:
            s, prec = f"{_fmt_real(v.real)}+{_fmt_real(v.imag)}i", 1
        return f"({s})" if prec < parent or (prec == parent and right) else s
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Const):
        return expr.name
    if isinstance(expr, Neg):
        s = "-" + pretty(expr.arg, 3)
        return f"({s})" if parent >= 3 or (parent > 1) else s
    if isinstance(expr, BinOp):
        prec = _PREC[expr.op]
        s = pretty(expr.left, prec) + expr.op + pretty(expr.right, prec, right=True)
        return f"({s})" if prec < parent or (prec == parent and right) else s
    if isinstance(expr, Call):
        return f"{expr.name}(" + ",".join(pretty(a) for a in expr.args) + ")"
    raise TypeError(f"not an expression node: {expr!r}")


def compile_expr(expr: Expr) -> Callable[[np.ndarray], np.ndarray]:
    """Turn an AST into a vectorized evaluator over complex arrays."""
    if isinstance(expr, Num):
        v = expr.value
        return lambda p: np.full(np.shape(p), v, dtype=complex)
    if isinstance(expr, Var):
        return lambda p: np.asarray(p, dtype=complex)
    if isinstance(expr, Const):
        v = CONSTANTS[expr.name]
        return lambda p: np.full(np.shape(p), v, dtype=complex)
    if isinstance(expr, Neg):
        f = compile_expr(expr.arg)
        return lambda p: -f(p)
    if isinstance(expr, BinOp):
        a, b = compile_expr(expr.left), compile_expr(expr.right)
        op = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide}[expr.op]
        return lambda p: op(a(p), b(p))
    if isinstance(expr, Call):
        args = [compile_expr(a) for a in expr.args]
        if expr.name in _ELEMENTARY:
            fn = _ELEMENTARY[expr.name][2]
        else:
            fn = BUILTIN_FUNCTIONS[expr.name]
        return lambda p: np.asarray(fn(*(g(p) for g in args)), dtype=complex)
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchedFunction:
    """A function on the plane slit along one ray.

    ``func`` must be the analytic expression of the function on the slit
    plane, vectorized over complex arrays; one-sided limits on the cut are
    produced here, not by ``func``.
    """

    func: Callable[[np.ndarray], np.ndarray]
    cut_origin: complex = 0j
    cut_direction: complex = 1 + 0j
    label: str = ""
    body: Expr | None = field(default=None, compare=False)

    def __post_init__(self):
        d = complex(self.cut_direction)
        if d == 0:
            raise ValueError("cut direction must be nonzero")
        object.__setattr__(self, "cut_direction", d / abs(d))
        object.__setattr__(self, "cut_origin", complex(self.cut_origin))

    @classmethod
    def from_expr(cls, src: str, cut_origin: complex = 0j, cut_direction: complex = 1 + 0j):
        expr = parse_expr(src)
        return cls(compile_expr(expr), cut_origin, cut_direction, label=pretty(expr), body=expr)

    def _local(self, point):
        # coordinate in which the cut is the positive real axis
        return (np.asarray(point, dtype=complex) - self.cut_origin) / self.cut_direction

    def on_cut(self, point) -> np.ndarray:
        w = self._local(point)
        scale = 1.0 + np.abs(np.asarray(point, dtype=complex))
        dist = np.where(w.real >= 0, np.abs(w.imag), np.abs(w))
        return dist < CUT_TOL * scale

    def __call__(self, point, side: Side = Side.OFF):
        pts = np.asarray(point, dtype=complex)
        scale = 1.0 + np.abs(pts)
        w = self._local(pts)
        if np.any(np.abs(w) < CUT_TOL * scale):
            raise BranchError("evaluation at the branch point")
        on = self.on_cut(pts)
        if side is Side.OFF:
            if np.any(on):
                raise BranchError("point lies on the cut; an upper or lower side is required")
            out = self.func(pts)
        else:
            sign = 1.0 if side is Side.UPPER else -1.0
            # snap onto the ray, then step off it to the requested side
            snapped = np.where(on, self.cut_origin + self.cut_direction * w.real, pts)
            nudged = snapped + sign * 1j * self.cut_direction * _SIDE_OFFSET * scale
            out = self.func(np.where(on, nudged, pts))
        return out if np.ndim(point) else complex(out)

    def jump(self, point):
        """Upper minus lower boundary value on the cut."""
        return self(point, Side.UPPER) - self(point, Side.LOWER)


def eval_branched(f: BranchedFunction, point, side: Side = Side.OFF):
    return f(point, side)


def scalar(fn: Callable[[np.ndarray], np.ndarray]) -> Callable[[complex], complex]:
    """Wrap a vectorized function for scalar use."""
    return lambda z: complex(fn(np.asarray([z], dtype=complex))[0])

