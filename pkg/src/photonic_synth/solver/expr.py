"""Small expression trees for nonlinear real constraints.

Polynomials from the photonics encoding and the occasional transcendental
constraint both lower to these nodes before being compiled to a tape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

import numpy as np

from . import kernels as K


class Expr:
    def __add__(self, other):
        return Add(self, wrap(other))

    def __radd__(self, other):
        return Add(wrap(other), self)

    def __sub__(self, other):
        return Sub(self, wrap(other))

    def __rsub__(self, other):
        return Sub(wrap(other), self)

    def __mul__(self, other):
        return Mul(self, wrap(other))

    def __rmul__(self, other):
        return Mul(wrap(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n):
        if isinstance(n, int) and n >= 0:
            return Pow(self, n)
        raise TypeError("only non-negative integer powers of expressions are supported")

    def __rpow__(self, base):
        # base ** self for a positive constant base
        if not isinstance(base, Real) or base <= 0:
            raise TypeError("exponential base must be a positive constant")
        return Exp(Mul(Const.enclosing(math.log(base)), self))

    def variables(self) -> set[str]:
        out: set[str] = set()
        _collect(self, out)
        return out


@dataclass(frozen=True, eq=False)
class Const(Expr):
    lo: float
    hi: float

    @classmethod
    def exact(cls, value: float) -> "Const":
        return cls(float(value), float(value))

    @classmethod
    def enclosing(cls, value: float) -> "Const":
        """One-ulp enclosure of a value that was itself rounded."""
        v = float(value)
        return cls(float(np.nextafter(v, -np.inf)), float(np.nextafter(v, np.inf)))


@dataclass(frozen=True, eq=False)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=False)
class Add(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, eq=False)
class Sub(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, eq=False)
class Mul(Expr):
    a: Expr
    b: Expr


@dataclass(frozen=True, eq=False)
class Neg(Expr):
    a: Expr


@dataclass(frozen=True, eq=False)
class Pow(Expr):
    a: Expr
    n: int


@dataclass(frozen=True, eq=False)
class Exp(Expr):
    a: Expr


@dataclass(frozen=True, eq=False)
class Log(Expr):
    a: Expr


@dataclass(frozen=True, eq=False)
class Sin(Expr):
    a: Expr


@dataclass(frozen=True, eq=False)
class Cos(Expr):
    a: Expr


@dataclass(frozen=True, eq=False)
class Sqrt(Expr):
    a: Expr


def wrap(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if hasattr(x, "to_expr"):
        return x.to_expr()
    if isinstance(x, Real):
        return Const.exact(float(x))
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def sin(x) -> Expr:
    return Sin(wrap(x))


def cos(x) -> Expr:
    return Cos(wrap(x))


def exp(x) -> Expr:
    return Exp(wrap(x))


def log(x) -> Expr:
    return Log(wrap(x))


def sqrt(x) -> Expr:
    return Sqrt(wrap(x))


_UNARY = {Neg: K.OP_NEG, Exp: K.OP_EXP, Log: K.OP_LOG, Sin: K.OP_SIN, Cos: K.OP_COS, Sqrt: K.OP_SQRT}
_BINARY = {Add: K.OP_ADD, Sub: K.OP_SUB, Mul: K.OP_MUL}


def _collect(e: Expr, out: set):
    if isinstance(e, Var):
        out.add(e.name)
    elif isinstance(e, Const):
        return
    else:
        for child in ("a", "b"):
            if hasattr(e, child):
                _collect(getattr(e, child), out)


class TapeBuilder:
    """Accumulates expression trees into one flat tape."""

    def __init__(self, var_index: dict[str, int]):
        self.var_index = var_index
        self.op: list[int] = []
        self.a: list[int] = []
        self.b: list[int] = []
        self.arg: list[int] = []
        self.clo: list[float] = []
        self.chi: list[float] = []

    def _push(self, op, a=-1, b=-1, arg=0, lo=0.0, hi=0.0) -> int:
        self.op.append(op)
        self.a.append(a)
        self.b.append(b)
        self.arg.append(arg)
        self.clo.append(lo)
        self.chi.append(hi)
        return len(self.op) - 1

    def emit(self, e: Expr) -> int:
        # iterative post-order so deep sums do not hit the recursion limit
        stack: list[tuple[Expr, bool]] = [(e, False)]
        index: dict[int, int] = {}
        while stack:
            node, ready = stack.pop()
            if isinstance(node, Const):
                index[id(node)] = self._push(K.OP_CONST, lo=node.lo, hi=node.hi)
            elif isinstance(node, Var):
                if node.name not in self.var_index:
                    raise KeyError(f"undeclared variable {node.name!r}")
                index[id(node)] = self._push(K.OP_VAR, arg=self.var_index[node.name])
            elif not ready:
                stack.append((node, True))
                if hasattr(node, "b"):
                    stack.append((node.b, False))
                stack.append((node.a, False))
            elif isinstance(node, Pow):
                index[id(node)] = self._push(K.OP_POWI, a=index[id(node.a)], arg=node.n)
            elif type(node) in _BINARY:
                index[id(node)] = self._push(
                    _BINARY[type(node)], a=index[id(node.a)], b=index[id(node.b)]
                )
            elif type(node) in _UNARY:
                index[id(node)] = self._push(_UNARY[type(node)], a=index[id(node.a)])
            else:
                raise TypeError(f"unsupported expression node {type(node).__name__}")
        return index[id(e)]

    def arrays(self):
        return (
            np.array(self.op, dtype=np.int64),
            np.array(self.a, dtype=np.int64),
            np.array(self.b, dtype=np.int64),
            np.array(self.arg, dtype=np.int64),
            np.array(self.clo, dtype=np.float64),
            np.array(self.chi, dtype=np.float64),
        )
