"""Multivariate polynomials in expanded monomial normal form.

Coefficients are kept exact (sympy numbers) so that square roots coming from
factorial normalisations survive into emitted constraint scripts; floating
point views are derived on demand.
"""

from __future__ import annotations

import re
from functools import cached_property
from typing import Mapping

import numpy as np
import sympy


Monomial = tuple[tuple[str, int], ...]


def natural_key(name: str):
    return tuple(int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name))


def _mono_key(mono: Monomial):
    return tuple((natural_key(v), e) for v, e in mono)


def _as_coef(c):
    if isinstance(c, sympy.Basic):
        return c
    if isinstance(c, (int, np.integer)):
        return sympy.Integer(int(c))
    if isinstance(c, complex):
        if c.imag != 0:
            raise ValueError("polynomial coefficients must be real")
        c = c.real
    return sympy.Float(float(c), 17)


def _mul_mono(a: Monomial, b: Monomial) -> Monomial:
    powers: dict[str, int] = dict(a)
    for v, e in b:
        powers[v] = powers.get(v, 0) + e
    return tuple(sorted(powers.items(), key=lambda ve: natural_key(ve[0])))


class Polynomial:
    """Sum of ``coefficient * prod(var ** exp)`` terms with sorted monomial keys."""

    __slots__ = ("terms", "__dict__")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean: dict[Monomial, sympy.Expr] = {}
        for mono, c in (terms or {}).items():
            c = _as_coef(c)
            if c != 0:
                key = tuple(sorted(((v, int(e)) for v, e in mono if e), key=lambda ve: natural_key(ve[0])))
                clean[key] = clean.get(key, sympy.Integer(0)) + c
        self.terms = {k: clean[k] for k in sorted(clean, key=_mono_key) if clean[k] != 0}

    @classmethod
    def var(cls, name: str) -> "Polynomial":
        return cls({((name, 1),): 1})

    @classmethod
    def constant(cls, value) -> "Polynomial":
        return cls({(): value})

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        parts = []
        for mono, c in self.terms.items():
            factors = "*".join(v if e == 1 else f"{v}^{e}" for v, e in mono)
            parts.append(f"{c}*{factors}" if factors else f"{c}")
        return "Polynomial(" + " + ".join(parts) + ")"

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self.terms.keys() == other.terms.keys() and all(
            sympy.simplify(self.terms[k] - other.terms[k]) == 0 for k in self.terms
        )

    def __hash__(self):
        return hash(tuple(self.terms))

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other):
        other = other if isinstance(other, Polynomial) else Polynomial.constant(other)
        merged = dict(self.terms)
        for k, c in other.terms.items():
            merged[k] = merged.get(k, sympy.Integer(0)) + c
        return Polynomial(merged)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-(other if isinstance(other, Polynomial) else Polynomial.constant(other)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = _as_coef(other)
            return Polynomial({k: v * c for k, v in self.terms.items()})
        out: dict[Monomial, sympy.Expr] = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                k = _mul_mono(ka, kb)
                out[k] = out.get(k, sympy.Integer(0)) + ca * cb
        return Polynomial(out)

    __rmul__ = __mul__

    @cached_property
    def float_terms(self) -> list[tuple[Monomial, float]]:
        return [(k, float(c)) for k, c in self.terms.items()]

    def variables(self) -> set[str]:
        return {v for mono in self.terms for v, _ in mono}

    def degree(self) -> int:
        return max((sum(e for _, e in mono) for mono in self.terms), default=0)

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        total = 0.0
        for mono, c in self.float_terms:
            term = c
            for v, e in mono:
                term = term * values[v] ** e
            total = total + term
        return total

    def to_expr(self):
        """Lower to an expression tree with one-ulp coefficient enclosures."""
        from .solver import expr as E

        if not self.terms:
            return E.Const.exact(0.0)
        out = None
        for mono, c in self.terms.items():
            node = None
            for v, e in mono:
                f = E.Var(v) if e == 1 else E.Pow(E.Var(v), e)
                node = f if node is None else E.Mul(node, f)
            cval = float(c)
            exact = c.is_Rational and sympy.Rational(cval) == c
            if node is None:
                node = E.Const.exact(cval) if exact else E.Const.enclosing(cval)
            elif cval == -1.0 and exact:
                node = E.Neg(node)
            elif not (cval == 1.0 and exact):
                coef = E.Const.exact(cval) if exact else E.Const.enclosing(cval)
                node = E.Mul(coef, node)
            out = node if out is None else E.Add(out, node)
        return out
