"""Constraint containers shared by the encoder and the solvers."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .polynomial import Polynomial

ALPHA = "alpha"


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    """``lower <= expr <= upper``; an equality when both bounds coincide.

    ``expr`` is a :class:`Polynomial` or a solver expression tree.
    """

    expr: object
    lower: float = -math.inf
    upper: float = math.inf
    group: str = ""
    strict_lower: bool = False
    strict_upper: bool = False

    @property
    def is_equality(self) -> bool:
        return self.lower == self.upper

    @property
    def weakenable(self) -> bool:
        # only equalities are delta-weakened
        return self.is_equality

    def variables(self) -> set[str]:
        return set(self.expr.variables())


@dataclass(frozen=True)
class Disjunction:
    parts: tuple[Constraint, ...]
    group: str = ""

    weakenable = False

    def variables(self) -> set[str]:
        return set().union(*(p.variables() for p in self.parts))


@dataclass
class ConstraintSystem:
    variables: dict[str, tuple[float, float]] = field(default_factory=dict)
    constraints: list = field(default_factory=list)

    def validate(self) -> None:
        for c in self.constraints:
            missing = c.variables() - self.variables.keys()
            if missing:
                raise EncodingError(f"undeclared variables {sorted(missing)}")

    def counts(self) -> dict[str, int]:
        return dict(Counter(c.group for c in self.constraints))

    def with_alpha_min(self, alpha_min: float) -> "ConstraintSystem":
        """Copy with ``alpha^2 >= alpha_min`` appended."""
        if ALPHA not in self.variables:
            return ConstraintSystem(dict(self.variables), list(self.constraints))
        a = Polynomial.var(ALPHA)
        extra = Constraint(a * a, lower=float(alpha_min), group="alpha_min")
        return ConstraintSystem(dict(self.variables), list(self.constraints) + [extra])
