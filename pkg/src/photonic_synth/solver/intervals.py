"""Outward-rounded intervals and boxes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from . import kernels as K


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(float(x), float(x))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __add__(self, other):
        o = _iv(other)
        return Interval(*K.iadd(self.lo, self.hi, o.lo, o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = _iv(other)
        return Interval(*K.isub(self.lo, self.hi, o.lo, o.hi))

    def __rsub__(self, other):
        return _iv(other) - self

    def __mul__(self, other):
        o = _iv(other)
        return Interval(*K.imul(self.lo, self.hi, o.lo, o.hi))

    __rmul__ = __mul__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __pow__(self, n: int):
        return Interval(*K.ipowi(self.lo, self.hi, int(n)))

    def exp(self):
        return Interval(*K.iexp(self.lo, self.hi))

    def sin(self):
        return Interval(*K.isin(self.lo, self.hi))

    def cos(self):
        return Interval(*K.icos(self.lo, self.hi))

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"


def _iv(x) -> Interval:
    return x if isinstance(x, Interval) else Interval.point(x)


class Box(Mapping[str, Interval]):
    """Ordered map from variable name to :class:`Interval`."""

    def __init__(self, names, lo, hi):
        self.names = tuple(names)
        self.lo = np.array(lo, dtype=float)
        self.hi = np.array(hi, dtype=float)
        if self.lo.shape != (len(self.names),) or self.hi.shape != self.lo.shape:
            raise ValueError("bounds do not match the variable list")
        self._index = {n: k for k, n in enumerate(self.names)}

    @classmethod
    def from_dict(cls, bounds: Mapping[str, object]) -> "Box":
        names = list(bounds)
        pairs = [(b.lo, b.hi) if isinstance(b, Interval) else tuple(b) for b in bounds.values()]
        return cls(names, [p[0] for p in pairs], [p[1] for p in pairs])

    def __getitem__(self, name: str) -> Interval:
        k = self._index[name]
        return Interval(float(self.lo[k]), float(self.hi[k]))

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def copy(self) -> "Box":
        return Box(self.names, self.lo.copy(), self.hi.copy())

    @property
    def midpoint(self) -> dict[str, float]:
        return {n: float(0.5 * (a + b)) for n, a, b in zip(self.names, self.lo, self.hi)}

    def max_width(self) -> float:
        return float(np.max(self.hi - self.lo)) if len(self.names) else 0.0

    def is_subset(self, other: "Box") -> bool:
        return all(self[n] in other[n] for n in self.names)

    def to_json(self) -> dict:
        return {n: [float(a), float(b)] for n, a, b in zip(self.names, self.lo, self.hi)}

    def __repr__(self):
        inner = ", ".join(f"{n}: [{a:.6g}, {b:.6g}]" for n, a, b in zip(self.names, self.lo, self.hi))
        return f"Box({inner})"
