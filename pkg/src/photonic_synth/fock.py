"""Fock-space action of linear-optical transfer matrices.

A transfer matrix ``U`` maps creation operators as ``a_j^dag -> sum_i U[i, j] a_i^dag``.
Amplitudes between occupation-number states are permanents of submatrices of
``U`` with rows and columns repeated according to the photon counts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: Largest basis :func:`enumerate_basis` will build unless told otherwise.
DEFAULT_BASIS_LIMIT = 10**6
#: Photon cap for the precomputed factorial table.
MAX_PHOTONS = 64

_SQRT_FACTORIAL = np.array([math.sqrt(math.factorial(k)) for k in range(MAX_PHOTONS + 1)])


class CapacityError(ValueError):
    """Raised when a Fock basis would exceed the configured size limit."""


class DimensionError(ValueError):
    """Raised when matrix and state dimensions disagree."""


@dataclass(frozen=True, order=True)
class FockState:
    """Photon occupation numbers ``|n_1, ..., n_m>`` over ``m`` wires."""

    occupations: tuple[int, ...]
    total_photons: int = field(init=False, compare=False)

    def __post_init__(self):
        occ = tuple(int(n) for n in self.occupations)
        if any(n < 0 for n in occ):
            raise ValueError(f"occupation numbers must be non-negative, got {occ}")
        object.__setattr__(self, "occupations", occ)
        object.__setattr__(self, "total_photons", sum(occ))

    @property
    def n_modes(self) -> int:
        return len(self.occupations)

    def __len__(self):
        return len(self.occupations)

    def __iter__(self):
        return iter(self.occupations)

    def __getitem__(self, item):
        return self.occupations[item]

    def __repr__(self):
        return "|" + ",".join(map(str, self.occupations)) + ">"

    def to_json(self) -> list[int]:
        return list(self.occupations)

    @classmethod
    def from_json(cls, data: Sequence[int]) -> "FockState":
        return cls(tuple(data))


def as_state(state) -> FockState:
    return state if isinstance(state, FockState) else FockState(tuple(state))


@dataclass(frozen=True)
class FockBasis:
    """All states with ``n_photons`` photons over ``m_modes`` wires.

    States are kept in descending lexicographic order, so ``(n, 0, ..., 0)``
    comes first and ``(0, ..., 0, n)`` last.
    """

    n_photons: int
    m_modes: int
    states: tuple[FockState, ...]

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, item):
        return self.states[item]

    def index(self, state) -> int:
        return self.states.index(as_state(state))


def basis_size(n_photons: int, m_modes: int) -> int:
    return math.comb(n_photons + m_modes - 1, m_modes - 1)


def _compositions(n: int, m: int):
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, m - 1):
            yield (first,) + rest


def enumerate_basis(n_photons: int, m_modes: int, limit: int = DEFAULT_BASIS_LIMIT) -> FockBasis:
    if m_modes < 1:
        raise ValueError("m_modes must be at least 1")
    if n_photons < 0:
        raise ValueError("n_photons must be non-negative")
    size = basis_size(n_photons, m_modes)
    if size > limit:
        raise CapacityError(
            f"basis B_{{{n_photons},{m_modes}}} has {size} states, above the limit {limit}"
        )
    states = tuple(FockState(occ) for occ in _compositions(n_photons, m_modes))
    return FockBasis(n_photons, m_modes, states)


def permanent(matrix) -> complex:
    """Permanent by Ryser's formula with Gray-code row-sum updates, O(2^k k)."""
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"permanent needs a square matrix, got shape {a.shape}")
    k = a.shape[0]
    if k == 0:
        return 1.0 + 0.0j
    if k == 1:
        return complex(a[0, 0])
    row_sums = np.zeros(k, dtype=complex)
    total = 0.0 + 0.0j
    sign = -1.0
    gray = 0
    for i in range(1, 2**k):
        # column flipped between consecutive Gray codes
        j = (i & -i).bit_length() - 1
        gray ^= 1 << j
        if gray >> j & 1:
            row_sums += a[:, j]
        else:
            row_sums -= a[:, j]
        total += sign * np.prod(row_sums)
        sign = -sign
    return complex((-1) ** k * total)


def _repeated_indices(state: FockState) -> list[int]:
    return [wire for wire, n in enumerate(state.occupations) for _ in range(n)]


def _normalisation(state: FockState) -> float:
    if state.total_photons > MAX_PHOTONS:
        return math.prod(math.sqrt(math.factorial(n)) for n in state.occupations)
    return float(np.prod(_SQRT_FACTORIAL[list(state.occupations)]))


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Square complex matrix describing an ``m``-wire linear-optical circuit.

    ``kind`` is ``"exact"`` for matrices that must be unitary (checked against
    ``tolerance``) and ``"candidate"`` for unconstrained approximations.
    """

    entries: np.ndarray
    kind: str = "exact"
    tolerance: float = 1e-9

    def __post_init__(self):
        u = np.array(self.entries, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise DimensionError(f"transfer matrix must be square, got shape {u.shape}")
        u.setflags(write=False)
        object.__setattr__(self, "entries", u)
        if self.kind not in ("exact", "candidate"):
            raise ValueError(f"unknown transfer matrix kind {self.kind!r}")
        if self.kind == "exact" and self.unitarity_error() > self.tolerance:
            raise ValueError(
                f"matrix is not unitary: max |UU^dag - I| = {self.unitarity_error():.3g}"
            )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def unitarity_error(self) -> float:
        u = self.entries
        return float(np.abs(u @ u.conj().T - np.eye(self.dim)).max()) if self.dim else 0.0

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "entries": [[float(z.real), float(z.imag)] for z in self.entries.ravel()],
        }

    @classmethod
    def from_json(cls, data: dict, kind: str = "exact", tolerance: float = 1e-9) -> "TransferMatrix":
        m = int(data["dim"])
        flat = data["entries"]
        if len(flat) != m * m:
            raise DimensionError(f"expected {m * m} entries, got {len(flat)}")
        values = [complex(re, im) for re, im in flat]
        return cls(np.array(values, dtype=complex).reshape(m, m), kind=kind, tolerance=tolerance)

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _as_matrix(u) -> np.ndarray:
    if isinstance(u, TransferMatrix):
        return u.entries
    a = np.asarray(u, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"transfer matrix must be square, got shape {a.shape}")
    return a


def transition_amplitude(u, input_state, output_state) -> complex:
    """Amplitude ``<output| U_F |input>`` of the Fock-space operator induced by ``u``."""
    a = _as_matrix(u)
    inp, out = as_state(input_state), as_state(output_state)
    if inp.n_modes != a.shape[0] or out.n_modes != a.shape[0]:
        raise DimensionError(
            f"states over {inp.n_modes}/{out.n_modes} wires do not match a {a.shape[0]}-wire matrix"
        )
    if inp.total_photons != out.total_photons:
        return 0.0 + 0.0j
    sub = a[np.ix_(_repeated_indices(out), _repeated_indices(inp))]
    return permanent(sub) / (_normalisation(inp) * _normalisation(out))


def fock_block(u, rows: Iterable, cols: Iterable) -> np.ndarray:
    """Matrix of amplitudes with entry ``(r, c) = <rows[r]| U_F |cols[c]>``."""
    a = _as_matrix(u)
    rows = [as_state(s) for s in rows]
    cols = [as_state(s) for s in cols]
    block = np.zeros((len(rows), len(cols)), dtype=complex)
    for c, inp in enumerate(cols):
        for r, out in enumerate(rows):
            block[r, c] = transition_amplitude(a, inp, out)
    return block
