"""Dual-rail encodings, coincidence bases and the real-arithmetic constraint
system whose solutions are transfer matrices implementing a target gate."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import sympy
from sympy.utilities.iterables import multiset_permutations

from . import gates
from .fock import FockState, as_state, enumerate_basis
from .constraints import ALPHA, Constraint, ConstraintSystem, Disjunction, EncodingError
from .polynomial import Polynomial

POST_SELECT = "post_select"
HERALDED = "heralded"


def entry_name(i: int, j: int) -> str:
    """Variable name of the transfer-matrix entry at 1-based position (i, j)."""
    return f"U_{i}_{j}"


@dataclass(frozen=True)
class ExtraConstraint:
    """Optional constraint on a transfer-matrix entry (wire indices are 1-based)."""

    kind: str
    i: int
    j: int = 0

    @classmethod
    def zero_entry(cls, i: int, j: int) -> "ExtraConstraint":
        return cls("zero_entry", i, j)

    @classmethod
    def vacuum_relax(cls, k: int) -> "ExtraConstraint":
        return cls("vacuum_relax", k, k)

    @classmethod
    def vacuum_enforce(cls, k: int) -> "ExtraConstraint":
        return cls("vacuum_enforce", k, k)

    def to_json(self) -> dict:
        if self.kind == "zero_entry":
            return {"kind": self.kind, "i": self.i, "j": self.j}
        return {"kind": self.kind, "wire": self.i}


def isolate_wires(wires: Sequence[int], among: Sequence[int]) -> list[ExtraConstraint]:
    """Zero the couplings between each wire in ``wires`` and the other wires in ``among``.

    ``isolate_wires([1, 3], range(1, 5))`` gives the CZ restriction that keeps the
    logical-0 rails of both qubits from interacting with the other qubit wires.
    """
    extras = []
    for w in wires:
        for k in among:
            if k != w:
                extras.append(ExtraConstraint.zero_entry(w, k))
                extras.append(ExtraConstraint.zero_entry(k, w))
    return list(dict.fromkeys(extras))


def extras_from_json(items) -> list[ExtraConstraint]:
    out: list[ExtraConstraint] = []
    for item in items or []:
        kind = item["kind"]
        if kind == "zero_entry":
            out.append(ExtraConstraint.zero_entry(int(item["i"]), int(item["j"])))
        elif kind in ("vacuum_relax", "vacuum_enforce"):
            out.append(ExtraConstraint(kind, int(item["wire"]), int(item["wire"])))
        elif kind == "isolate":
            among = item.get("among")
            out.extend(isolate_wires(item["wires"], among if among is not None else []))
        else:
            raise EncodingError(f"unknown extra constraint kind {kind!r}")
    return out


@dataclass(frozen=True)
class Setup:
    """Wire layout for a ``qubits``-qubit gate plus auxiliary wires.

    ``aux`` holds the initial photon count of each auxiliary wire.  In the
    heralded regime ``leakage_constraints`` adds zero-amplitude constraints
    towards every same-herald state outside the code space, and
    ``herald_match`` chooses whether heralds compare the per-wire pattern
    (``"pattern"``) or only the auxiliary photon total (``"total"``).
    """

    qubits: int
    aux: tuple[int, ...] = ()
    regime: str = POST_SELECT
    extras: tuple[ExtraConstraint, ...] = ()
    leakage_constraints: bool = True
    herald_match: str = "pattern"
    vacuum_margin: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "aux", tuple(int(n) for n in self.aux))
        object.__setattr__(self, "extras", tuple(self.extras))
        if self.qubits < 1:
            raise EncodingError("a setup needs at least one qubit")
        if any(n < 0 for n in self.aux):
            raise EncodingError("auxiliary photon counts must be non-negative")
        if self.regime not in (POST_SELECT, HERALDED):
            raise EncodingError(f"unknown regime {self.regime!r}")
        if self.herald_match not in ("pattern", "total"):
            raise EncodingError(f"unknown herald match {self.herald_match!r}")
        m = self.n_wires
        for extra in self.extras:
            if not (1 <= extra.i <= m and 1 <= extra.j <= m):
                raise EncodingError(f"{extra} refers to a wire outside 1..{m}")
            if extra.kind in ("vacuum_relax", "vacuum_enforce"):
                k = extra.i - 2 * self.qubits - 1
                if k < 0 or self.aux[k] != 0:
                    raise EncodingError(f"{extra.kind} needs a vacuum auxiliary wire, got wire {extra.i}")
            elif extra.kind != "zero_entry":
                raise EncodingError(f"unknown extra constraint kind {extra.kind!r}")

    @property
    def n_wires(self) -> int:
        return 2 * self.qubits + len(self.aux)

    @property
    def n_photons(self) -> int:
        return self.qubits + sum(self.aux)

    def with_extras(self, *extras: ExtraConstraint) -> "Setup":
        return replace(self, extras=self.extras + tuple(extras))

    def to_json(self) -> dict:
        return {
            "qubits": self.qubits,
            "aux": list(self.aux),
            "regime": self.regime,
            "extras": [e.to_json() for e in self.extras],
            "leakage_constraints": self.leakage_constraints,
            "herald_match": self.herald_match,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Setup":
        return cls(
            qubits=int(data["qubits"]),
            aux=tuple(data.get("aux", ())),
            regime=data.get("regime", POST_SELECT),
            extras=tuple(extras_from_json(data.get("extras"))),
            leakage_constraints=bool(data.get("leakage_constraints", True)),
            herald_match=data.get("herald_match", "pattern"),
        )


def load_setup(path) -> tuple[Setup, str | None]:
    """Read a setup file; returns the setup and its ``gate`` field if present."""
    with open(path) as fh:
        data = json.load(fh)
    g = data.get("gate")
    return Setup.from_json(data), g


def dual_rail_encode(bits: str, aux: Sequence[int] = ()) -> FockState:
    rails: list[int] = []
    for b in bits:
        if b == "0":
            rails += [1, 0]
        elif b == "1":
            rails += [0, 1]
        else:
            raise EncodingError(f"bitstring must contain only 0/1, got {bits!r}")
    return FockState(tuple(rails) + tuple(int(n) for n in aux))


@dataclass(frozen=True)
class CoincidenceBasis:
    computational: tuple[tuple[str, FockState], ...]
    leakage: tuple[FockState, ...] = ()

    @property
    def states(self) -> list[FockState]:
        return [s for _, s in self.computational]

    @property
    def labels(self) -> list[str]:
        return [b for b, _ in self.computational]


def coincidence_basis(setup: Setup) -> CoincidenceBasis:
    q = setup.qubits
    comp = tuple(
        (format(k, f"0{q}b"), dual_rail_encode(format(k, f"0{q}b"), setup.aux)) for k in range(2**q)
    )
    if setup.regime == POST_SELECT:
        return CoincidenceBasis(comp)
    codewords = {s for _, s in comp}
    tail = setup.aux
    n_aux = sum(tail)
    leakage = []
    for s in enumerate_basis(setup.n_photons, setup.n_wires):
        aux_part = s.occupations[2 * q:]
        heralded = aux_part == tail if setup.herald_match == "pattern" else sum(aux_part) == n_aux
        if heralded and s not in codewords:
            leakage.append(s)
    return CoincidenceBasis(comp, tuple(leakage))


def variable_matrix(m: int) -> list[list[str]]:
    return [[entry_name(i + 1, j + 1) for j in range(m)] for i in range(m)]


def symbolic_amplitude(inp, out, variables: Sequence[Sequence[str]]) -> Polynomial:
    """Polynomial in the matrix entries equal to ``<out| U_F |inp>``."""
    inp, out = as_state(inp), as_state(out)
    m = len(variables)
    if inp.n_modes != m or out.n_modes != m:
        raise EncodingError("state length does not match the variable matrix")
    if inp.total_photons != out.total_photons:
        return Polynomial()
    rows = [w for w, n in enumerate(out.occupations) for _ in range(n)]
    cols = [w for w, n in enumerate(inp.occupations) for _ in range(n)]
    counts: Counter = Counter()
    # each distinct ordering of the repeated columns stands for prod(n_j!) permutations
    mult = math.prod(math.factorial(n) for n in inp.occupations)
    for perm in multiset_permutations(cols):
        powers: Counter = Counter()
        for r, c in zip(rows, perm):
            powers[variables[r][c]] += 1
        counts[tuple(sorted(powers.items()))] += mult
    norm = math.prod(math.factorial(n) for n in inp.occupations) * math.prod(
        math.factorial(n) for n in out.occupations
    )
    scale = 1 / sympy.sqrt(sympy.Integer(norm))
    return Polynomial({mono: sympy.Integer(c) * scale for mono, c in counts.items()})


def _check_target(target, qubits: int):
    if isinstance(target, str):
        target = gates.gate(target, qubits)
    numeric = gates.to_numpy(target)
    n = 2**qubits
    if numeric.shape != (n, n):
        raise EncodingError(f"target must be {n}x{n} for {qubits} qubit(s), got {numeric.shape}")
    if np.abs(numeric.imag).max(initial=0.0) > 1e-12:
        raise EncodingError("complex targets are not supported by the real-valued encoding")
    if np.abs(numeric @ numeric.conj().T - np.eye(n)).max() > 1e-9:
        raise EncodingError("target gate is not unitary")
    if isinstance(target, sympy.MatrixBase):
        return [[sympy.re(sympy.simplify(v)) for v in row] for row in target.tolist()]
    return [[float(v.real) for v in row] for row in numeric]


def build_constraints(target, setup: Setup) -> ConstraintSystem:
    """Compile ``bound``, ``unitary``, ``fockequal`` (plus leakage and extras)."""
    q = setup.qubits
    entries = _check_target(target, q)
    m = setup.n_wires
    names = variable_matrix(m)
    system = ConstraintSystem()
    for row in names:
        for v in row:
            system.variables[v] = (-1.0, 1.0)
    system.variables[ALPHA] = (-1.0, 1.0)

    alpha = Polynomial.var(ALPHA)
    cons = system.constraints
    cons.append(Constraint(alpha, lower=-1.0, group="bound"))
    cons.append(Constraint(alpha, upper=1.0, group="bound"))
    for row in names:
        for v in row:
            cons.append(Constraint(Polynomial.var(v), -1.0, 1.0, group="bound"))

    u = [[Polynomial.var(v) for v in row] for row in names]
    for i in range(m):
        for j in range(m):
            dot = Polynomial()
            for k in range(m):
                dot = dot + u[i][k] * u[j][k]
            value = 1.0 if i == j else 0.0
            cons.append(Constraint(dot - value, 0.0, 0.0, group="unitary"))

    basis = coincidence_basis(setup)
    comp = basis.states
    for b, phi in enumerate(comp):
        for c, psi in enumerate(comp):
            amp = symbolic_amplitude(psi, phi, names)
            cons.append(Constraint(amp - alpha * entries[b][c], 0.0, 0.0, group="fockequal"))
    if setup.regime == HERALDED and setup.leakage_constraints:
        for psi in comp:
            for leak in basis.leakage:
                amp = symbolic_amplitude(psi, leak, names)
                if amp:
                    cons.append(Constraint(amp, 0.0, 0.0, group="leakage"))

    for extra in setup.extras:
        x = Polynomial.var(entry_name(extra.i, extra.j))
        if extra.kind == "zero_entry":
            cons.append(Constraint(x, 0.0, 0.0, group="extra"))
        elif extra.kind == "vacuum_relax":
            cons.append(
                Disjunction(
                    (Constraint(x, 1.0, 1.0), Constraint(x, upper=1.0, strict_upper=True)),
                    group="extra",
                )
            )
        else:
            cons.append(Constraint(x * x, upper=1.0 - setup.vacuum_margin, group="extra"))
    system.validate()
    return system
