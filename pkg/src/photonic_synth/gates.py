"""Built-in target gates, kept exact where possible."""

from __future__ import annotations

import re

import numpy as np
import sympy


class GateError(ValueError):
    pass


def _diag(*values):
    return sympy.diag(*values)


def identity(qubits: int = 1) -> sympy.Matrix:
    return sympy.eye(2**qubits)


def givens(theta) -> sympy.Matrix:
    """Rotation of the |01>, |10> subspace by ``theta``; |00> and |11> fixed."""
    t = sympy.sympify(theta)
    c, s = sympy.cos(t), sympy.sin(t)
    return sympy.Matrix([[1, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 1]])


def _ccx() -> sympy.Matrix:
    m = sympy.eye(8)
    m[6, 6] = m[7, 7] = 0
    m[6, 7] = m[7, 6] = 1
    return m


_FIXED = {
    "z": lambda: _diag(1, -1),
    "x": lambda: sympy.Matrix([[0, 1], [1, 0]]),
    "h": lambda: sympy.Matrix([[1, 1], [1, -1]]) / sympy.sqrt(2),
    "s": lambda: _diag(1, sympy.I),
    "cz": lambda: _diag(1, 1, 1, -1),
    "cnot": lambda: sympy.Matrix([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "cx": lambda: sympy.Matrix([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "ccx": _ccx,
    "toffoli": _ccx,
}

_CALL = re.compile(r"^\s*([A-Za-z_]+)\s*(?:\((.*)\))?\s*$")


def gate(name: str, qubits: int | None = None) -> sympy.Matrix:
    """Look up a gate by name, e.g. ``"CZ"``, ``"identity"`` or ``"givens(pi/2)"``."""
    match = _CALL.match(name)
    if not match:
        raise GateError(f"cannot parse gate {name!r}")
    key, argument = match.group(1).lower(), match.group(2)
    if key in ("identity", "i", "id"):
        return identity(qubits or 1)
    if key == "givens":
        if argument is None:
            raise GateError("givens needs an angle, e.g. givens(pi/2)")
        try:
            theta = sympy.sympify(argument, locals={"pi": sympy.pi})
        except (sympy.SympifyError, SyntaxError) as exc:
            raise GateError(f"bad angle {argument!r}") from exc
        if not theta.is_real:
            raise GateError(f"angle must be real, got {argument!r}")
        return givens(theta)
    if key in _FIXED and argument is None:
        return _FIXED[key]()
    raise GateError(f"unknown gate {name!r}")


def gate_qubits(matrix) -> int:
    n = np.asarray(matrix).shape[0]
    q = int(round(np.log2(n))) if n else 0
    if 2**q != n or np.asarray(matrix).shape != (n, n):
        raise GateError(f"gate matrix must be 2^q x 2^q, got shape {np.asarray(matrix).shape}")
    return q


def to_numpy(matrix) -> np.ndarray:
    if isinstance(matrix, sympy.MatrixBase):
        return np.array(matrix.evalf(17).tolist(), dtype=complex)
    return np.asarray(matrix, dtype=complex)
