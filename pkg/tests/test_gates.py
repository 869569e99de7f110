import numpy as np
import pytest
import sympy

from photonic_synth import gates


@pytest.mark.parametrize("name", ["CZ", "cnot", "H", "Z", "X", "S", "toffoli", "identity", "givens(pi/3)"])
def test_builtin_gates_are_unitary(name):
    u = gates.to_numpy(gates.gate(name, 2))
    assert np.allclose(u @ u.conj().T, np.eye(u.shape[0]))


def test_cz_values():
    assert gates.gate("CZ") == sympy.diag(1, 1, 1, -1)


def test_givens_half_pi_is_exact():
    g = gates.gate("givens(pi/2)")
    assert g[1, 2] == -1 and g[2, 1] == 1 and g[1, 1] == 0


def test_identity_size_follows_qubits():
    assert gates.gate("identity", 3).shape == (8, 8)


@pytest.mark.parametrize("bad", ["nonsense", "givens", "givens(I)", "givens(1+)", "CZ(2)"])
def test_bad_names(bad):
    with pytest.raises(gates.GateError):
        gates.gate(bad)


def test_gate_qubits():
    assert gates.gate_qubits(np.eye(4)) == 2
    with pytest.raises(gates.GateError):
        gates.gate_qubits(np.eye(3))
