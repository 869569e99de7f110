import math

import numpy as np
import pytest

from photonic_synth import gates
from photonic_synth.constraints import ALPHA, Constraint, Disjunction, EncodingError
from photonic_synth.encoding import (
    HERALDED,
    ExtraConstraint,
    Setup,
    build_constraints,
    coincidence_basis,
    dual_rail_encode,
    entry_name,
    extras_from_json,
    isolate_wires,
    symbolic_amplitude,
    variable_matrix,
)
from photonic_synth.fock import enumerate_basis, transition_amplitude
from photonic_synth.refine import verify

from conftest import CZ_HERALDED, CZ_POST, random_unitary


def test_dual_rail_examples():
    assert dual_rail_encode("01", (0,)).occupations == (1, 0, 0, 1, 0)
    assert dual_rail_encode("10", (1, 1)).occupations == (0, 1, 1, 0, 1, 1)
    with pytest.raises(EncodingError):
        dual_rail_encode("02")


def test_post_select_basis():
    basis = coincidence_basis(Setup(2, (0, 0)))
    assert basis.labels == ["00", "01", "10", "11"]
    assert basis.leakage == ()


def test_heralded_leakage_by_pattern_and_total():
    pattern = coincidence_basis(Setup(2, (1, 1), regime=HERALDED))
    # 2 photons over 4 qubit wires, minus the 4 codewords
    assert len(pattern.leakage) == math.comb(5, 3) - 4
    total = coincidence_basis(Setup(2, (1, 1), regime=HERALDED, herald_match="total"))
    assert len(total.leakage) == 3 * math.comb(5, 3) - 4


def test_symbolic_matches_numeric(rng):
    for _ in range(1000):
        m = int(rng.integers(1, 5))
        n = int(rng.integers(0, 4))
        basis = list(enumerate_basis(n, m))
        inp = basis[int(rng.integers(len(basis)))]
        out = basis[int(rng.integers(len(basis)))]
        u = random_unitary(m, rng, real=True)
        names = variable_matrix(m)
        values = {names[i][j]: u[i, j] for i in range(m) for j in range(m)}
        poly = symbolic_amplitude(inp, out, names)
        expected = transition_amplitude(u, inp, out)
        assert abs(poly.evaluate(values) - expected) < 1e-12


def test_photon_number_mismatch_is_zero():
    assert not symbolic_amplitude((1, 0), (1, 1), variable_matrix(2))


def _residuals(system, values):
    worst = 0.0
    for c in system.constraints:
        if isinstance(c, Disjunction):
            continue
        v = c.expr.evaluate(values).real
        worst = max(worst, c.lower - v, v - c.upper)
    return worst


def _values(u, alpha):
    m = u.shape[0]
    values = {entry_name(i + 1, j + 1): float(u[i, j].real) for i in range(m) for j in range(m)}
    values[ALPHA] = alpha
    return values


def test_known_solution_satisfies_post_select_system():
    system = build_constraints("CZ", Setup(2, (0, 0)))
    assert _residuals(system, _values(CZ_POST, 1 / 3)) < 1e-12
    assert _residuals(system, _values(CZ_POST, 0.34)) > 1e-3


def test_known_solution_satisfies_heralded_system():
    setup = Setup(2, (1, 1), regime=HERALDED)
    system = build_constraints("CZ", setup)
    alpha = verify(CZ_HERALDED, "CZ", setup).alpha
    # the sign of alpha in the system is tied to the matrix, so try both
    best = min(_residuals(system, _values(CZ_HERALDED, s * alpha.real)) for s in (1, -1))
    assert best < 1e-12


def test_group_counts():
    counts = build_constraints("CZ", Setup(2, (0, 0))).counts()
    assert counts == {"bound": 38, "unitary": 36, "fockequal": 16}
    three = build_constraints("toffoli", Setup(3, ())).counts()
    assert three == {"bound": 38, "unitary": 36, "fockequal": 64}


def test_leakage_group():
    setup = Setup(2, (1, 1), regime=HERALDED)
    counts = build_constraints("CZ", setup).counts()
    assert counts["leakage"] == 24
    off = Setup(2, (1, 1), regime=HERALDED, leakage_constraints=False)
    assert "leakage" not in build_constraints("CZ", off).counts()


def test_extras():
    setup = Setup(2, (0, 0)).with_extras(
        ExtraConstraint.zero_entry(1, 2),
        ExtraConstraint.vacuum_relax(5),
        ExtraConstraint.vacuum_enforce(6),
    )
    extra = [c for c in build_constraints("CZ", setup).constraints if c.group == "extra"]
    assert len(extra) == 3
    zero, relax, enforce = extra
    assert isinstance(zero, Constraint) and zero.is_equality
    assert isinstance(relax, Disjunction) and len(relax.parts) == 2
    assert relax.parts[1].strict_upper and not relax.weakenable
    assert not enforce.weakenable and enforce.upper == pytest.approx(1 - 1e-4)


def test_vacuum_extras_need_vacuum_wires():
    with pytest.raises(EncodingError):
        Setup(2, (1, 0), extras=(ExtraConstraint.vacuum_relax(5),))
    with pytest.raises(EncodingError):
        Setup(2, (0, 0), extras=(ExtraConstraint.zero_entry(7, 1),))


def test_isolate_wires():
    extras = isolate_wires([1, 3], range(1, 5))
    pairs = {(e.i, e.j) for e in extras}
    assert pairs == {(1, 2), (2, 1), (1, 3), (3, 1), (1, 4), (4, 1), (3, 2), (2, 3), (3, 4), (4, 3)}
    parsed = extras_from_json([{"kind": "isolate", "wires": [1, 3], "among": [1, 2, 3, 4]}])
    assert parsed == extras


def test_setup_json_round_trip():
    setup = Setup(2, (0, 1), extras=tuple(isolate_wires([1], [1, 2])), herald_match="total")
    assert Setup.from_json(setup.to_json()) == setup


@pytest.mark.parametrize("target, error", [
    (np.eye(2), "must be 4x4"),
    (np.diag([1, 1, 1, 1j]), "complex"),
    (np.diag([1, 1, 1, 2.0]), "not unitary"),
])
def test_bad_targets(target, error):
    with pytest.raises(EncodingError, match=error):
        build_constraints(target, Setup(2))


def test_givens_target_accepted():
    system = build_constraints(gates.gate("givens(pi/2)"), Setup(2, (0, 0)))
    assert system.counts()["fockequal"] == 16
