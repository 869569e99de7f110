import logging

import numpy as np
import pytest

from photonic_synth import gates
from photonic_synth.encoding import HERALDED, Setup, coincidence_basis, entry_name
from photonic_synth.fock import DimensionError, fock_block
from photonic_synth.refine import (
    RankDeficientError,
    box_corners,
    estimate_alpha,
    nearest_unitary,
    pick_candidate,
    refine_region,
    verify,
)
from photonic_synth.solver import Box

from conftest import CZ_HERALDED, CZ_POST, random_unitary

POST = Setup(2, (0, 0))
HER = Setup(2, (1, 1), regime=HERALDED)


def test_verify_post_selected_cz():
    report = verify(CZ_POST, "CZ", POST)
    assert report.verdict
    assert report.success_probability == pytest.approx(1 / 9, abs=1e-12)
    assert report.residual < 1e-12


def test_verify_heralded_cz():
    report = verify(CZ_HERALDED, "CZ", HER)
    assert report.verdict
    assert report.success_probability == pytest.approx(2 / 27, abs=1e-12)
    assert report.leakage_norm < 1e-12


def test_misprinted_heralded_matrix_fails():
    u = CZ_HERALDED.copy()
    u[4, 1] = u[5, 3] = -np.sqrt(3 - np.sqrt(6)) / 3
    assert np.abs(u @ u.T - np.eye(6)).max() > 0.1
    assert not verify(u, "CZ", HER).verdict


def test_total_herald_matching_sees_more_leakage():
    total = Setup(2, (1, 1), regime=HERALDED, herald_match="total")
    assert verify(CZ_HERALDED, "CZ", total).leakage_norm > 0.1


def test_wrong_gate_fails():
    report = verify(CZ_POST, "identity", POST)
    assert not report.verdict and report.residual > 0.1


def test_verify_shape_mismatch():
    with pytest.raises(DimensionError):
        verify(np.eye(5), "CZ", POST)


def test_sign_invariance():
    for u, setup in [(CZ_POST, POST), (CZ_HERALDED, HER)]:
        a, b = verify(u, "CZ", setup), verify(-u, "CZ", setup)
        assert a.success_probability == pytest.approx(b.success_probability)
        assert a.residual == pytest.approx(b.residual, abs=1e-12)
        assert b.alpha.real >= 0


def test_alpha_residual_is_orthogonal_to_target(rng):
    t = gates.to_numpy(gates.gate("CZ"))
    for _ in range(20):
        block = rng.normal(size=(4, 4))
        alpha = estimate_alpha(block, t)
        assert abs(np.vdot(t, block - alpha * t)) < 1e-12


def test_nearest_unitary_properties(rng):
    for _ in range(10):
        m = int(rng.integers(2, 7))
        a = random_unitary(m, rng, real=True) + 0.05 * rng.normal(size=(m, m))
        w = nearest_unitary(a)
        assert w.unitarity_error() < 1e-12
        assert not np.any(w.entries.imag)
        best = np.linalg.norm(a - w.entries)
        for _ in range(100):
            assert best <= np.linalg.norm(a - random_unitary(m, rng, real=True)) + 1e-12


def test_nearest_unitary_fixes_unitaries_and_scales(rng):
    u = random_unitary(4, rng, real=True)
    assert np.allclose(nearest_unitary(u).entries, u, atol=1e-12)
    assert np.allclose(nearest_unitary(3.0 * u).entries, u, atol=1e-12)
    c = random_unitary(3, rng)
    assert np.allclose(nearest_unitary(c).entries, c, atol=1e-12)


def test_rank_deficient():
    with pytest.raises(RankDeficientError) as err:
        nearest_unitary(np.diag([1.0, 0.0, 1.0]))
    assert err.value.directions == [2]


def test_pick_candidate_skips_singular_corner(caplog):
    basis = coincidence_basis(POST)
    with caplog.at_level(logging.WARNING):
        cand = pick_candidate(np.zeros((6, 6)), CZ_POST, gates.gate("CZ"), basis)
    assert cand.corner == "upper" and cand.residual < 1e-12
    assert "lower corner skipped" in caplog.text
    with pytest.raises(RankDeficientError):
        pick_candidate(np.zeros((6, 6)), np.zeros((6, 6)), gates.gate("CZ"), basis)


def test_pick_candidate_prefers_closer_corner(rng):
    noise = rng.normal(size=(6, 6))
    cand = pick_candidate(CZ_POST + 0.2 * noise, CZ_POST + 1e-6 * noise, gates.gate("CZ"), coincidence_basis(POST),
                          midpoint=True)
    assert cand.corner == "upper"
    assert abs(cand.alpha) ** 2 == pytest.approx(1 / 9, abs=1e-4)


def _box_around(u, radius):
    m = u.shape[0]
    names = [entry_name(i + 1, j + 1) for i in range(m) for j in range(m)] + ["alpha"]
    lo = [u[i, j] - radius for i in range(m) for j in range(m)] + [0.3]
    hi = [u[i, j] + radius for i in range(m) for j in range(m)] + [0.34]
    return Box(names, lo, hi)


def test_box_corners():
    box = _box_around(CZ_POST, 0.01)
    lower, upper = box_corners(box, 6)
    assert np.allclose(upper - lower, 0.02)


def test_refine_region_round_trip():
    candidate, report = refine_region(_box_around(CZ_POST, 1e-4), "CZ", POST)
    assert report.success_probability == pytest.approx(1 / 9, abs=2e-3)
    block = fock_block(candidate.chosen, coincidence_basis(POST).states, coincidence_basis(POST).states)
    assert np.linalg.norm(block - report.alpha * gates.to_numpy(gates.gate("CZ"))) == pytest.approx(report.residual)
