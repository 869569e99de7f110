"""Turning delta-sat regions into exact transfer matrices, and checking
transfer matrices against target gates."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import gates
from .encoding import HERALDED, Setup, coincidence_basis, entry_name
from .fock import DimensionError, TransferMatrix, fock_block

log = logging.getLogger(__name__)

#: Singular values below this mark a corner matrix as rank deficient.
RANK_TOL = 1e-10
#: Default residual tolerances per regime.
TOLERANCE = {"post_select": 1e-9, "heralded": 1e-6}


class RankDeficientError(ValueError):
    def __init__(self, directions):
        self.directions = list(directions)
        super().__init__(
            f"matrix is rank deficient: singular values below {RANK_TOL:g} at positions {self.directions}"
        )


def nearest_unitary(a) -> TransferMatrix:
    """Frobenius-closest unitary: ``V @ W`` for the SVD ``a = V diag(s) W``.

    Real input gives a real orthogonal result.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"need a square matrix, got shape {a.shape}")
    if not np.iscomplexobj(a) or np.abs(a.imag).max(initial=0.0) == 0.0:
        a = np.real(a).astype(float)
    v, s, w = np.linalg.svd(a)
    small = np.flatnonzero(s < RANK_TOL)
    if small.size:
        raise RankDeficientError(small.tolist())
    return TransferMatrix(v @ w, kind="exact", tolerance=1e-12)


def estimate_alpha(block, target) -> complex:
    """Least-squares scale ``alpha`` minimising ``||block - alpha * target||_F``."""
    block = np.asarray(block, dtype=complex)
    target = gates.to_numpy(target)
    if block.shape != target.shape:
        raise DimensionError(f"block {block.shape} and target {target.shape} differ in shape")
    norm = np.vdot(target, target).real
    if norm == 0.0:
        return 0j
    return complex(np.vdot(target, block) / norm)


def _normalise_sign(alpha: complex) -> complex:
    # global phase is free: report alpha with a non-negative real part
    if alpha.real < 0 or (alpha.real == 0 and alpha.imag < 0):
        return -alpha
    return alpha


def _target(target, setup: Setup) -> np.ndarray:
    if isinstance(target, str):
        target = gates.gate(target, setup.qubits)
    return gates.to_numpy(target)


@dataclass
class VerificationReport:
    alpha: complex
    success_probability: float
    residual: float
    leakage_norm: float
    tolerance: float
    verdict: bool

    def to_json(self) -> dict:
        return {
            "alpha": [self.alpha.real, self.alpha.imag],
            "success_probability": self.success_probability,
            "residual": self.residual,
            "leakage_norm": self.leakage_norm,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        }


def verify(u_hat, target, setup: Setup, tolerance: float | None = None) -> VerificationReport:
    """Check that ``u_hat`` acts as ``alpha * target`` on the dual-rail code space.

    The residual is ``||block - alpha * target||_F`` for the least-squares
    ``alpha``.  In the heralded regime the verdict also requires every
    amplitude from a code state to a same-herald leakage state to vanish.
    """
    u = u_hat.entries if isinstance(u_hat, TransferMatrix) else np.asarray(u_hat, dtype=complex)
    if u.shape != (setup.n_wires, setup.n_wires):
        raise DimensionError(f"setup needs a {setup.n_wires}-wire matrix, got shape {u.shape}")
    if tolerance is None:
        tolerance = TOLERANCE[setup.regime]
    target = _target(target, setup)
    basis = coincidence_basis(setup)
    block = fock_block(u, basis.states, basis.states)
    alpha = _normalise_sign(estimate_alpha(block, target))
    residual = float(np.linalg.norm(block - alpha * target))
    leakage = 0.0
    if setup.regime == HERALDED and basis.leakage:
        leakage = float(np.abs(fock_block(u, basis.leakage, basis.states)).max())
    probability = float(abs(alpha) ** 2)
    verdict = residual <= tolerance and leakage <= tolerance and probability > 0.0
    return VerificationReport(alpha, probability, residual, leakage, tolerance, verdict)


@dataclass
class Candidate:
    chosen: TransferMatrix
    alpha: complex
    residual: float
    corner: str


def _scaled_distance(u: TransferMatrix, target, basis) -> tuple[complex, float]:
    block = fock_block(u, basis.states, basis.states)
    alpha = estimate_alpha(block, target)
    if abs(alpha) == 0.0:
        return alpha, float("inf")
    return alpha, float(np.linalg.norm(target - block / alpha))


def pick_candidate(lower, upper, target, basis, *, midpoint: bool = False) -> Candidate:
    """Project the two box corners to unitaries and keep the better one.

    Each candidate's code-space block is rescaled by its own amplitude and
    compared with ``target`` in Frobenius norm.  ``midpoint=True`` also
    considers the projection of the box centre.
    """
    target = gates.to_numpy(target)
    corners = {"lower": np.asarray(lower, dtype=float), "upper": np.asarray(upper, dtype=float)}
    if midpoint:
        corners["midpoint"] = 0.5 * (corners["lower"] + corners["upper"])
    best = None
    failures = []
    for name, a in corners.items():
        try:
            u = nearest_unitary(a)
        except RankDeficientError as exc:
            log.warning("%s corner skipped: %s", name, exc)
            failures.append(exc)
            continue
        alpha, dist = _scaled_distance(u, target, basis)
        if best is None or dist < best.residual:
            best = Candidate(u, _normalise_sign(alpha), dist, name)
    if best is None:
        raise RankDeficientError(sorted({d for f in failures for d in f.directions}))
    return best


def box_corners(box, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper corner matrices of a delta-sat region."""
    lower = np.empty((m, m))
    upper = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            iv = box[entry_name(i + 1, j + 1)]
            lower[i, j], upper[i, j] = iv.lo, iv.hi
    return lower, upper


def refine_region(box, target, setup: Setup, *, midpoint: bool = False,
                  tolerance: float | None = None) -> tuple[Candidate, VerificationReport]:
    """Project a region to a unitary and verify it against ``target``.

    The report's tolerance defaults to the regime tolerance; a region at
    precision delta usually verifies only approximately, so callers compare
    the report's probability rather than its verdict.
    """
    lower, upper = box_corners(box, setup.n_wires)
    target = _target(target, setup)
    candidate = pick_candidate(lower, upper, target, coincidence_basis(setup), midpoint=midpoint)
    return candidate, verify(candidate.chosen, target, setup, tolerance)
