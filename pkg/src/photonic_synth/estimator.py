"""Scikit-learn style front ends for synthesis and verification."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import gates
from .encoding import Setup, coincidence_basis, extras_from_json
from .fock import TransferMatrix, fock_block
from .refine import refine_region, verify
from .search import DEFAULT_ALPHA_MIN, DEFAULT_DELTA, optimize
from .solver import make_backend


def _setup(est) -> Setup:
    extras = est.extras
    if extras and isinstance(extras[0], dict):
        extras = extras_from_json(extras)
    return Setup(est.qubits, tuple(est.aux), est.regime, tuple(extras or ()),
                 leakage_constraints=est.leakage_constraints, herald_match=est.herald_match)


def _complex_array(X) -> np.ndarray:
    # check_array refuses complex input, which gates and amplitudes need
    a = np.asarray(X, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("input contains NaN or infinity")
    return a


def _target(X, qubits):
    if isinstance(X, str):
        return gates.to_numpy(gates.gate(X, qubits))
    return _complex_array(X)


class GateSynthesizer(BaseEstimator):
    """Search for a real transfer matrix implementing a gate on a wire setup.

    ``fit(X)`` takes the target gate (a ``2**qubits`` square matrix or a
    built-in gate name).  After fitting, ``outcome_`` holds the search
    outcome; when a region was found ``transfer_matrix_``, ``alpha_`` and
    ``report_`` hold the refined unitary and its verification.
    """

    def __init__(self, qubits=2, aux=(0, 0), regime="post_select", extras=(), delta=DEFAULT_DELTA,
                 alpha_min=DEFAULT_ALPHA_MIN, timeout=300.0, backend="embedded", midpoint=False,
                 leakage_constraints=True, herald_match="pattern"):
        self.qubits = qubits
        self.aux = aux
        self.regime = regime
        self.extras = extras
        self.delta = delta
        self.alpha_min = alpha_min
        self.timeout = timeout
        self.backend = backend
        self.midpoint = midpoint
        self.leakage_constraints = leakage_constraints
        self.herald_match = herald_match

    def fit(self, X, y=None, progress=None):
        target = _target(X, self.qubits)
        setup = _setup(self)
        self.setup_ = setup
        self.target_ = target
        self.outcome_ = optimize(target, setup, alpha_min=self.alpha_min, delta=self.delta,
                                 timeout=self.timeout, backend=make_backend(self.backend), progress=progress)
        self.transfer_matrix_ = self.alpha_ = self.report_ = None
        if self.outcome_.regions is not None:
            candidate, report = refine_region(self.outcome_.regions, target, setup, midpoint=self.midpoint)
            self.transfer_matrix_ = candidate.chosen
            self.alpha_ = candidate.alpha
            self.report_ = report
        return self

    def predict(self, X):
        """Apply the implemented code-space map to rows of qubit amplitudes.

        Output rows are unnormalised: their squared norm is the probability
        that the run is accepted.
        """
        check_is_fitted(self, "outcome_")
        if self.transfer_matrix_ is None:
            raise ValueError(f"no transfer matrix was found (search result: {self.outcome_.result})")
        X = _complex_array(X)
        states = coincidence_basis(self.setup_).states
        block = fock_block(self.transfer_matrix_, states, states)
        return X @ block.T

    def score(self, X=None, y=None):
        """Success probability of the refined matrix (0 when none was found)."""
        check_is_fitted(self, "outcome_")
        return 0.0 if self.report_ is None else self.report_.success_probability


class GateVerifier(BaseEstimator):
    """Check a transfer matrix against a target gate on a wire setup.

    ``fit(X, y)`` takes the transfer matrix ``X`` and the target ``y`` (matrix
    or gate name) and stores ``report_``; ``predict`` returns the verdict.
    """

    def __init__(self, qubits=2, aux=(0, 0), regime="post_select", extras=(), tolerance=None,
                 leakage_constraints=True, herald_match="pattern"):
        self.qubits = qubits
        self.aux = aux
        self.regime = regime
        self.extras = extras
        self.tolerance = tolerance
        self.leakage_constraints = leakage_constraints
        self.herald_match = herald_match

    def fit(self, X, y):
        u = _complex_array(X)
        setup = _setup(self)
        self.report_ = verify(TransferMatrix(u, kind="candidate"), _target(y, self.qubits), setup, self.tolerance)
        return self

    def predict(self, X=None):
        check_is_fitted(self, "report_")
        return self.report_.verdict

    def score(self, X=None, y=None):
        check_is_fitted(self, "report_")
        return self.report_.success_probability
