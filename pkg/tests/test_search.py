import io
import json

import numpy as np
import pytest

from photonic_synth.constraints import ALPHA
from photonic_synth.encoding import Setup, isolate_wires
from photonic_synth.search import (
    APPROXIMATE,
    DELTA_OPTIMAL,
    INFEASIBLE,
    UNKNOWN,
    SearchOutcome,
    alpha_sq_range,
    optimize,
)
from photonic_synth.solver import DELTA_SAT, UNSAT, Box, Interval, SolverResult
from photonic_synth.solver import UNKNOWN as SOLVER_UNKNOWN


class ScriptedBackend:
    """Answers queries from a fixed list of (status, alpha interval)."""

    def __init__(self, script):
        self.script = list(script)
        self.queries = []

    def solve(self, system, delta, timeout=None):
        alpha_min = [c.lower for c in system.constraints if c.group == "alpha_min"]
        self.queries.append(alpha_min[-1])
        status, alpha = self.script.pop(0)
        if status != DELTA_SAT:
            return SolverResult(status)
        names = list(system.variables)
        lo = np.zeros(len(names))
        hi = np.zeros(len(names))
        k = names.index(ALPHA)
        lo[k], hi[k] = alpha
        return SolverResult(status, Box(names, lo, hi))


@pytest.mark.parametrize("script, expected", [
    ([(DELTA_SAT, (0.3, 0.31)), (DELTA_SAT, (0.4, 0.41)), (UNSAT, None)], DELTA_OPTIMAL),
    ([(DELTA_SAT, (0.3, 0.31)), (SOLVER_UNKNOWN, None)], APPROXIMATE),
    ([(UNSAT, None)], INFEASIBLE),
    ([(SOLVER_UNKNOWN, None)], UNKNOWN),
])
def test_classification(script, expected):
    backend = ScriptedBackend(script)
    outcome = optimize("identity", Setup(1), alpha_min=1e-4, delta=1e-3, timeout=10, backend=backend)
    assert outcome.result == expected
    assert (outcome.regions is None) == (expected in (INFEASIBLE, UNKNOWN))
    assert len(outcome.iterations) == len(script)


def test_thresholds_increase_by_at_least_delta_over_ten():
    script = [(DELTA_SAT, (0.3, 0.3)), (DELTA_SAT, (-0.31, -0.305)), (DELTA_SAT, (0.32, 0.33)), (UNSAT, None)]
    backend = ScriptedBackend(script)
    outcome = optimize("identity", Setup(1), alpha_min=1e-4, delta=1e-3, timeout=10, backend=backend)
    q = backend.queries
    assert all(b - a >= 1e-4 * (1 - 1e-12) for a, b in zip(q, q[1:]))
    assert q[1] == pytest.approx(0.09 + 1e-4)
    assert outcome.best_alpha_sq.hi == pytest.approx(0.33**2)


def test_best_range_clipped_to_threshold():
    backend = ScriptedBackend([(DELTA_SAT, (-0.1, 0.5)), (UNSAT, None)])
    outcome = optimize("identity", Setup(1), alpha_min=0.04, delta=1e-3, timeout=10, backend=backend)
    assert outcome.best_alpha_sq.lo == 0.04


def test_alpha_sq_range():
    assert alpha_sq_range(Interval(-0.2, 0.3)) == Interval(0.0, 0.3**2)
    assert alpha_sq_range(Interval(-0.5, -0.4)).lo == pytest.approx(0.16)


def test_outcome_invariant():
    with pytest.raises(ValueError):
        SearchOutcome(INFEASIBLE, regions=Box(["alpha"], [0.1], [0.2]))
    with pytest.raises(ValueError):
        SearchOutcome(DELTA_OPTIMAL)


def test_identity_is_delta_optimal():
    log = io.StringIO()
    outcome = optimize("identity", Setup(1), delta=1e-3, timeout=60, progress=log)
    assert outcome.result == DELTA_OPTIMAL
    assert outcome.success_probability == pytest.approx(1.0, abs=2e-3)
    records = [json.loads(line) for line in log.getvalue().splitlines()]
    assert [r["iteration"] for r in records] == list(range(1, len(records) + 1))
    assert records[-1]["verdict"] == UNSAT
    # asking again above the proven bound is infeasible
    again = optimize("identity", Setup(1), alpha_min=records[-1]["alpha_min"], delta=1e-3, timeout=60)
    assert again.result == INFEASIBLE


def test_cz_one_vacuum_is_infeasible():
    setup = Setup(2, (0,), extras=tuple(isolate_wires([1, 3], range(1, 5))))
    outcome = optimize("CZ", setup, delta=1e-3, timeout=300)
    assert outcome.result == INFEASIBLE


@pytest.mark.parametrize("kwargs", [{"alpha_min": -1}, {"delta": 0}, {"timeout": 0}])
def test_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        optimize("identity", Setup(1), backend=ScriptedBackend([]), **kwargs)
