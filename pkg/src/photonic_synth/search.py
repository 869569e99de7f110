"""Success-probability maximisation by repeated delta-sat queries.

Each round asks for a solution with ``alpha**2 >= alpha_min``.  A delta-sat
answer raises the threshold just above the returned region's best amplitude
and the loop continues; it stops at the first non delta-sat answer or when
the time budget runs out.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from typing import IO

from .constraints import ALPHA
from .encoding import Setup, build_constraints
from .solver import DELTA_SAT, UNSAT, Box, Interval, make_backend

log = logging.getLogger(__name__)

DELTA_OPTIMAL = "delta_optimal"
APPROXIMATE = "approximate"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"

DEFAULT_ALPHA_MIN = 1e-4
DEFAULT_DELTA = 1e-3


@dataclass
class Iteration:
    alpha_min: float
    verdict: str
    wall_time: float

    def to_json(self) -> dict:
        return {"alpha_min": self.alpha_min, "verdict": self.verdict, "wall_time": self.wall_time}


@dataclass
class SearchOutcome:
    result: str
    regions: Box | None = None
    best_alpha_sq: Interval | None = None
    iterations: list[Iteration] = field(default_factory=list)

    def __post_init__(self):
        if (self.regions is not None) != (self.result in (DELTA_OPTIMAL, APPROXIMATE)):
            raise ValueError("regions are present exactly for delta_optimal and approximate results")

    @property
    def success_probability(self) -> float | None:
        """Midpoint of the best ``alpha**2`` bounds."""
        return None if self.best_alpha_sq is None else self.best_alpha_sq.mid

    def to_json(self) -> dict:
        return {
            "result": self.result,
            "regions": None if self.regions is None else self.regions.to_json(),
            "best_alpha_sq": None if self.best_alpha_sq is None else [self.best_alpha_sq.lo, self.best_alpha_sq.hi],
            "iterations": [it.to_json() for it in self.iterations],
        }


def alpha_sq_range(alpha: Interval) -> Interval:
    lo = 0.0 if alpha.lo <= 0.0 <= alpha.hi else min(alpha.lo**2, alpha.hi**2)
    return Interval(lo, max(alpha.lo**2, alpha.hi**2))


def classify(had_region: bool, last_verdict: str) -> str:
    if had_region:
        return DELTA_OPTIMAL if last_verdict == UNSAT else APPROXIMATE
    return INFEASIBLE if last_verdict == UNSAT else UNKNOWN


def optimize(target, setup: Setup, alpha_min: float = DEFAULT_ALPHA_MIN, delta: float = DEFAULT_DELTA,
             timeout: float = 300.0, backend=None, progress: IO[str] | None = None) -> SearchOutcome:
    """Maximise the success probability of ``target`` on ``setup``.

    Every query gets whatever remains of ``timeout``.  ``progress`` receives
    one JSON object per query (iteration, alpha_min, verdict, elapsed).
    """
    if alpha_min < 0:
        raise ValueError("alpha_min must be non-negative")
    if delta <= 0 or timeout <= 0:
        raise ValueError("delta and timeout must be positive")
    backend = make_backend() if backend is None else backend
    system = build_constraints(target, setup)
    start = time.monotonic()
    iterations: list[Iteration] = []
    regions = best = None
    verdict = UNKNOWN
    threshold = float(alpha_min)
    while True:
        remaining = timeout - (time.monotonic() - start)
        if remaining <= 0:
            verdict = UNKNOWN
            break
        t0 = time.monotonic()
        result = backend.solve(system.with_alpha_min(threshold), delta, timeout=remaining)
        verdict = result.status
        iterations.append(Iteration(threshold, verdict, time.monotonic() - t0))
        if progress is not None:
            record = {"iteration": len(iterations), "alpha_min": threshold, "verdict": verdict,
                      "elapsed": time.monotonic() - start}
            progress.write(json.dumps(record) + "\n")
            progress.flush()
        log.info("alpha_min=%.6g -> %s", threshold, verdict)
        if verdict != DELTA_SAT:
            break
        regions = result.box
        sq = alpha_sq_range(regions[ALPHA])
        # the query demanded alpha**2 >= threshold, so nothing below it is a solution
        best = Interval(min(max(sq.lo, threshold), 1.0), min(max(sq.hi, threshold), 1.0))
        threshold = sq.hi + delta / 10
    return SearchOutcome(classify(regions is not None, verdict), regions, best, iterations)
