"""Delta-satisfiability backends."""

from .core import (
    DELTA_SAT,
    UNKNOWN,
    UNSAT,
    BranchAndPrune,
    CompiledSystem,
    SolverResult,
    branch_and_prune,
    eval_interval,
    hc4_revise,
)
from .backends import EmbeddedBackend, ExternalBackend, make_backend
from .external import run_external
from .intervals import Box, Interval

__all__ = [
    "DELTA_SAT",
    "UNKNOWN",
    "UNSAT",
    "Box",
    "BranchAndPrune",
    "CompiledSystem",
    "EmbeddedBackend",
    "ExternalBackend",
    "Interval",
    "SolverResult",
    "branch_and_prune",
    "eval_interval",
    "hc4_revise",
    "make_backend",
    "run_external",
]
