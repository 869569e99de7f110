"""Backend selection: ``embedded`` or ``external:<command>``."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from ..constraints import ConstraintSystem
from .core import DELTA_SAT, UNKNOWN, CompiledSystem, SolverResult, branch_and_prune, expand_disjunctions
from .external import run_external
from .intervals import Box

#: Environment variable naming the default backend.
BACKEND_ENV = "PHOTONIC_SYNTH_BACKEND"


@dataclass
class EmbeddedBackend:
    options: dict = field(default_factory=dict)
    name: str = "embedded"

    def solve(self, system: ConstraintSystem, delta: float, timeout: float | None = None) -> SolverResult:
        return branch_and_prune(system, delta, timeout=timeout, **self.options)


@dataclass
class ExternalBackend:
    command: str

    @property
    def name(self) -> str:
        return f"external:{self.command}"

    def solve(self, system: ConstraintSystem, delta: float, timeout: float | None = None) -> SolverResult:
        from ..smtlib import emit_smtlib

        result = run_external(emit_smtlib(system, delta), self.command, timeout)
        if result.status == DELTA_SAT:
            missing = set(system.variables) - set(result.box.names)
            if missing:
                return _reject(result, f"model lacks variables {sorted(missing)}")
            box = result.box
            lo = [box[n].lo for n in system.variables]
            hi = [box[n].hi for n in system.variables]
            result.box = Box(list(system.variables), lo, hi)
            # the external model is only trusted after our own interval check
            certified = any(
                CompiledSystem(system.variables, alt).certify(result.box.lo.copy(), result.box.hi.copy(), delta) >= 1
                for alt in expand_disjunctions(system)
            )
            if not certified:
                return _reject(result, "model box failed interval certification")
        return result


def _reject(result: SolverResult, why: str) -> SolverResult:
    return SolverResult(UNKNOWN, None, dict(result.stats, diagnostic=why))


def make_backend(choice: str | None = None, **options):
    """``"embedded"`` (default, or from the environment) or ``"external:<command>"``."""
    choice = choice or os.environ.get(BACKEND_ENV) or "embedded"
    if choice == "embedded":
        return EmbeddedBackend(options)
    if choice.startswith("external:") and choice[len("external:"):].strip():
        return ExternalBackend(choice[len("external:"):].strip())
    raise ValueError(f"unknown backend {choice!r}; use 'embedded' or 'external:<command>'")
