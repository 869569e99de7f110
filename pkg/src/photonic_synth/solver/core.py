"""Embedded delta-satisfiability backend: interval branch and prune.

Boxes are contracted with HC4-revise to a fixpoint, then bisected on the
variable with the largest width relative to its starting width.  For pure
polynomial systems a bounded least-squares search is tried on pending boxes
between search chunks; any point it finds is only accepted after the box
around it passes interval certification, so verdicts never rest on floating
point residuals alone.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from ..constraints import Constraint, ConstraintSystem, Disjunction, EncodingError
from ..polynomial import Polynomial
from . import kernels as K
from .expr import TapeBuilder, Var, wrap
from .intervals import Box, Interval

log = logging.getLogger(__name__)

DELTA_SAT = "delta_sat"
UNSAT = "unsat"
UNKNOWN = "unknown"


@dataclass
class SolverResult:
    status: str
    box: Box | None = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.box is not None) != (self.status == DELTA_SAT):
            raise ValueError("a box is returned exactly when the status is delta_sat")


def _single_var(c: Constraint) -> str | None:
    e = c.expr
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Polynomial) and len(e.terms) == 1:
        (mono, coef), = e.terms.items()
        if len(mono) == 1 and mono[0][1] == 1 and coef == 1:
            return mono[0][0]
    return None


def _merge_disjunction(d: Disjunction) -> Constraint | None:
    """A disjunction of ranges over one expression whose union is an interval."""
    first = d.parts[0].expr
    if not all(p.expr is first or p.expr == first for p in d.parts):
        return None
    ranges = sorted((p.lower, p.upper) for p in d.parts)
    lo, hi = ranges[0]
    for a, b in ranges[1:]:
        if a > hi:
            return None
        hi = max(hi, b)
    return Constraint(first, lo, hi, group=d.group)


def expand_disjunctions(system: ConstraintSystem) -> list[list[Constraint]]:
    """Conjunctive alternatives, branching on disjuncts that cannot be merged."""
    fixed: list[Constraint] = []
    choices: list[tuple[Constraint, ...]] = []
    for c in system.constraints:
        if isinstance(c, Disjunction):
            merged = _merge_disjunction(c)
            if merged is None:
                choices.append(c.parts)
            else:
                fixed.append(merged)
        else:
            fixed.append(c)
    return [fixed + list(pick) for pick in product(*choices)] if choices else [fixed]


class CompiledSystem:
    """Tape form of a conjunctive constraint list over declared variables."""

    def __init__(self, variables: dict, constraints: Sequence[Constraint]):
        self.names = list(variables)
        index = {n: k for k, n in enumerate(self.names)}
        lo = np.array([float(variables[n][0]) for n in self.names])
        hi = np.array([float(variables[n][1]) for n in self.names])
        self.empty = False
        kept: list[Constraint] = []
        for c in constraints:
            missing = c.variables() - index.keys()
            if missing:
                raise EncodingError(f"undeclared variables {sorted(missing)}")
            v = _single_var(c)
            if v is not None:
                k = index[v]
                lo[k] = max(lo[k], c.lower)
                hi[k] = min(hi[k], c.upper)
                if lo[k] > hi[k]:
                    self.empty = True
            else:
                kept.append(c)
        self.lo, self.hi = lo, hi
        self.constraints = kept
        builder = TapeBuilder(index)
        starts, ends = [], []
        for c in kept:
            starts.append(len(builder.op))
            builder.emit(wrap(c.expr))
            ends.append(len(builder.op))
        self.tape = builder.arrays()
        self.c_start = np.array(starts, dtype=np.int64)
        self.c_end = np.array(ends, dtype=np.int64)
        self.c_lo = np.array([c.lower for c in kept], dtype=float)
        self.c_hi = np.array([c.upper for c in kept], dtype=float)
        self.c_weak = np.array([c.weakenable for c in kept], dtype=np.bool_)
        adjacency: list[list[int]] = [[] for _ in self.names]
        for k, c in enumerate(kept):
            for v in sorted(c.variables()):
                adjacency[index[v]].append(k)
        self.v_ptr = np.cumsum([0] + [len(a) for a in adjacency]).astype(np.int64)
        self.v_cons = np.array([k for a in adjacency for k in a], dtype=np.int64)
        self.polynomial = all(isinstance(c.expr, Polynomial) for c in kept)
        self._scratch = np.empty(max(len(builder.op), 1))
        self._scratch2 = np.empty(max(len(builder.op), 1))

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def propagate(self, lo, hi, ratio=0.01, max_revisions=None):
        op, a, b, arg, clo, chi = self.tape
        if max_revisions is None:
            max_revisions = 50 * max(len(self.constraints), 1)
        return K.propagate(op, a, b, arg, clo, chi, self.c_start, self.c_end, self.c_lo, self.c_hi,
                           self.v_ptr, self.v_cons, lo, hi, self._scratch, self._scratch2,
                           ratio, max_revisions)

    def certify(self, lo, hi, delta) -> int:
        op, a, b, arg, clo, chi = self.tape
        return int(K.certify(op, a, b, arg, clo, chi, self.c_start, self.c_end, self.c_lo,
                             self.c_hi, self.c_weak, lo, hi, self._scratch, self._scratch2, delta))


def eval_interval(expression, box: Box | dict) -> Interval:
    """Interval enclosure of ``expression`` over ``box``."""
    if not isinstance(box, Box):
        box = Box.from_dict(box)
    index = {n: k for k, n in enumerate(box.names)}
    builder = TapeBuilder(index)
    builder.emit(wrap(expression))
    op, a, b, arg, clo, chi = builder.arrays()
    vlo = np.empty(len(op))
    vhi = np.empty(len(op))
    if not K.forward(op, a, b, arg, clo, chi, 0, len(op), box.lo.copy(), box.hi.copy(), vlo, vhi):
        raise ValueError("expression is undefined on the whole box")
    return Interval(float(vlo[-1]), float(vhi[-1]))


def hc4_revise(constraint: Constraint, box: Box | dict) -> Box | None:
    """Contract ``box`` with one constraint; ``None`` when no point can satisfy it."""
    if not isinstance(box, Box):
        box = Box.from_dict(box)
    index = {n: k for k, n in enumerate(box.names)}
    builder = TapeBuilder(index)
    builder.emit(wrap(constraint.expr))
    op, a, b, arg, clo, chi = builder.arrays()
    out = box.copy()
    vlo = np.empty(len(op))
    vhi = np.empty(len(op))
    ok = K.revise(op, a, b, arg, clo, chi, 0, len(op), float(constraint.lower),
                  float(constraint.upper), out.lo, out.hi, vlo, vhi)
    return out if ok else None


class _LocalSearch:
    """Bounded least squares on the residuals of a polynomial system."""

    def __init__(self, compiled: CompiledSystem, margin: float):
        self.n = compiled.n_vars
        index = {n: k for k, n in enumerate(compiled.names)}
        mono_cons, coefs, factors = [], [], []
        for k, c in enumerate(compiled.constraints):
            for mono, coef in c.expr.float_terms:
                mono_cons.append(k)
                coefs.append(coef)
                factors.append([index[v] for v, e in mono for _ in range(e)])
        depth = max((len(f) for f in factors), default=0)
        pad = self.n
        self.F = np.array([f + [pad] * (depth - len(f)) for f in factors], dtype=np.int64).reshape(
            len(factors), depth
        )
        self.coef = np.array(coefs, dtype=float)
        self.mcons = np.array(mono_cons, dtype=np.int64)
        self.n_cons = len(compiled.constraints)
        self.lower = compiled.c_lo.copy()
        self.upper = compiled.c_hi.copy()
        self.equality = self.lower == self.upper
        # inequalities are aimed slightly inside so the certified box stays feasible
        self.lower_t = np.where(self.equality, self.lower, self.lower + margin)
        self.upper_t = np.where(self.equality, self.upper, self.upper - margin)

    def values(self, x):
        xe = np.append(x, 1.0)
        terms = self.coef * np.prod(xe[self.F], axis=1) if self.F.shape[1] else self.coef.copy()
        return np.bincount(self.mcons, weights=terms, minlength=self.n_cons)

    def residual(self, x):
        v = self.values(x)
        below = np.minimum(v - self.lower_t, 0.0)
        above = np.maximum(v - self.upper_t, 0.0)
        return np.where(self.equality, v - self.lower, below + above)

    def jacobian(self, x):
        xe = np.append(x, 1.0)
        J = np.zeros((self.n_cons, self.n + 1))
        vals = xe[self.F]
        for d in range(self.F.shape[1]):
            others = np.prod(np.delete(vals, d, axis=1), axis=1) if self.F.shape[1] > 1 else 1.0
            np.add.at(J, (self.mcons, self.F[:, d]), self.coef * others)
        v = self.values(x)
        active = self.equality | (v < self.lower_t) | (v > self.upper_t)
        J[~active] = 0.0
        return J[:, : self.n]

    def solve(self, x0, lo, hi, tol):
        free = hi > lo
        if not free.any():
            r = self.residual(x0)
            return x0, float(np.abs(r).max(initial=0.0))
        base = x0.copy()

        def fun(z):
            base[free] = z
            return self.residual(base)

        def jac(z):
            base[free] = z
            return self.jacobian(base)[:, free]

        z0 = np.clip(x0[free], lo[free], hi[free])
        try:
            res = least_squares(fun, z0, jac=jac, bounds=(lo[free], hi[free]), method="trf",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=100 + 4 * self.n)
        except ValueError:
            return None, math.inf
        x = x0.copy()
        x[free] = res.x
        return x, float(np.abs(self.residual(x)).max(initial=0.0))


class BranchAndPrune:
    """Reusable embedded solver for one conjunctive constraint list."""

    def __init__(self, variables: dict, constraints: Sequence[Constraint], *, delta: float,
                 width_target: float | None = None, local_search: bool = True, seed: int = 0,
                 chunk_nodes: int = 400, ratio: float = 0.01, backoff: float = 1.5):
        if delta <= 0:
            raise ValueError("delta must be positive")
        self.delta = float(delta)
        self.compiled = CompiledSystem(variables, constraints)
        self.width_target = self.delta / 10 if width_target is None else float(width_target)
        self.local = None
        if local_search and self.compiled.polynomial and self.compiled.constraints:
            self.local = _LocalSearch(self.compiled, margin=min(1e-9, self.delta * 1e-3))
        self.rng = np.random.default_rng(seed)
        self.chunk_nodes = chunk_nodes
        self.ratio = ratio
        self.backoff = backoff

    def _witness(self, lo, hi):
        """Try to certify a tiny box around a least-squares point inside [lo, hi]."""
        if self.local is None:
            return None
        span = np.where(np.isfinite(hi - lo), hi - lo, 2.0)
        base = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi - 2.0, -1.0))
        x0 = base + self.rng.random(len(lo)) * span
        x, err = self.local.solve(x0, lo, hi, tol=1e-10)
        if x is None or err > min(1e-9, self.delta * 1e-3):
            return None
        radius = 1e-12 * np.maximum(1.0, np.abs(x))
        wlo = np.maximum(lo, x - radius)
        whi = np.minimum(hi, x + radius)
        if self.compiled.certify(wlo, whi, self.delta) == 2:
            return wlo, whi
        return None

    def solve(self, timeout: float | None = None, max_branches: int | None = None) -> SolverResult:
        c = self.compiled
        start = time.monotonic()
        stats = {"branches": 0, "contractions": 0, "local_searches": 0, "witness": None}

        def done(status, lo=None, hi=None):
            stats["wall_time"] = time.monotonic() - start
            box = Box(c.names, lo, hi) if status == DELTA_SAT else None
            return SolverResult(status, box, stats)

        if c.empty:
            return done(UNSAT)
        lo, hi = c.lo.copy(), c.hi.copy()
        ok, rev = c.propagate(lo, hi, self.ratio)
        stats["contractions"] += rev
        if not ok:
            return done(UNSAT)
        init_w = hi - lo
        init_w = np.where(np.isfinite(init_w), init_w, 1.0)

        w = self._witness(lo, hi)
        stats["local_searches"] += 1
        if w is not None:
            stats["witness"] = "local"
            return done(DELTA_SAT, *w)

        cap = 64 + 8 * c.n_vars
        stack_lo = np.empty((cap, c.n_vars))
        stack_hi = np.empty((cap, c.n_vars))
        stack_lo[0], stack_hi[0] = lo, hi
        depth = 1
        out_lo = np.empty(c.n_vars)
        out_hi = np.empty(c.n_vars)
        op, a, b, arg, clo, chi = c.tape
        max_rev = 50 * max(len(c.constraints), 1)
        # local search runs after chunks 1, 2, 3, 5, 8, ... so that unsat proofs
        # do not pay for it after every chunk
        chunk, next_search = 0, 1.0
        while True:
            if timeout is not None and time.monotonic() - start > timeout:
                return done(UNKNOWN)
            budget = self.chunk_nodes
            if max_branches is not None:
                budget = min(budget, max_branches - stats["branches"])
                if budget <= 0:
                    return done(UNKNOWN)
            status, depth, nodes, rev = K.dfs(
                op, a, b, arg, clo, chi, c.c_start, c.c_end, c.c_lo, c.c_hi, c.c_weak,
                c.v_ptr, c.v_cons, init_w, stack_lo, stack_hi, depth, self.delta,
                self.width_target, self.ratio, max_rev, budget, out_lo, out_hi,
            )
            stats["branches"] += nodes
            stats["contractions"] += rev
            if status == 0:
                return done(UNSAT)
            if status == 1:
                stats["witness"] = "split"
                return done(DELTA_SAT, out_lo.copy(), out_hi.copy())
            if status == 3:
                cap *= 2
                stack_lo = np.concatenate([stack_lo, np.empty_like(stack_lo)])
                stack_hi = np.concatenate([stack_hi, np.empty_like(stack_hi)])
                continue
            chunk += 1
            if self.local is not None and depth > 0 and chunk >= next_search:
                next_search = max(next_search * self.backoff, chunk + 1)
                stats["local_searches"] += 1
                w = self._witness(stack_lo[depth - 1].copy(), stack_hi[depth - 1].copy())
                if w is not None:
                    stats["witness"] = "local"
                    return done(DELTA_SAT, *w)


def branch_and_prune(system: ConstraintSystem, delta: float, timeout: float | None = None,
                     max_branches: int | None = None, **options) -> SolverResult:
    """Decide delta-satisfiability of ``system`` with the embedded backend.

    A ``delta_sat`` box is re-checked by interval evaluation before it is
    returned; a failed re-check raises ``AssertionError``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    system.validate()
    start = time.monotonic()
    verdicts = []
    totals = {"branches": 0, "contractions": 0, "local_searches": 0}
    for constraints in expand_disjunctions(system):
        remaining = None if timeout is None else max(0.0, timeout - (time.monotonic() - start))
        solver = BranchAndPrune(system.variables, constraints, delta=delta, **options)
        result = solver.solve(timeout=remaining, max_branches=max_branches)
        for key in totals:
            totals[key] += result.stats.get(key, 0)
        if result.status == DELTA_SAT:
            check = CompiledSystem(system.variables, constraints)
            assert check.certify(result.box.lo.copy(), result.box.hi.copy(), delta) >= 1, (
                "delta-sat box failed interval certification"
            )
            result.stats.update(totals, wall_time=time.monotonic() - start)
            return result
        verdicts.append(result.status)
    status = UNSAT if all(v == UNSAT for v in verdicts) else UNKNOWN
    return SolverResult(status, None, dict(totals, wall_time=time.monotonic() - start))
