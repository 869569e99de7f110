import math
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from photonic_synth.constraints import Constraint, ConstraintSystem, Disjunction
from photonic_synth.encoding import Setup, build_constraints
from photonic_synth.polynomial import Polynomial
from photonic_synth.solver import (
    DELTA_SAT,
    UNKNOWN,
    UNSAT,
    CompiledSystem,
    ExternalBackend,
    Interval,
    branch_and_prune,
    eval_interval,
    hc4_revise,
    make_backend,
    run_external,
)
from photonic_synth.solver import expr as E
from photonic_synth.solver.core import expand_disjunctions
from photonic_synth.solver.external import parse_output

INF = math.inf
SHIM = [sys.executable, "-m", "photonic_synth.solver.shim"]


def P(name):
    return Polynomial.var(name)


def system(variables, *constraints):
    return ConstraintSystem(dict(variables), list(constraints))


def eq(e, v=0.0):
    return Constraint(e, v, v)


# -- intervals ---------------------------------------------------------------

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(finite, finite, finite, finite)
def test_arithmetic_encloses_exact_result(a, b, c, d):
    x = Interval(min(a, b), max(a, b))
    y = Interval(min(c, d), max(c, d))
    for op in (lambda p, q: p + q, lambda p, q: p - q, lambda p, q: p * q):
        r = op(x, y)
        for p in (x.lo, x.hi):
            for q in (y.lo, y.hi):
                exact = op(Fraction(p), Fraction(q))
                assert Fraction(r.lo) <= exact <= Fraction(r.hi)


def test_decimal_sum_is_enclosed():
    r = Interval.point(0.1) + Interval.point(0.2)
    assert r.lo < r.hi
    assert Fraction(r.lo) <= Fraction(0.1) + Fraction(0.2) <= Fraction(r.hi)


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)


def test_eval_interval_examples():
    x, y = E.Var("x"), E.Var("y")
    r = eval_interval(x ** 2 - y, {"x": (-1, 2), "y": (0, 1)})
    assert r.lo <= -1 and r.hi >= 4 and r.lo > -1.01 and r.hi < 4.01
    s = eval_interval(E.sin(x), {"x": (0, math.pi)})
    assert s.lo <= 0 and 1 <= s.hi < 1.001


def test_hc4_examples():
    x, y = E.Var("x"), E.Var("y")
    out = hc4_revise(Constraint(x + y, 3.0, 3.0), {"x": (0, 10), "y": (0, 1)})
    assert 2 - 1e-9 <= out["x"].lo <= 2 and 3 <= out["x"].hi <= 3 + 1e-9
    assert hc4_revise(Constraint(x ** 2, upper=-1.0), {"x": (-5, 5)}) is None


def _random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.6:
            return E.Var(["x", "y", "z"][rng.integers(3)])
        return E.Const.exact(float(rng.uniform(-2, 2)))
    kind = rng.integers(7)
    a = _random_expr(rng, depth - 1)
    if kind == 0:
        return a + _random_expr(rng, depth - 1)
    if kind == 1:
        return a - _random_expr(rng, depth - 1)
    if kind == 2:
        return a * _random_expr(rng, depth - 1)
    if kind == 3:
        return E.Pow(a, int(rng.integers(2, 4)))
    if kind == 4:
        return E.sin(a)
    if kind == 5:
        return E.cos(a)
    return E.exp(a * 0.1)


def _point_eval(e, p):
    if isinstance(e, E.Var):
        return p[e.name]
    if isinstance(e, E.Const):
        return e.lo
    if isinstance(e, E.Add):
        return _point_eval(e.a, p) + _point_eval(e.b, p)
    if isinstance(e, E.Sub):
        return _point_eval(e.a, p) - _point_eval(e.b, p)
    if isinstance(e, E.Mul):
        return _point_eval(e.a, p) * _point_eval(e.b, p)
    if isinstance(e, E.Neg):
        return -_point_eval(e.a, p)
    if isinstance(e, E.Pow):
        return _point_eval(e.a, p) ** e.n
    return {E.Sin: math.sin, E.Cos: math.cos, E.Exp: math.exp}[type(e)](_point_eval(e.a, p))


def test_random_soundness(rng):
    """1000 random (expression, box, point) triples: the point's value lies in
    the enclosure and survives contraction against a range containing it."""
    for _ in range(1000):
        e = _random_expr(rng, 3)
        bounds = {}
        for v in "xyz":
            a, b = sorted(rng.uniform(-2, 2, 2))
            bounds[v] = (float(a), float(b))
        point = {v: float(rng.uniform(*bounds[v])) for v in "xyz"}
        value = _point_eval(e, point)
        enclosure = eval_interval(e, bounds)
        slack = 1e-9 * max(1.0, abs(value))
        assert enclosure.lo - slack <= value <= enclosure.hi + slack
        contracted = hc4_revise(Constraint(e, value - 0.1, value + 0.1), bounds)
        assert contracted is not None
        for v in "xyz":
            assert contracted[v].lo <= point[v] <= contracted[v].hi


# -- known-status suite ------------------------------------------------------

x, y, z = P("x"), P("y"), P("z")
ex, ey = E.Var("x"), E.Var("y")
unit = {"x": (-1, 1), "y": (-1, 1), "z": (-1, 1)}
wide = {"x": (-10, 10), "y": (-10, 10)}

SUITE = {
    "sqrt2": (system({"x": (0, 2)}, eq(x * x, 2.0)), DELTA_SAT),
    "square_negative": (system({"x": (-INF, INF)}, eq(x * x, -1.0)), UNSAT),
    "circle_diagonal": (system(unit, eq(x * x + y * y, 1.0), eq(x - y)), DELTA_SAT),
    "circle_far_line": (system(unit, eq(x * x + y * y, 1.0), eq(x + y, 3.0)), UNSAT),
    "hyperbola_antidiagonal": (system(unit, eq(x * y, 1.0), eq(x + y)), UNSAT),
    "cubic_root": (system({"x": (0.5, 5)}, eq(x * x * x - x)), DELTA_SAT),
    "sin_two": (system(wide, Constraint(E.sin(ex), 2.0, 2.0)), UNSAT),
    "exp_five": (system(wide, Constraint(E.exp(ex), 5.0, 5.0)), DELTA_SAT),
    "exp_nonpositive": (system(wide, Constraint(E.exp(ex), upper=0.0)), UNSAT),
    "log_one": (system({"x": (1, 5)}, Constraint(E.log(ex), 1.0, 1.0)), DELTA_SAT),
    "sqrt_three": (system({"x": (0, 20)}, Constraint(E.sqrt(ex), 3.0, 3.0)), DELTA_SAT),
    "sphere_plane_near": (system(unit, eq(x * x + y * y + z * z, 1.0), eq(x + y + z, 1.7)), DELTA_SAT),
    "sphere_plane_far": (system(unit, eq(x * x + y * y + z * z, 1.0), eq(x + y + z, 1.8)), UNSAT),
    "orthogonal_rows": (
        system({"a": (-1, 1), "b": (-1, 1), "c": (-1, 1), "d": (-1, 1)},
               eq(P("a") * P("a") + P("b") * P("b"), 1.0), eq(P("c") * P("c") + P("d") * P("d"), 1.0),
               eq(P("a") * P("c") + P("b") * P("d")), eq(P("a") - P("c"))),
        DELTA_SAT,
    ),
    "no_real_pair": (system(wide, eq(x * y, 2.0), eq(x + y, 2.0)), UNSAT),
    "real_pair": (system(wide, eq(x * y, 1.0), eq(x + y, 2.5)), DELTA_SAT),
    "exp_sin_curve": (
        system({"x": (-INF, INF), "y": (-INF, INF)}, Constraint(ex + 2 ** ey, 3.0, 3.0),
               Constraint(ey - E.sin(ex), lower=0.0, strict_lower=True),
               Constraint(ex, lower=0.5, strict_lower=True)),
        DELTA_SAT,
    ),
    "quartic_below": (system(wide, eq(x * x * x * x + y * y * y * y + 1, 0.5)), UNSAT),
    "strict_gap": (
        system(wide, Constraint(x, lower=1.0, strict_lower=True), Constraint(x * x, upper=0.9, strict_upper=True)),
        UNSAT,
    ),
    "disjunctive_root": (
        system({"x": (-5, 5)}, eq(x * x, 4.0),
               Disjunction((Constraint(x, 1.0, 1.0), Constraint(x, upper=0.0, strict_upper=True)))),
        DELTA_SAT,
    ),
}


@pytest.mark.parametrize("name", sorted(SUITE))
def test_known_status(name):
    sys_, expected = SUITE[name]
    result = branch_and_prune(sys_, 1e-3, timeout=60)
    assert result.status == expected
    if result.status == DELTA_SAT:
        assert any(
            CompiledSystem(sys_.variables, alt).certify(result.box.lo.copy(), result.box.hi.copy(), 1e-3) >= 1
            for alt in expand_disjunctions(sys_)
        )


def test_suite_size():
    assert len(SUITE) == 20


@pytest.mark.parametrize("name", sorted(SUITE))
def test_delta_monotonicity(name):
    sys_, _ = SUITE[name]
    fine = branch_and_prune(sys_, 1e-4, timeout=60).status
    coarse = branch_and_prune(sys_, 1e-2, timeout=60).status
    if fine == DELTA_SAT:
        assert coarse == DELTA_SAT
    if coarse == UNSAT:
        assert fine == UNSAT


def test_determinism():
    sys_, _ = SUITE["exp_sin_curve"]
    a = branch_and_prune(sys_, 1e-3)
    b = branch_and_prune(sys_, 1e-3)
    assert a.box.to_json() == b.box.to_json()


def test_weakening_only_touches_equalities():
    # at x = 0, x*x = 1e-4 is within delta = 1e-3 of holding; x*x >= 1e-4 is simply false
    point = np.zeros(1)
    weak = CompiledSystem({"x": (0, 0), "y": (0, 0)}, [Constraint(x * x + y, 1e-4, 1e-4)])
    assert weak.certify(np.zeros(2), np.zeros(2), 1e-3) == 2
    assert weak.certify(np.zeros(2), np.zeros(2), 1e-5) == 0
    strict = CompiledSystem({"x": (0, 0)}, [Constraint(x * x, lower=1e-4)])
    assert strict.certify(point, point, 1e-3) == 0


def test_unsat_refers_to_the_exact_formula():
    # pruning uses the exact constraints, so an exactly infeasible system is
    # unsat even when its delta-weakening would be satisfiable
    sys_ = system({"x": (0, 0)}, eq(x * x, 1e-4))
    assert branch_and_prune(sys_, 1e-3).status == UNSAT


def test_cz_without_aux_is_unsat():
    cz = build_constraints("CZ", Setup(2, ())).with_alpha_min(0.01)
    assert branch_and_prune(cz, 1e-3, timeout=120).status == UNSAT


def test_max_branches_gives_unknown():
    cz = build_constraints("CZ", Setup(2, (0, 0))).with_alpha_min(0.11)
    assert branch_and_prune(cz, 1e-3, max_branches=10, local_search=False).status == UNKNOWN


def test_bad_delta():
    with pytest.raises(ValueError):
        branch_and_prune(SUITE["sqrt2"][0], 0.0)


# -- external driver ---------------------------------------------------------

def test_parse_output():
    text = "delta-sat with delta = 0.001\nx : [0.5, 0.6]\ny : [-1, 1]\n"
    status, box, _ = parse_output(text)
    assert status == DELTA_SAT and box["x"] == Interval(0.5, 0.6) and box["y"].lo == -1
    assert parse_output("unsat\n")[0] == UNSAT
    assert parse_output("garbage")[0] == UNKNOWN


def test_shim_unsat_contradiction():
    result = run_external("(assert (= 1 0))\n(check-sat)\n", SHIM, timeout=60)
    assert result.status == UNSAT


def test_shim_identity_sat():
    sys_ = build_constraints("identity", Setup(1, ()))
    backend = ExternalBackend(" ".join(SHIM))
    result = backend.solve(sys_.with_alpha_min(0.5), 1e-3, timeout=60)
    assert result.status == DELTA_SAT
    assert list(result.box.names) == list(sys_.variables)


def test_external_timeout():
    slow = [sys.executable, "-c", "import time; time.sleep(30)"]
    result = run_external("(check-sat)\n", slow, timeout=1)
    assert result.status == UNKNOWN and "timed out" in result.stats["diagnostic"]


def test_external_spawn_failure():
    result = run_external("(check-sat)\n", "/nonexistent/solver", timeout=5)
    assert result.status == UNKNOWN and "could not start" in result.stats["diagnostic"]


def test_external_model_is_recertified(tmp_path):
    liar = tmp_path / "liar.py"
    liar.write_text("print('delta-sat with delta = 0.001')\nprint('x : [5, 6]')\n")
    sys_ = system({"x": (0, 2)}, eq(x * x, 2.0))
    result = ExternalBackend(f"{sys.executable} {liar}").solve(sys_, 1e-3, timeout=30)
    assert result.status == UNKNOWN and "certification" in result.stats["diagnostic"]


def test_make_backend(monkeypatch):
    assert make_backend().name == "embedded"
    assert make_backend("external:solver").command == "solver"
    monkeypatch.setenv("PHOTONIC_SYNTH_BACKEND", "external:foo --x")
    assert make_backend().command == "foo --x"
    with pytest.raises(ValueError):
        make_backend("bogus")
