"""SMT-LIB 2.6 (QF_NRA) emission and a reader for the subset we emit."""

from __future__ import annotations

import math
import re
from decimal import Decimal

import sympy

from .constraints import ALPHA, Constraint, ConstraintSystem, Disjunction
from .polynomial import Polynomial


class SmtParseError(ValueError):
    pass


def format_decimal(x: float) -> str:
    """17 significant digits, positional notation, negatives as ``(- x)``."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot emit non-finite constant {x}")
    text = format(Decimal(f"{abs(x):.17g}"), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    if "." not in text:
        text += ".0"
    return f"(- {text})" if x < 0 else text


def _rational(r: sympy.Rational) -> str:
    p, q = abs(int(r.p)), int(r.q)
    body = str(p) if q == 1 else f"(/ {p} {q})"
    return f"(- {body})" if r < 0 else body


def format_coefficient(c) -> str:
    """Exact rationals and rational multiples of square roots stay exact."""
    c = sympy.sympify(c)
    if c.is_Rational:
        return _rational(c)
    coeff, rest = c.as_coeff_Mul()
    if (coeff.is_Rational and isinstance(rest, sympy.Pow) and rest.exp == sympy.Rational(1, 2)
            and rest.base.is_Rational and rest.base > 0):
        root = f"(sqrt {_rational(rest.base)})"
        if coeff == 1:
            return root
        if coeff == -1:
            return f"(- {root})"
        return f"(* {_rational(coeff)} {root})"
    return format_decimal(float(c))


def _monomial(mono) -> list[str]:
    return [v for v, e in mono for _ in range(e)]


def format_polynomial(p: Polynomial) -> str:
    if not p.terms:
        return "0"
    terms = []
    for mono, c in p.terms.items():
        factors = _monomial(mono)
        if not factors:
            terms.append(format_coefficient(c))
            continue
        if c == 1:
            terms.append(factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})")
        elif c == -1:
            inner = factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})"
            terms.append(f"(- {inner})")
        else:
            terms.append(f"(* {format_coefficient(c)} {' '.join(factors)})")
    return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"


def format_expr(e) -> str:
    if isinstance(e, Polynomial):
        return format_polynomial(e)
    from .solver import expr as E

    if isinstance(e, E.Var):
        return e.name
    if isinstance(e, E.Const):
        return format_decimal(e.lo if e.lo == e.hi else 0.5 * (e.lo + e.hi))
    binary = {E.Add: "+", E.Sub: "-", E.Mul: "*"}
    for cls, sym in binary.items():
        if isinstance(e, cls):
            return f"({sym} {format_expr(e.a)} {format_expr(e.b)})"
    if isinstance(e, E.Neg):
        return f"(- {format_expr(e.a)})"
    if isinstance(e, E.Pow):
        return f"(^ {format_expr(e.a)} {e.n})"
    unary = {E.Exp: "exp", E.Log: "log", E.Sin: "sin", E.Cos: "cos", E.Sqrt: "sqrt"}
    for cls, sym in unary.items():
        if isinstance(e, cls):
            return f"({sym} {format_expr(e.a)})"
    raise TypeError(f"cannot emit {type(e).__name__}")


def format_constraint(c: Constraint) -> str:
    e = format_expr(c.expr)
    if c.is_equality:
        return f"(= {e} {format_decimal(c.lower) if c.lower else '0'})"
    parts = []
    if c.lower != -math.inf:
        parts.append(f"({'<' if c.strict_lower else '<='} {format_decimal(c.lower)} {e})")
    if c.upper != math.inf:
        parts.append(f"({'<' if c.strict_upper else '<='} {e} {format_decimal(c.upper)})")
    if not parts:
        return "true"
    return parts[0] if len(parts) == 1 else f"(and {' '.join(parts)})"


def _bound_variable(c) -> str | None:
    """Name of ``x`` when ``c`` is a plain range constraint on ``x``."""
    if isinstance(c, Constraint) and isinstance(c.expr, Polynomial) and len(c.expr.terms) == 1:
        (mono, coef), = c.expr.terms.items()
        if len(mono) == 1 and mono[0][1] == 1 and coef == 1:
            return mono[0][0]
    return None


def emit_smtlib(system: ConstraintSystem, delta: float, alpha_min: float | None = None) -> str:
    """Render ``system`` (plus ``alpha * alpha >= alpha_min``) as a QF_NRA script.

    Declarations follow the system's variable order; declared bounds that no
    constraint already states are asserted first.  Output is a pure function
    of the inputs.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if alpha_min is not None and ALPHA in system.variables:
        system = system.with_alpha_min(alpha_min)
    lines = ["(set-logic QF_NRA)", f"(set-option :precision {format_decimal(delta)})"]
    lines += [f"(declare-fun {name} () Real)" for name in system.variables]
    stated = {_bound_variable(c) for c in system.constraints} - {None}
    for name, (lo, hi) in system.variables.items():
        if name in stated:
            continue
        if lo != -math.inf:
            lines.append(f"(assert (<= {format_decimal(lo)} {name}))")
        if hi != math.inf:
            lines.append(f"(assert (<= {name} {format_decimal(hi)}))")
    for c in system.constraints:
        if isinstance(c, Disjunction):
            body = f"(or {' '.join(format_constraint(p) for p in c.parts)})"
        else:
            body = format_constraint(c)
        lines.append(f"(assert {body})")
    lines += ["(check-sat)", "(get-model)", "(exit)"]
    return "\n".join(lines) + "\n"


# -- reading -----------------------------------------------------------------

_TOKEN = re.compile(r";[^\n]*|\(|\)|\|[^|]*\||[^\s()]+")


def _sexprs(text: str):
    stack: list[list] = [[]]
    for tok in _TOKEN.findall(text):
        if tok.startswith(";"):
            continue
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SmtParseError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok.strip("|"))
    if len(stack) != 1:
        raise SmtParseError("unbalanced '('")
    return stack[0]


_NUMBER = re.compile(r"^[0-9]+(\.[0-9]*)?$")


class _Reader:
    def __init__(self, declared):
        self.declared = declared

    def term(self, t):
        """Polynomial where possible, expression tree otherwise."""
        if isinstance(t, str):
            if _NUMBER.match(t):
                return Polynomial.constant(sympy.Rational(t))
            if t not in self.declared:
                raise SmtParseError(f"undeclared symbol {t!r}")
            return Polynomial.var(t)
        if not t:
            raise SmtParseError("empty term")
        head, args = t[0], [self.term(a) for a in t[1:]]
        if head == "+":
            return _fold(args, lambda a, b: a + b)
        if head == "*":
            return _fold(args, lambda a, b: a * b)
        if head == "-":
            if len(args) == 1:
                return -args[0]
            return _fold(args, lambda a, b: a - b)
        if head == "/":
            num, den = args
            value = _constant(den)
            if value is None:
                return _as_expr(num) / _as_expr(den)
            return num * (1 / value) if isinstance(num, Polynomial) else _as_expr(num) / float(value)
        if head in ("^", "pow"):
            base, power = args
            n = _constant(power)
            if n is not None and n.is_Integer and n >= 0:
                out = Polynomial.constant(1) if isinstance(base, Polynomial) else None
                if out is not None:
                    for _ in range(int(n)):
                        out = out * base
                    return out
                from .solver import expr as E
                return E.Pow(_as_expr(base), int(n))
            return _as_expr(base) ** _as_expr(power)
        if head == "sqrt":
            (a,) = args
            value = _constant(a)
            if value is not None and value >= 0:
                return Polynomial.constant(sympy.sqrt(value))
        from .solver import expr as E

        funcs = {"exp": E.exp, "log": E.log, "sin": E.sin, "cos": E.cos, "sqrt": E.sqrt}
        if head in funcs:
            (a,) = args
            return funcs[head](_as_expr(a))
        raise SmtParseError(f"unsupported operator {head!r}")

    def atom(self, t) -> Constraint | Disjunction | None:
        if t == "true":
            return None
        if not isinstance(t, list) or not t:
            raise SmtParseError(f"unsupported formula {t!r}")
        head = t[0]
        if head == "or":
            parts = [self.atom(a) for a in t[1:]]
            if any(not isinstance(p, Constraint) for p in parts):
                raise SmtParseError("only disjunctions of atoms are supported")
            return Disjunction(tuple(parts))
        if head not in ("=", "<=", "<", ">=", ">") or len(t) != 3:
            raise SmtParseError(f"unsupported formula head {head!r}")
        a, b = self.term(t[1]), self.term(t[2])
        if head in (">=", ">"):
            a, b = b, a
        strict = head in ("<", ">")
        ca, cb = _constant(a), _constant(b)
        if head == "=":
            if cb is not None:
                return Constraint(a, float(cb), float(cb))
            if ca is not None:
                return Constraint(b, float(ca), float(ca))
            return Constraint(a - b, 0.0, 0.0)
        # a <= b
        if ca is not None:
            return Constraint(b, lower=float(ca), strict_lower=strict)
        if cb is not None:
            return Constraint(a, upper=float(cb), strict_upper=strict)
        return Constraint(a - b, upper=0.0, strict_upper=strict)


def _fold(args, op):
    out = args[0]
    for a in args[1:]:
        if isinstance(out, Polynomial) and isinstance(a, Polynomial):
            out = op(out, a)
        else:
            out = op(_as_expr(out), _as_expr(a))
    return out


def _constant(p):
    if isinstance(p, Polynomial) and set(p.terms) <= {()}:
        return p.terms.get((), sympy.Integer(0))
    return None


def _as_expr(p):
    return p.to_expr() if isinstance(p, Polynomial) else p


def parse_smtlib(text: str) -> tuple[ConstraintSystem, float | None]:
    """Read a script in the emitted subset; returns the system and its precision."""
    system = ConstraintSystem()
    precision = None
    reader = _Reader(system.variables)
    for cmd in _sexprs(text):
        if not isinstance(cmd, list) or not cmd:
            raise SmtParseError(f"unexpected top-level token {cmd!r}")
        head = cmd[0]
        if head == "declare-fun":
            name, params, sort = cmd[1], cmd[2], cmd[3]
            if params or sort != "Real":
                raise SmtParseError(f"only nullary Real declarations are supported ({name})")
            system.variables[name] = (-math.inf, math.inf)
        elif head == "declare-const":
            if cmd[2] != "Real":
                raise SmtParseError(f"only Real constants are supported ({cmd[1]})")
            system.variables[cmd[1]] = (-math.inf, math.inf)
        elif head == "set-option":
            if cmd[1] == ":precision":
                precision = float(cmd[2])
        elif head == "assert":
            body = cmd[1]
            todo = [body]
            while todo:
                f = todo.pop(0)
                if isinstance(f, list) and f and f[0] == "and":
                    todo[:0] = f[1:]
                    continue
                c = reader.atom(f)
                if c is not None:
                    system.constraints.append(c)
        elif head in ("set-logic", "check-sat", "get-model", "exit", "set-info"):
            continue
        else:
            raise SmtParseError(f"unsupported command {head!r}")
    return system, precision
