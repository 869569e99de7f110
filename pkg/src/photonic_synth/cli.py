"""Command-line interface.

    photonic-synth verify --matrix U.json --setup cz.json [--gate CZ]
    photonic-synth synth --setup cz.json [--gate CZ]
    photonic-synth sweep-photons --gate CZ --photons 0 1 2
    photonic-synth sweep-givens --angles 0/12 6/12 12/12
    photonic-synth emit-smt --setup cz.json --out cz.smt2

Exit codes: 0 success (verification passed, or a transfer matrix was found),
1 verification failed, 2 unreadable input, 3 infeasible, 4 unknown.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import numpy as np

from . import gates
from .encoding import EncodingError, Setup, build_constraints, load_setup
from .fock import DimensionError, TransferMatrix
from .refine import refine_region, verify
from .search import APPROXIMATE, DELTA_OPTIMAL, INFEASIBLE, UNKNOWN, optimize
from .smtlib import emit_smtlib
from .solver import make_backend

log = logging.getLogger("photonic_synth")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_UNKNOWN = 0, 1, 2, 3, 4
EXIT_CODES = {DELTA_OPTIMAL: EXIT_OK, APPROXIMATE: EXIT_OK, INFEASIBLE: EXIT_INFEASIBLE, UNKNOWN: EXIT_UNKNOWN}
DEFAULTS = {"delta": 1e-3, "alpha_min": 1e-4, "timeout": 300.0, "backend": "embedded"}


class InputError(Exception):
    """Unreadable or invalid user input (exit code 2)."""


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass
class RunRecord:
    command: str
    setup: dict | None
    delta: float | None
    alpha_min: float | None
    timeout: float | None
    outcome: dict
    wall_time: float
    backend: str | None
    version: str = field(default_factory=tool_version)
    arguments: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "arguments": self.arguments,
            "setup": self.setup,
            "delta": self.delta,
            "alpha_min": self.alpha_min,
            "timeout": self.timeout,
            "backend": self.backend,
            "version": self.version,
            "wall_time": self.wall_time,
            "outcome": self.outcome,
        }


# -- input helpers -------------------------------------------------------------

def read_matrix(path: str) -> np.ndarray:
    """JSON ``{"dim", "entries": [[re, im], ...]}``, a JSON nested list, or CSV."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read matrix file: {exc}") from exc
    try:
        if p.suffix.lower() == ".json":
            data = json.loads(text)
            if isinstance(data, dict):
                return TransferMatrix.from_json(data, kind="candidate").entries
            return np.array(data, dtype=complex)
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
        return np.array([[complex(v.strip().replace(" ", "")) for v in r] for r in rows], dtype=complex)
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse matrix file {path}: {exc}") from exc


def resolve_setup(args, default_qubits: int | None = None) -> tuple[Setup, str | None]:
    if getattr(args, "setup", None):
        try:
            setup, gate_field = load_setup(args.setup)
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"cannot read setup file {args.setup}: {exc}") from exc
    else:
        if default_qubits is None:
            raise InputError("a --setup file is required")
        setup, gate_field = Setup(default_qubits), None
    if getattr(args, "no_leakage_constraints", False):
        setup = Setup(setup.qubits, setup.aux, setup.regime, setup.extras, leakage_constraints=False,
                      herald_match=setup.herald_match)
    if getattr(args, "herald_match", None):
        setup = Setup(setup.qubits, setup.aux, setup.regime, setup.extras, setup.leakage_constraints,
                      herald_match=args.herald_match)
    return setup, gate_field


def resolve_gate(name: str | None, gate_field, qubits: int):
    given = name if name is not None else gate_field
    if given is None:
        raise InputError("no gate given (use --gate or a 'gate' field in the setup file)")
    try:
        if isinstance(given, str):
            return gates.gate(given, qubits)
        return np.array([[complex(*v) if isinstance(v, list) else complex(v) for v in row] for row in given])
    except (gates.GateError, ValueError, TypeError) as exc:
        raise InputError(str(exc)) from exc


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config file: {exc}") from exc
    unknown = set(data) - set(DEFAULTS) - {"runs"}
    if unknown:
        raise InputError(f"unknown config keys {sorted(unknown)}")
    return data


def settings(args) -> dict:
    """Flag, then config file, then built-in default."""
    config = load_config(getattr(args, "config", None))
    out = {}
    for key, default in DEFAULTS.items():
        value = getattr(args, key, None)
        out[key] = value if value is not None else config.get(key, default)
    out["runs"] = getattr(args, "runs", None) or config.get("runs", 5)
    return out


def emit(args, record: dict, summary: str):
    if getattr(args, "out", None):
        Path(args.out).write_text(json.dumps(record, indent=2) + "\n")
    print(json.dumps(record, indent=2) if args.json else summary)


# -- commands ------------------------------------------------------------------

def cmd_verify(args) -> int:
    start = time.monotonic()
    setup, gate_field = resolve_setup(args)
    target = resolve_gate(args.gate, gate_field, setup.qubits)
    u = read_matrix(args.matrix)
    try:
        report = verify(TransferMatrix(u, kind="candidate"), target, setup, args.tolerance)
    except (DimensionError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    record = RunRecord("verify", setup.to_json(), None, None, None, report.to_json(),
                       time.monotonic() - start, None, arguments=_arguments(args))
    summary = (f"verdict: {'pass' if report.verdict else 'fail'}\n"
               f"success probability: {report.success_probability:.12g}\n"
               f"residual: {report.residual:.3e}  leakage: {report.leakage_norm:.3e}  "
               f"tolerance: {report.tolerance:g}")
    emit(args, record.to_json(), summary)
    return EXIT_OK if report.verdict else EXIT_FAIL


def synthesize(target, setup: Setup, cfg: dict, seed: int = 0, midpoint: bool = False, progress=None) -> dict:
    options = {"seed": seed} if cfg["backend"] == "embedded" else {}
    try:
        backend = make_backend(cfg["backend"], **options)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    outcome = optimize(target, setup, alpha_min=cfg["alpha_min"], delta=cfg["delta"], timeout=cfg["timeout"],
                       backend=backend, progress=progress)
    result = {"search": outcome.to_json(), "success_probability": outcome.success_probability}
    if outcome.regions is not None:
        candidate, report = refine_region(outcome.regions, target, setup, midpoint=midpoint)
        result["refined"] = {
            "matrix": candidate.chosen.to_json(),
            "corner": candidate.corner,
            "alpha": [candidate.alpha.real, candidate.alpha.imag],
            "candidate_residual": candidate.residual,
            "verification": report.to_json(),
        }
    return result


def cmd_synth(args) -> int:
    start = time.monotonic()
    cfg = settings(args)
    setup, gate_field = resolve_setup(args)
    target = resolve_gate(args.gate, gate_field, setup.qubits)
    progress = sys.stderr if args.progress else None
    try:
        result = synthesize(target, setup, cfg, seed=args.seed, midpoint=args.midpoint, progress=progress)
    except EncodingError as exc:
        raise InputError(str(exc)) from exc
    record = RunRecord("synth", setup.to_json(), cfg["delta"], cfg["alpha_min"], cfg["timeout"], result,
                       time.monotonic() - start, cfg["backend"], arguments=_arguments(args))
    status = result["search"]["result"]
    lines = [f"result: {status}"]
    if result["success_probability"] is not None:
        lo, hi = result["search"]["best_alpha_sq"]
        lines.append(f"success probability: {result['success_probability']:.6f} (alpha^2 in [{lo:.6f}, {hi:.6f}])")
        lines.append(f"refined matrix verified probability: "
                     f"{result['refined']['verification']['success_probability']:.6f}")
    emit(args, record.to_json(), "\n".join(lines))
    return EXIT_CODES[status]


@dataclass
class SweepRow:
    label: str
    probabilities: list = field(default_factory=list)
    times: list = field(default_factory=list)
    results: list = field(default_factory=list)

    def add(self, result: str, probability: float | None, wall_time: float):
        self.results.append(result)
        # a proven infeasible setup is a completed run with probability zero
        if result in (DELTA_OPTIMAL, APPROXIMATE, INFEASIBLE):
            self.probabilities.append(0.0 if result == INFEASIBLE else probability)
            self.times.append(wall_time)

    def csv_row(self) -> list:
        mean = lambda xs: sum(xs) / len(xs) if xs else math.nan  # noqa: E731
        return [self.label, mean(self.probabilities), len(self.probabilities), mean(self.times)]


def _sweep(args, header: str, cases) -> int:
    start = time.monotonic()
    cfg = settings(args)
    rows, runs_json = [], []
    for label, target, setup in cases:
        row = SweepRow(label)
        for run in range(cfg["runs"]):
            seed = 0 if args.seedless_deterministic else run
            t0 = time.monotonic()
            result = synthesize(target, setup, cfg, seed=seed)
            wall = time.monotonic() - t0
            status = result["search"]["result"]
            row.add(status, result["success_probability"], wall)
            runs_json.append({"case": label, "run": run, "seed": seed, "result": status,
                              "success_probability": result["success_probability"], "wall_time": wall,
                              "setup": setup.to_json()})
            log.info("%s run %d: %s %s (%.1f s)", label, run, status, result["success_probability"], wall)
        rows.append(row)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([header, "average_success_probability", "successes", "average_time"])
    for row in rows:
        writer.writerow(row.csv_row())
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    if args.gnuplot:
        Path(args.gnuplot).write_text(_gnuplot_script(args.out or "sweep.csv", header))
    record = RunRecord(args.command, None, cfg["delta"], cfg["alpha_min"], cfg["timeout"], {"runs": runs_json},
                       time.monotonic() - start, cfg["backend"], arguments=_arguments(args))
    if args.record:
        Path(args.record).write_text(json.dumps(record.to_json(), indent=2) + "\n")
    print(json.dumps(record.to_json(), indent=2) if args.json else text, end="" if not args.json else "\n")
    return EXIT_OK


def _gnuplot_script(csv_path: str, header: str) -> str:
    return "\n".join([
        "set datafile separator ','",
        f"set xlabel '{header}'",
        "set ylabel 'average success probability'",
        "set key off",
        f"plot '{csv_path}' using 0:2:xtic(1) with linespoints",
        "",
    ])


def cmd_sweep_photons(args) -> int:
    if not args.photons:
        raise InputError("--photons needs at least one value")
    template, gate_field = resolve_setup(args, default_qubits=2)
    target = resolve_gate(args.gate, gate_field, template.qubits)
    extras = template.extras
    cases = []
    for n in args.photons:
        setup = Setup(template.qubits, (n,) * args.wire_count, template.regime, extras,
                      template.leakage_constraints, template.herald_match)
        cases.append((str(n), target, setup))
    return _sweep(args, "photons", cases)


def parse_angle(text: str) -> float:
    """``a/b`` (a multiple of pi, as in ``6/12``) or a sympy expression such as ``pi/2``."""
    try:
        return float(Fraction(text)) * math.pi
    except ValueError:
        import sympy

        try:
            return float(sympy.sympify(text, locals={"pi": sympy.pi}))
        except (sympy.SympifyError, TypeError) as exc:
            raise InputError(f"cannot read angle {text!r}") from exc


def cmd_sweep_givens(args) -> int:
    template = resolve_setup(args)[0] if args.setup else Setup(2, (0, 0))
    cases = []
    for text in args.angles:
        theta = parse_angle(text)
        if not (0.0 <= theta <= math.pi + 1e-12):
            raise InputError(f"angle {text} is outside [0, pi]")
        cases.append((text, gates.givens(theta), template))
    return _sweep(args, "angle", cases)


def cmd_emit_smt(args) -> int:
    cfg = settings(args)
    setup, gate_field = resolve_setup(args)
    target = resolve_gate(args.gate, gate_field, setup.qubits)
    try:
        system = build_constraints(target, setup)
    except EncodingError as exc:
        raise InputError(str(exc)) from exc
    script = emit_smtlib(system, cfg["delta"], cfg["alpha_min"])
    if args.out:
        Path(args.out).write_text(script)
    else:
        sys.stdout.write(script)
    return EXIT_OK


def _arguments(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func",) and not callable(v)}


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photonic-synth", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, search=True):
        p.add_argument("--json", action="store_true", help="print the full JSON record")
        p.add_argument("--out", help="write the command's output file here")
        p.add_argument("--config", help="JSON file with delta, alpha_min, timeout, backend, runs")
        if search:
            p.add_argument("--delta", type=float)
            p.add_argument("--alpha-min", dest="alpha_min", type=float)
            p.add_argument("--timeout", type=float, help="seconds per search")
            p.add_argument("--backend", help="embedded (default) or external:<command>")
            p.add_argument("--no-leakage-constraints", action="store_true",
                           help="heralded: only constrain the code-space block")
            p.add_argument("--herald-match", choices=["pattern", "total"])

    p = sub.add_parser("verify", help="check a transfer matrix against a gate")
    common(p, search=False)
    p.add_argument("--matrix", required=True, help="JSON or CSV matrix file")
    p.add_argument("--setup", required=True)
    p.add_argument("--gate", help="gate name or givens(theta); defaults to the setup's gate field")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--no-leakage-constraints", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--herald-match", choices=["pattern", "total"])
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synth", help="search for a transfer matrix")
    common(p)
    p.add_argument("--setup", required=True)
    p.add_argument("--gate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--midpoint", action="store_true", help="also try the projection of the region centre")
    p.add_argument("--progress", action="store_true", help="JSON-lines progress on stderr")
    p.set_defaults(func=cmd_synth)

    for name, func, helptext in (("sweep-photons", cmd_sweep_photons, "photon counts on auxiliary wires"),
                                 ("sweep-givens", cmd_sweep_givens, "Givens rotation angles")):
        p = sub.add_parser(name, help=f"sweep {helptext}")
        common(p)
        p.add_argument("--setup", help="template setup (qubits, regime, extras)")
        p.add_argument("--runs", type=int)
        p.add_argument("--seedless-deterministic", action="store_true",
                       help="use the same solver seed for every run")
        p.add_argument("--record", help="write the JSON run record here")
        p.add_argument("--gnuplot", help="write a gnuplot script plotting the CSV")
        if name == "sweep-photons":
            p.add_argument("--gate", default="CZ")
            p.add_argument("--photons", type=int, nargs="+", required=True)
            p.add_argument("--wire-count", type=int, default=1)
        else:
            p.add_argument("--angles", nargs="+", required=True, help="multiples of pi (6/12) or expressions")
        p.set_defaults(func=func)

    p = sub.add_parser("emit-smt", help="write the constraint system as SMT-LIB")
    common(p)
    p.add_argument("--setup", required=True)
    p.add_argument("--gate")
    p.set_defaults(func=cmd_emit_smt)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
