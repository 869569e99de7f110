"""Command-line delta-solver that reads SMT-LIB and answers in the textual
format of the established external solver, backed by the embedded engine.

    python -m photonic_synth.solver.shim [--precision P] script.smt2
"""

from __future__ import annotations

import argparse
import sys

from ..smtlib import SmtParseError, parse_smtlib
from .core import DELTA_SAT, UNSAT, branch_and_prune


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="photonic-synth-shim", description=__doc__.splitlines()[0])
    parser.add_argument("script")
    parser.add_argument("--precision", type=float, default=None,
                        help="overrides the script's :precision option (default 0.001)")
    parser.add_argument("--timeout", type=float, default=None)
    parser.add_argument("--max-branches", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        with open(args.script) as fh:
            system, precision = parse_smtlib(fh.read())
    except (OSError, SmtParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    delta = args.precision or precision or 1e-3
    result = branch_and_prune(system, delta, timeout=args.timeout, max_branches=args.max_branches)
    if result.status == DELTA_SAT:
        print(f"delta-sat with delta = {delta!r}")
        for name, iv in result.box.items():
            print(f"{name} : [{iv.lo!r}, {iv.hi!r}]")
    elif result.status == UNSAT:
        print("unsat")
    else:
        print("unknown")
    return 0


if __name__ == "__main__":
    sys.exit(main())
