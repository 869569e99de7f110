"""Driver for an external delta-solver process speaking SMT-LIB.

The process is given the script path as its last argument.  Its output is
read with the grammar of the established delta-solver: a verdict line
containing ``delta-sat with delta`` or ``unsat``, and model lines of the
form ``name : [lo, hi]``.
"""

from __future__ import annotations

import logging
import os
import re
import shlex
import subprocess
import tempfile
import time
from typing import Sequence

from .core import DELTA_SAT, UNKNOWN, UNSAT, SolverResult
from .intervals import Box

log = logging.getLogger(__name__)

_MODEL = re.compile(r"^\s*([^\s:]+)\s*:\s*\[\s*([^,\]]+)\s*,\s*([^\]]+)\]\s*$")


def parse_output(text: str) -> tuple[str, Box | None, str]:
    """Verdict, model box and a diagnostic string for one solver transcript."""
    verdict = None
    names, lo, hi = [], [], []
    for line in text.splitlines():
        if verdict is None:
            if "delta-sat with delta" in line:
                verdict = DELTA_SAT
                continue
            if line.strip() == "unsat":
                verdict = UNSAT
                continue
        m = _MODEL.match(line)
        if m and verdict == DELTA_SAT:
            try:
                a, b = float(m.group(2)), float(m.group(3))
            except ValueError:
                return UNKNOWN, None, f"unreadable model line {line!r}"
            names.append(m.group(1))
            lo.append(a)
            hi.append(b)
    if verdict is None:
        return UNKNOWN, None, "no verdict line in solver output"
    if verdict == DELTA_SAT:
        return DELTA_SAT, Box(names, lo, hi), ""
    return UNSAT, None, ""


def run_external(script: str, command: str | Sequence[str], timeout: float | None = None) -> SolverResult:
    """Run ``command <script file>`` and read its verdict.

    Spawn failures, non-zero exits without a verdict, unreadable output and
    timeouts all give ``unknown``; ``stats["diagnostic"]`` says which.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    start = time.monotonic()
    fd, path = tempfile.mkstemp(suffix=".smt2", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(script)
        try:
            proc = subprocess.run(argv + [path], capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            return _unknown(start, f"solver timed out after {timeout:g} s")
        except OSError as exc:
            return _unknown(start, f"could not start solver: {exc}")
    finally:
        os.unlink(path)
    status, box, diagnostic = parse_output(proc.stdout)
    if status == UNKNOWN:
        err = proc.stderr.strip().splitlines()[-1:] if proc.stderr.strip() else []
        detail = f"exit code {proc.returncode}" + (f": {err[0]}" if err else "")
        return _unknown(start, f"{diagnostic} ({detail})")
    return SolverResult(status, box, {"wall_time": time.monotonic() - start, "returncode": proc.returncode})


def _unknown(start, diagnostic):
    log.warning("external solver: %s", diagnostic)
    return SolverResult(UNKNOWN, None, {"wall_time": time.monotonic() - start, "diagnostic": diagnostic})
