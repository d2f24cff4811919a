"""Deterministic JSON report envelopes and atomic file output.

Reports are replay-deterministic: the same config and seed must produce
byte-identical files.  Everything time- or host-dependent therefore stays
out of the report body (wall time goes to standard error instead), keys
are sorted and floats rendered by repr via the standard JSON encoder.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

__all__ = ["SCHEMA_VERSION", "TOOL_NAME", "make_report", "canonical_json",
           "write_atomic", "write_report", "sanitize"]

SCHEMA_VERSION = 1
TOOL_NAME = "smallgain"


def _tool_version() -> str:
    from . import __version__
    return __version__


def sanitize(obj):
    """Recursively convert an object tree into plain JSON-ready values.

    Numpy scalars and arrays become Python numbers and lists; non-finite
    floats become None (JSON has no representation for them); objects with
    a to_json method are expanded.
    """
    if hasattr(obj, "to_json"):
        return sanitize(obj.to_json())
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def make_report(command: str, config: dict, body, verdict=None) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "tool": {"name": TOOL_NAME, "version": _tool_version()},
        "command": command,
        "config": sanitize(config),
        "report": sanitize(body),
        "verdict": verdict,
    }


def canonical_json(obj) -> str:
    return json.dumps(sanitize(obj), sort_keys=True, indent=2) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory plus rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-report-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_report(path: str, report: dict) -> None:
    write_atomic(path, canonical_json(report))
