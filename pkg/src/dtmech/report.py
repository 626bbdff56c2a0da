"""Run reports: a metadata envelope around a deterministic payload.

Every command-line invocation produces one report.  The payload — column
names plus rows, or a JSON document body — is a pure function of the run
configuration and seed, so identical inputs give identical payload bytes
regardless of thread count or wall-clock time.  The metadata (tool version,
echoed configuration, seed, timestamp) travels alongside but never leaks
into the payload: CSV metadata lives on ``#``-prefixed preamble lines above
the header, JSON metadata under a separate ``"meta"`` key.

Floats are serialized with :func:`repr`, the shortest decimal string that
round-trips to the same IEEE double, so written values parse back exactly.
Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``
(JSON has no literals for them; CSV uses the same spelling for symmetry).
"""

from __future__ import annotations

import io
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone

import numpy as np

from . import __version__

CSV_EOL = "\r\n"


def build_meta(command: str, config: dict, seed: int | None,
               threads: int) -> dict:
    """Assemble the metadata envelope for one run.

    ``config`` is the fully resolved configuration (defaults + file +
    flags) echoed back so a report is reproducible from its own header.
    ``seed`` is recorded even when unset (as ``None``) so its absence is
    explicit rather than ambiguous.
    """
    return {
        "tool": "dtmech",
        "version": __version__,
        "command": command,
        "config": dict(config),
        "seed": seed,
        "threads": threads,
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }


def _json_safe(value):
    """Recursively convert a value into something ``json.dumps`` accepts.

    numpy scalars and arrays become Python numbers and lists; non-finite
    floats become their string spellings (JSON has no inf/nan literals).
    """
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": _json_safe(value.real), "im": _json_safe(value.imag)}
    return value


def _csv_cell(value) -> str:
    """One CSV cell: repr floats, true/false booleans, empty for None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    text = str(value)
    if any(ch in text for ch in (",", '"', "\r", "\n")):
        text = '"' + text.replace('"', '""') + '"'
    return text


def render_csv(meta: dict, columns: list, rows: list) -> str:
    """CSV report: ``#`` preamble with the metadata, then header + rows.

    The payload (header line onward) uses CRLF line endings and is byte
    deterministic; the preamble carries the metadata as a single JSON
    object split over comment lines and may vary between runs (timestamp).
    """
    meta_json = json.dumps(_json_safe(meta), sort_keys=True)
    out = io.StringIO()
    for line in meta_json.splitlines() or [meta_json]:
        out.write(f"# {line}{CSV_EOL}")
    out.write(",".join(_csv_cell(c) for c in columns) + CSV_EOL)
    for row in rows:
        out.write(",".join(_csv_cell(c) for c in row) + CSV_EOL)
    return out.getvalue()


def render_json(meta: dict, data) -> str:
    """JSON report: one document with separate ``meta`` and ``data`` keys."""
    doc = {"meta": _json_safe(meta), "data": _json_safe(data)}
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def csv_payload(text: str) -> str:
    """Strip the metadata preamble, leaving only the deterministic payload."""
    return "".join(line + CSV_EOL
                   for line in text.split(CSV_EOL)
                   if line and not line.startswith("#"))


def json_payload(text: str) -> str:
    """Canonical bytes of the ``data`` section of a JSON report."""
    return json.dumps(json.loads(text)["data"], sort_keys=True)


def write_report(text: str, path: str | None) -> None:
    """Write the report to ``path`` atomically, or to stdout if no path.

    The file appears either complete or not at all: the text goes to a
    temporary file in the destination directory which is then renamed over
    the target, so a crash mid-write never leaves a truncated report.
    """
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".dtmech-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
