"""JSON/CSV rendering of run reports.

Exact values are written as "p/q" strings so reports stay lossless and
byte-deterministic; floats are written with ``repr`` precision.
"""
from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path

from . import _numeric as num

STABILIZATION_HEADER = ["x", "f", "C", "phi_series", "phi_paper", "error", "boundOK"]


def scalar(value):
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    if isinstance(value, (Fraction, int)):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return float(value)


def vector(values):
    if values is None:
        return None
    return [coord(v) for v in values]


def coord(c):
    if isinstance(c, tuple):
        return [scalar(u) for u in c]
    return scalar(c)


def sample(s):
    if s is None:
        return None
    return {"x1": vector(s.x1), "x2": vector(s.x2)}


def dumps(report):
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        parts = [_cell(v) for v in value]
        return parts[0] if len(parts) == 1 else " ".join(parts)
    return num.format_scalar(value)


def stabilization_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STABILIZATION_HEADER)
    for r in rows:
        writer.writerow([
            _cell(r.x), _cell(r.f), _cell(r.C), _cell(r.phi_series),
            _cell(r.phi_paper), _cell(r.error), _cell(r.bound_ok),
        ])
    return buf.getvalue()


def table_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render(report, fmt="json"):
    """Render a RunReport as JSON text or, when it carries a table, as CSV."""
    if fmt == "json":
        return dumps(report.to_dict())
    if fmt == "csv":
        if report.table is None:
            raise ValueError(f"command {report.request.get('command')!r} has no CSV form")
        header, rows = report.table
        if header is STABILIZATION_HEADER:
            return stabilization_csv(rows)
        return table_csv(header, rows)
    raise ValueError(f"unknown output format {fmt!r}")


def emit_report(report, fmt="json", path=None, stream=None):
    """Write ``report`` to ``path``, or to ``stream`` when no path is given."""
    text = render(report, fmt)
    if path is None:
        stream.write(text)
    else:
        Path(path).write_text(text)
    return text
