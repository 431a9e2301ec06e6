"""Deterministic CSV/JSON writers (17 significant digits, LF endings)."""
from __future__ import annotations

import json
import math
import sys
from contextlib import contextmanager

import numpy as np


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else format(v, ".17g")
    return str(v)


@contextmanager
def _sink(path):
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        yield fh


def csv_text(header, rows, comments=()):
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def emit_csv(header, rows, path=None, comments=()):
    """Write a header row plus ``rows``; ``comments`` become ``#`` lines on top."""
    text = csv_text(header, rows, comments)
    with _sink(path) as fh:
        fh.write(text)


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "null" if not math.isfinite(v) else format(v, ".17g")
    if v is None or isinstance(v, (bool, np.bool_)):
        return json.dumps(None if v is None else bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(v)


def json_text(report: dict):
    body = ",\n".join(f"  {json.dumps(str(k))}: {_json_value(v)}" for k, v in report.items())
    return "{\n" + body + "\n}\n"


def emit_json(report: dict, path=None):
    """Write a flat mapping in insertion order."""
    text = json_text(report)
    with _sink(path) as fh:
        fh.write(text)
