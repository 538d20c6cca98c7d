"""Deterministic CSV/JSON serialization of reports (17 significant digits)."""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np

from .runner import CSV_COLUMNS, AsymptoticsReport


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return format(x, ".17g")


def _real(z):
    return None if z is None else complex(z).real


def csv_rows(report: AsymptoticsReport) -> list[list]:
    out = []
    for r in report.rows:
        ld = complex(r["log_det"])
        out.append([r["n"], ld.real, ld.imag, _real(r["widom"]), _real(r["hoC"]), _real(r["hoD"]),
                    _real(r["hoE"]), r["tail"], r["ratio"], _real(r["trace_rem"])])
    return out


def render_table(header, rows) -> str:
    """Comma-separated text with fixed float formatting; None becomes an empty cell."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if v is None:
                cells.append("")
            elif isinstance(v, (bool, np.bool_)):
                cells.append(str(bool(v)).lower())
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            elif isinstance(v, (float, np.floating)):
                cells.append(fmt_float(v))
            elif isinstance(v, (complex, np.complexfloating)):
                cells.append(fmt_float(complex(v).real))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_csv(report: AsymptoticsReport) -> str:
    return render_table(CSV_COLUMNS, csv_rows(report))


def to_plain(obj):
    """Nested structure of dicts/lists/str/int/float/bool/None; complex -> [re, im]."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return [z.real, z.imag]
    return obj


def _dump(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}{_dump(str(k))}: {_dump(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, indent + 1) for v in obj) + "\n" + end + "]"
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        s = fmt_float(obj)
        return s if any(ch in s for ch in ".en") else s + ".0"
    import json
    return json.dumps(obj)


def render_json(obj) -> str:
    if isinstance(obj, AsymptoticsReport):
        obj = {"name": obj.name, "columns": list(CSV_COLUMNS), "rows": obj.rows,
               "constants": obj.constants, "fits": obj.fits, "checks": obj.checks,
               "delta": obj.delta, "config": obj.config, "environment": obj.environment,
               "errors": obj.errors}
    return _dump(to_plain(obj)) + "\n"


def emit_report(report: AsymptoticsReport, path, fmt: str = "csv") -> Path:
    """Write the report as CSV or JSON to ``path``; I/O errors propagate unchanged."""
    path = Path(path)
    text = render_csv(report) if fmt == "csv" else render_json(report)
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
