"""
Run-history files: the fixed-schema CSV time series and a JSON form that also
keeps run metadata, the L2 column and the identity snapshots.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Optional

from .diagnostics import CSV_COLUMNS, EnergyReport, RunHistory, Snapshot

__all__ = ["history_to_csv", "history_from_csv", "history_to_json", "history_from_json", "load_history"]

_REPORT_FIELDS = ("time", "E", "E_C", "E_l", "E_gamma", "constraint_residual",
                  "linf_phi_loc", "linf_A_loc", "h4_phi_loc", "h4_A_loc", "l2_phi_loc")


def _fmt(x: float) -> str:
    # repr gives the shortest decimal that round-trips
    return repr(float(x))


def history_to_csv(history: RunHistory) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for rep in history.reports:
        lines.append(",".join(_fmt(v) for v in rep.csv_row()))
    return "\n".join(lines) + "\n"


def history_from_csv(text: str) -> RunHistory:
    """
    Rebuild a history from the CSV schema. The L2 column, run metadata and
    snapshots are not part of the CSV; ``meta["has_l2"]`` is set to False.
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
        raise ValueError(f"CSV header must be {','.join(CSV_COLUMNS)}")
    hist = RunHistory(meta={"has_l2": False, "source": "csv"})
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise ValueError(f"line {lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        try:
            vals = [float(v) for v in row]
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        hist.append(EnergyReport(*vals))
    return hist


def _clean(obj):
    """JSON-safe copy: tuples to lists, complex to [re, im], numpy scalars to float."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)


def history_to_json(history: RunHistory, include_snapshots: bool = True, indent: Optional[int] = None) -> str:
    doc = {
        "columns": list(_REPORT_FIELDS),
        "reports": [[getattr(r, f) for f in _REPORT_FIELDS] for r in history.reports],
        "meta": _clean(history.meta),
    }
    if include_snapshots:
        doc["snapshots"] = [
            {"time": s.time, "E": s.E, "E_C": s.E_C, "E_gamma": s.E_gamma, "integrands": s.integrands}
            for s in history.snapshots
        ]
    return json.dumps(_clean(doc), indent=indent, allow_nan=True)


def history_from_json(text: str) -> RunHistory:
    doc = json.loads(text)
    cols = doc.get("columns", list(_REPORT_FIELDS))
    hist = RunHistory(meta=dict(doc.get("meta", {})))
    if "multiplier" in hist.meta and hist.meta["multiplier"] is not None:
        hist.meta["multiplier"] = tuple(hist.meta["multiplier"])
    for row in doc.get("reports", []):
        rec = dict(zip(cols, row))
        hist.append(EnergyReport(**{f: float(rec.get(f, 0.0)) for f in _REPORT_FIELDS}))
    for s in doc.get("snapshots", []):
        hist.snapshots.append(Snapshot(float(s["time"]), float(s["E"]), float(s["E_C"]),
                                       float(s["E_gamma"]), {k: float(v) for k, v in s["integrands"].items()}))
    return hist


def load_history(text: str, fmt: Optional[str] = None) -> RunHistory:
    """Read a history in CSV or JSON form (guessed from the content if fmt is None)."""
    if fmt is None:
        fmt = "json" if text.lstrip().startswith("{") else "csv"
    if fmt == "json":
        return history_from_json(text)
    if fmt == "csv":
        return history_from_csv(text)
    raise ValueError(f"unknown history format {fmt!r}")

