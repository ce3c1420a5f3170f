"""Byte-stable CSV traces and JSON summaries."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

TRACE_VERSION = "edgesim-trace-v1"
REJO_TRACE_VERSION = "edgesim-rejo-trace-v1"
_PER_STATION = ("a", "b", "mu", "p_op", "p_tx", "p_com", "c_lo", "c_rem")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def trace_columns(num_stations: int, num_regions: int) -> list[str]:
    cols = ["t", "q", "P_total", "c_total", "flagged"]
    for name in _PER_STATION:
        cols.extend(f"{name}_{n}" for n in range(num_stations))
    cols.extend(f"lam_{m}" for m in range(num_regions))
    cols.extend(f"h_{n}" for n in range(num_stations))
    return cols


def _row_values(row) -> list:
    d, m = row.decision, row.metrics
    values = [row.t, row.q, m.power_total, m.cost_total, row.flagged]
    for arr in (d.activation, d.local_fraction, m.arrivals, m.p_op, m.p_tx, m.p_com, m.c_lo, m.c_rem):
        values.extend(int(x) if arr is d.activation else float(x) for x in arr)
    values.extend(float(x) for x in row.slot.traffic)
    values.extend(float(x) for x in row.slot.congestion)
    return values


def render_trace(rows) -> str:
    rows = list(rows)
    if not rows:
        raise ValueError("cannot write an empty trace")
    first = rows[0]
    buf = io.StringIO()
    buf.write(f"# {TRACE_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_columns(len(first.decision.activation), len(first.slot.traffic)))
    for row in rows:
        writer.writerow([fmt(v) for v in _row_values(row)])
    return buf.getvalue()


def write_trace(rows, path: str | Path) -> None:
    text = render_trace(rows)  # raises before touching the filesystem
    Path(path).write_text(text)


def read_trace(path: str | Path) -> tuple[list[str], list[dict[str, float | None]]]:
    """Parse a trace file into its header and rows of floats (empty cells become None)."""
    with open(path, newline="") as fh:
        version = fh.readline().strip()
        if version != f"# {TRACE_VERSION}":
            raise ValueError(f"unexpected trace version line {version!r}")
        reader = csv.DictReader(fh)
        rows = [{k: (float(v) if v != "" else None) for k, v in r.items()} for r in reader]
        return list(reader.fieldnames or []), rows


def write_summary(summary: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def write_rejo_trace(trace, path: str | Path) -> None:
    buf = io.StringIO()
    buf.write(f"# {REJO_TRACE_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "bs", "proposed_mode", "objective", "k", "accepted", "current_objective"])
    for rec, cur in zip(trace.rows(), trace.current_objectives):
        it, bs, mode, obj, k, acc = rec
        writer.writerow([it, bs, mode, "" if np.isnan(obj) else fmt(obj), fmt(k), int(acc), fmt(cur)])
    Path(path).write_text(buf.getvalue())
