"""Deterministic result serialization.

CSV files are written with 17-significant-digit floats (full float64
round-trip precision), comma separators and ``\n`` line endings, so
identical results serialize to identical bytes on every platform.  JSON
files use sorted keys and two-space indentation; NaN values are emitted as
``null`` to stay inside strict JSON.
"""

from __future__ import annotations

import json

import numpy as np

from .contour import BoundaryCurve
from .ensemble import GridResult
from .flow import TrajectoryRecord


def format_float(x: float) -> str:
    """Format a float with 17 significant digits (lossless for float64)."""
    return f"{float(x):.17g}"


def write_csv(path, header: str, rows) -> None:
    """Write pre-formatted rows under a single header line."""
    lines = [header]
    lines.extend(",".join(row) for row in rows)
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_matrix_csv(path, matrix) -> None:
    """Write a matrix as bare CSV rows of 17-digit floats."""
    arr = np.asarray(matrix, dtype=float)
    rows = [",".join(format_float(x) for x in row) for row in np.atleast_2d(arr)]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def to_builtin(obj):
    """Recursively convert numpy scalars/arrays to plain Python objects.

    NaN and infinities become ``None`` so the result is strict-JSON safe.
    """
    if isinstance(obj, dict):
        return {key: to_builtin(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [to_builtin(value) for value in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if np.isfinite(value) else None
    return obj


def dump_json(path, payload) -> None:
    """Write a payload as deterministic, strict JSON."""
    text = json.dumps(to_builtin(payload), indent=2, sort_keys=True, allow_nan=False)
    with open(path, "w", newline="\n") as fh:
        fh.write(text + "\n")


def record_to_dict(record: TrajectoryRecord) -> dict:
    """JSON-safe dictionary for one trajectory record."""
    return {
        "n_plus": [int(x) for x in record.n_plus],
        "n_minus": [int(x) for x in record.n_minus],
        "n_zero": [int(x) for x in record.n_zero],
        "q": [float(x) for x in record.q],
        "s_opnorm": [float(x) for x in record.s_opnorm],
        "separation_holds": [bool(x) for x in record.separation_holds],
        "first_passage": None if record.first_passage is None else int(record.first_passage),
        "censored": bool(record.censored),
        "collapsed": bool(record.collapsed),
    }


def write_records_jsonl(path, records) -> None:
    """Write trajectory records as JSON lines, one record per line."""
    with open(path, "w", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), sort_keys=True))
            fh.write("\n")


def record_steps_rows(record: TrajectoryRecord):
    """Per-step CSV rows for a trajectory record."""
    header = "step,n_plus,n_minus,n_zero,q,s_opnorm,separation_holds"
    rows = [
        [
            str(k),
            str(int(record.n_plus[k])),
            str(int(record.n_minus[k])),
            str(int(record.n_zero[k])),
            format_float(record.q[k]),
            format_float(record.s_opnorm[k]),
            str(int(record.separation_holds[k])),
        ]
        for k in range(len(record.q))
    ]
    return header, rows


def grid_csv_header(n_sectors: int) -> str:
    sector_cols = ",".join(f"P{m}" for m in range(n_sectors))
    return f"a0,zeta,{sector_cols},mean_fpt,censored_fraction"


def grid_rows(result: GridResult):
    """Row-major (a0 outer, zeta inner) CSV rows for a grid result."""
    header = grid_csv_header(result.n_sectors)
    rows = []
    for i, a0 in enumerate(result.a0_values):
        for j, zeta in enumerate(result.zeta_values):
            row = [format_float(a0), format_float(zeta)]
            row.extend(format_float(p) for p in result.p_sector[i, j])
            row.append(format_float(result.mean_fpt[i, j]))
            row.append(format_float(result.censored_fraction[i, j]))
            rows.append(row)
    return header, rows


def grid_to_dict(result: GridResult) -> dict:
    return {
        "a0_values": result.a0_values,
        "zeta_values": result.zeta_values,
        "p_sector": result.p_sector,
        "mean_fpt": result.mean_fpt,
        "censored_fraction": result.censored_fraction,
        "n_valid": result.n_valid,
        "n_traj": result.n_traj,
        "master_seed": result.master_seed,
    }


def boundary_to_dict(curve: BoundaryCurve) -> dict:
    return {
        "level": curve.level,
        "skipped_cells": curve.skipped_cells,
        "polylines": [poly.tolist() for poly in curve.polylines],
    }
