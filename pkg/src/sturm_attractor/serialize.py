"""Report writers: CSV tables, JSON documents and DOT graphs.

CSV floats are written with 17 significant digits. JSON floats use Python's
shortest round-trip repr, which reads back to the identical double.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .connectome import validate_dot


def fmt_float(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, doc) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(doc), indent=2, allow_nan=False) + "\n")
    return path


def write_dot(path, text: str) -> Path:
    validate_dot(text)
    path = Path(path)
    path.write_text(text)
    return path


# -- table shapes ---------------------------------------------------------------------

EQUILIBRIA_HEADER = ["id", "a", "b", "theta_pi", "transversality", "morse"]
CURVE_HEADER = ["a", "u_pi", "p_pi", "theta_pi"]


def equilibria_rows(eqs):
    return [(e.id, e.a, e.b, e.theta_pi, e.transversality, e.morse) for e in eqs]


def equilibria_doc(eqs) -> dict:
    return {"equilibria": [dict(zip(EQUILIBRIA_HEADER, r)) for r in equilibria_rows(eqs)]}


def write_equilibria(out_dir, eqs, curve, formats) -> list:
    out_dir = Path(out_dir)
    written = []
    if "csv" in formats:
        written.append(write_csv(out_dir / "equilibria.csv", EQUILIBRIA_HEADER, equilibria_rows(eqs)))
        written.append(write_csv(out_dir / "curve.csv", CURVE_HEADER, curve.to_rows()))
    if "json" in formats:
        written.append(write_json(out_dir / "equilibria.json", equilibria_doc(eqs)))
    return written


def write_trajectory(path, traj) -> Path:
    header = ["t"] + [f"u{i}" for i in range(traj.x.size)]
    return write_csv(path, header, ([t, *u] for t, u in traj.rows()))
