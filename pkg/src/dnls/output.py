"""CSV and JSON writers with fixed 17-significant-digit float formatting.

Column layouts:

* wave: ``site,psi``
* portrait: ``psi,Z,cluster``
* trace: ``iter,E_m,delta_inf,residual_inf``
* orbit: ``step,Z,psi``

Identical inputs always produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _write(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)
    return path


def write_wave(path, psi) -> Path:
    return _write(path, ["site", "psi"], ((i, fmt(v)) for i, v in enumerate(np.asarray(psi, dtype=float))))


def write_portrait(path, points, labels) -> Path:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return _write(path, ["psi", "Z", "cluster"], ((fmt(p), fmt(z), int(k)) for (p, z), k in zip(pts, labels)))


def write_trace(path, records) -> Path:
    rows = ((r.m, fmt(r.E_m), fmt(r.delta_inf), fmt(r.residual_inf)) for r in records)
    return _write(path, ["iter", "E_m", "delta_inf", "residual_inf"], rows)


def write_orbit(path, states) -> Path:
    st = np.asarray(states, dtype=float).reshape(-1, 2)
    return _write(path, ["step", "Z", "psi"], ((k, fmt(z), fmt(p)) for k, (z, p) in enumerate(st)))


def read_column(path, name: str) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        return np.array([float(row[name]) if row[name] else math.nan for row in csv.DictReader(fh)])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")
    return path
