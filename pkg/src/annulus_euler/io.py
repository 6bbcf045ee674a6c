"""Atomic, deterministic file output (CSV, JSON, text)."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .geometry import PolarGrid, ScalarField, make_grid


def _current_umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


_UMASK = _current_umask()


def atomic_write_text(path, text: str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def to_builtin(obj):
    """Recursively convert numpy scalars/arrays to plain Python for JSON."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(to_builtin(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, dumps_json(obj))


def format_float(x: float) -> str:
    return repr(float(x))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    return atomic_write_text(path, csv_text(header, rows))


FIELD_HEADER = ("r", "theta", "value")


def field_rows(field: ScalarField):
    g = field.grid
    for i, r in enumerate(g.r):
        for j, th in enumerate(g.theta):
            yield (float(r), float(th), float(field.values[i, j]))


def write_field_csv(path, field: ScalarField) -> Path:
    """ScalarField CSV: ``r,theta,value``, rows ordered by (i_r, j_theta)."""
    return write_csv(path, FIELD_HEADER, field_rows(field))


def read_field_csv(path) -> ScalarField:
    """Read a ``r,theta,value`` CSV back into a ScalarField; the grid is inferred from the coordinates."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(FIELD_HEADER) - set(rows[0]):
        from .exceptions import ValidationError

        raise ValidationError(f"{path}: expected columns {','.join(FIELD_HEADER)}")
    r = np.array([float(x["r"]) for x in rows])
    th = np.array([float(x["theta"]) for x in rows])
    vals = np.array([float(x["value"]) for x in rows])
    n_r = len(np.unique(np.round(r, 12)))
    n_t = len(np.unique(np.round(th, 12)))
    grid: PolarGrid = make_grid(n_r, n_t)
    ir = np.rint((r - grid.r[0]) / grid.dr).astype(int)
    jt = np.rint(th / grid.dtheta).astype(int) % n_t
    out = np.full(grid.shape, np.nan)
    out[ir, jt] = vals
    return ScalarField(grid, out)
