"""Deterministic CSV/JSON serialization for all experiment outputs.

Floats are written with repr-faithful %.17g so identical runs produce
byte-identical files; JSON keys are sorted for the same reason.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .fraclap import FarField, Field, Grid1D

FMT = "%.17g"


def _fmt(v: float) -> str:
    return FMT % float(v)


def write_json(obj, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    os.replace(tmp, path)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_table_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("" if (isinstance(v, float) and np.isnan(v))
                              else _fmt(v) if isinstance(v, (int, float, np.floating))
                              else str(v)
                              for v in row) + "\n")
    os.replace(tmp, path)


def write_field_csv(field: Field, path) -> None:
    """Columns x,value plus a .far.json sidecar with the tail model."""
    path = Path(path)
    write_table_csv(path, ["x", "value"],
                    zip(field.grid.nodes.tolist(), field.values.tolist()))
    far = field.far
    sidecar = {
        "boundary": field.boundary,
        "l_minus": far.l_minus if far else None,
        "l_plus": far.l_plus if far else None,
        "beta": far.beta if far else None,
        "c_minus": far.c_minus if far else None,
        "c_plus": far.c_plus if far else None,
    }
    write_json(sidecar, path.with_name(path.stem + ".far.json"))


def read_field_csv(path) -> Field:
    path = Path(path)
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim != 2 or data.shape[1] != 2:
        raise InvalidInputError(f"{path} is not a two-column x,value table")
    x, vals = data[:, 0], data[:, 1]
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-9, atol=1e-12):
        raise InvalidInputError(f"{path} grid is not uniform")
    grid = Grid1D(float(x[0]), float(x[-1]), len(x))
    side_path = path.with_name(path.stem + ".far.json")
    boundary, far = "decaying", None
    if side_path.exists():
        meta = read_json(side_path)
        boundary = meta.get("boundary", "decaying")
        if meta.get("beta") is not None:
            far = FarField(l_minus=meta["l_minus"], l_plus=meta["l_plus"],
                           beta=meta["beta"], c_minus=meta.get("c_minus", 0.0),
                           c_plus=meta.get("c_plus", 0.0))
    return Field(grid, vals, boundary, far)


def write_trajectory_csv(path, times: np.ndarray, positions: np.ndarray) -> None:
    n = positions.shape[1]
    header = ["t"] + [f"x{i+1}" for i in range(n)]
    rows = ([t] + list(pos) for t, pos in zip(times.tolist(), positions.tolist()))
    write_table_csv(path, header, rows)


def write_cores_csv(path, times: np.ndarray, tracks: np.ndarray) -> None:
    m = tracks.shape[0]
    header = ["t"] + [f"core{i+1}" for i in range(m)]
    rows = ([t] + list(tracks[:, k]) for k, t in enumerate(times.tolist()))
    write_table_csv(path, header, rows)
