"""Field snapshots: raw little-endian interleaved complex128 plus a JSON sidecar.

``name.fld`` holds ``(re, im)`` float64 pairs in row-major axis order;
``name.fld.json`` holds ``{n_dims, points, half_lengths, time, omega, p}``
and any extra metadata passed by the caller.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import Field, build_grid

DTYPE = np.dtype("<c16")


def _paths(path) -> tuple[Path, Path]:
    path = Path(path)
    if path.suffix != ".fld":
        path = path.with_name(path.name + ".fld")
    return path, path.with_name(path.name + ".json")


def save_field(path, f: Field, time: float = 0.0, omega: float | None = None,
               p: float | None = None, extra: dict | None = None) -> Path:
    data_path, meta_path = _paths(path)
    data_path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(f.values, dtype=DTYPE).tofile(data_path)
    meta = {"n_dims": f.grid.n_dims, "points": list(f.grid.points),
            "half_lengths": list(f.grid.half_lengths), "time": time,
            "omega": omega, "p": p}
    if extra:
        meta.update(extra)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return data_path


def load_field(path) -> tuple[Field, dict]:
    data_path, meta_path = _paths(path)
    meta = json.loads(meta_path.read_text())
    grid = build_grid(meta["n_dims"], meta["points"], meta["half_lengths"])
    values = np.fromfile(data_path, dtype=DTYPE)
    if values.size != int(np.prod(grid.points)):
        raise ValueError(f"{data_path} holds {values.size} values, expected {np.prod(grid.points)}")
    return Field(grid, values.reshape(grid.points)), meta
