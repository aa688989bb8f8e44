"""Deterministic result files: CSV tables with schema sidecars and JSON summaries."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path

import numpy as np

__all__ = ["format_number", "write_table", "read_table", "write_json", "file_digest", "environment"]


def format_number(x) -> str:
    """Scientific notation with 17 significant digits (round-trips a double)."""
    return f"{float(x):.16e}"


def write_table(directory, name: str, table) -> Path:
    """Write ``name.csv`` and its ``name.schema.json`` descriptor; returns the CSV path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = np.atleast_2d(np.asarray(table.rows, dtype=float))
    if rows.shape[1] != len(table.columns):
        raise ValueError(f"table {name!r} has {rows.shape[1]} columns but {len(table.columns)} names")
    path = directory / f"{name}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in rows:
            w.writerow([format_number(v) for v in row])
    schema = {
        "file": path.name,
        "encoding": "utf-8",
        "delimiter": ",",
        "header": True,
        "number_format": "scientific, 17 significant digits",
        "rows": int(rows.shape[0]),
        "columns": [{"name": c, "type": "float64", "description": table.descriptions.get(c, "")}
                    for c in table.columns],
    }
    write_json(directory / f"{name}.schema.json", schema)
    return path


def read_table(path):
    """Read a CSV written by :func:`write_table`; returns ``(columns, rows)``."""
    with open(path, encoding="utf-8") as fh:
        r = csv.reader(fh)
        columns = next(r)
        rows = np.array([[float(v) for v in row] for row in r])
    return columns, rows.reshape(-1, len(columns))


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")
    return path


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def environment() -> dict:
    import scipy

    from . import __version__

    return {"waveturb": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}
