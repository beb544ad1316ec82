"""Text artifacts: a JSON header line followed by CSV rows.

Every artifact starts with one line holding a JSON object (sorted keys) with
at least ``schema_version``, ``kind`` and the full run ``config``; the rest
of the file is CSV with a header row.  Floats are written with ``repr`` so
files round-trip exactly and identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .spectral import Domain, SpectralFunction, build_basis

__all__ = [
    "SCHEMA_VERSION",
    "load_schema",
    "format_value",
    "dumps_artifact",
    "write_artifact",
    "read_artifact",
    "write_snapshot",
    "read_snapshot",
]

SCHEMA_VERSION = 1


def load_schema() -> dict:
    """JSON schema of run configurations (shipped with the package)."""
    text = resources.files("fraclap").joinpath("config.schema.json").read_text()
    return json.loads(text)


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    if x is None:
        return ""
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_artifact(kind: str, config: dict, columns, rows, extra: dict | None = None) -> str:
    header = {"schema_version": SCHEMA_VERSION, "kind": kind, "config": config}
    if extra:
        header.update(extra)
    buf = io.StringIO()
    buf.write(json.dumps(_jsonable(header), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            row = [row.get(c) for c in columns]
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_artifact(path, kind: str, config: dict, columns, rows, extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_artifact(kind, config, columns, rows, extra))
    return path


def _parse(cell: str):
    if cell == "":
        return None
    if cell in ("true", "false"):
        return cell == "true"
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell


def read_artifact(path):
    """Return ``(header, rows)`` with rows as dicts of parsed values."""
    with open(path, newline="") as fh:
        header = json.loads(fh.readline())
        reader = csv.DictReader(fh)
        rows = [{k: _parse(v) for k, v in r.items()} for r in reader]
    return header, rows


def write_snapshot(path, u: SpectralFunction, config: dict, meta: dict | None = None) -> Path:
    """Solution snapshot: header with the basis description, then ``index, k_1.., coeff`` rows."""
    basis = u.basis
    info = {
        "lengths": list(basis.domain.lengths),
        "grid": list(basis.domain.grid),
        "modes": list(basis.modes),
        "oversample": basis.oversample,
    }
    extra = {"basis": info}
    if meta:
        extra["solution"] = meta
    cols = ["index"] + [f"k{i + 1}" for i in range(basis.dim)] + ["coeff"]
    rows = ([j] + [int(k) for k in basis.wavenumbers[j]] + [float(u.coeffs[j])] for j in range(basis.size))
    return write_artifact(path, "solution", config, cols, rows, extra)


def read_snapshot(path) -> tuple:
    """Rebuild ``(SpectralFunction, header)`` from a snapshot file."""
    header, rows = read_artifact(path)
    info = header["basis"]
    basis = build_basis(Domain(tuple(info["lengths"]), tuple(info["grid"])), tuple(info["modes"]),
                        info["oversample"])
    coeffs = np.zeros(basis.size)
    index = {tuple(k): j for j, k in enumerate(basis.wavenumbers)}
    for r in rows:
        k = tuple(r[f"k{i + 1}"] for i in range(basis.dim))
        coeffs[index[k]] = r["coeff"]
    return SpectralFunction(basis, coeffs), header
