"""CSV input and JSON/CSV output for the command line tool.

Matrix and data files are plain comma-separated numbers without a header.
Blank lines are skipped. Floats are written in shortest round-trip form.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Union

import numpy as np

from .errors import AsymmetryError, DimensionError, ParseError
from .matrix import DataMatrix, SymmetricMatrix

ASYMMETRY_TOL = 1e-6
PathLike = Union[str, Path]


def _read_rows(path: PathLike) -> list:
    rows = []
    with open(path, newline="") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or all(not f.strip() for f in fields):
                continue
            values = []
            for col, text in enumerate(fields, start=1):
                try:
                    value = float(text)
                except ValueError:
                    raise ParseError(f"{path}: line {lineno}, column {col}: "
                                     f"not a number: {text.strip()!r}") from None
                if not np.isfinite(value):
                    raise ParseError(f"{path}: line {lineno}, column {col}: non-finite value")
                values.append(value)
            if rows and len(values) != len(rows[0][1]):
                raise ParseError(f"{path}: line {lineno}: expected {len(rows[0][1])} fields, "
                                 f"got {len(values)}")
            rows.append((lineno, values))
    if not rows:
        raise ParseError(f"{path}: no data")
    return rows


def parse_matrix_csv(path: PathLike) -> SymmetricMatrix:
    """Read a square symmetric matrix.

    Entries whose mirror differs by more than ``1e-6 * max(1, max|entry|)``
    are rejected; smaller differences are averaged away.
    """
    rows = _read_rows(path)
    a = np.array([values for _, values in rows])
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{path}: matrix is {a.shape[0]}x{a.shape[1]}, expected square")
    gap = np.abs(a - a.T)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(gap) > ASYMMETRY_TOL * scale:
        i, j = np.unravel_index(np.argmax(gap), gap.shape)
        raise AsymmetryError(f"{path}: entry ({i + 1},{j + 1}) = {float(a[i, j])!r} but "
                             f"({j + 1},{i + 1}) = {float(a[j, i])!r} (line {rows[i][0]})")
    return SymmetricMatrix(a)


def parse_data_csv(path: PathLike) -> DataMatrix:
    """Read an ``n x p`` data matrix, one observation per line."""
    rows = _read_rows(path)
    return DataMatrix(np.array([values for _, values in rows]))


def format_matrix_csv(m) -> str:
    a = np.asarray(m.entries if isinstance(m, SymmetricMatrix) else m, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in a:
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def to_jsonable(obj):
    if isinstance(obj, SymmetricMatrix):
        return obj.entries.tolist()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dumps_json(payload: dict) -> str:
    """One top-level field per line, values compact.

    Python's float repr is the shortest string that round-trips, so every
    number re-parses to the identical double.
    """
    fields = [f"  {json.dumps(k)}: {json.dumps(v)}" for k, v in to_jsonable(payload).items()]
    return "{\n" + ",\n".join(fields) + "\n}\n"
