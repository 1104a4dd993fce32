"""Complex matrix file formats.

Two interchangeable encodings, dispatched by file extension:

* JSON: ``{"rows": r, "cols": c, "data": [[re, im], ...]}`` with ``data``
  holding r*c entries in row-major order.
* CSV: r lines, each with 2c comma-separated reals alternating re, im.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import MeasureFormatError

__all__ = ["matrix_to_json", "matrix_from_json", "matrix_to_csv", "matrix_from_csv",
           "save_matrix", "load_matrix"]


def matrix_to_json(matrix: np.ndarray) -> dict:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2:
        raise MeasureFormatError(f"expected a 2-d array, got ndim={matrix.ndim}")
    return {
        "rows": matrix.shape[0],
        "cols": matrix.shape[1],
        "data": [[float(z.real), float(z.imag)] for z in matrix.ravel()],
    }


def matrix_from_json(payload: dict) -> np.ndarray:
    try:
        rows, cols = int(payload["rows"]), int(payload["cols"])
        data = payload["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MeasureFormatError(f"malformed matrix JSON: {exc}") from exc
    if rows <= 0 or cols <= 0:
        raise MeasureFormatError("matrix dimensions must be positive")
    if len(data) != rows * cols:
        raise MeasureFormatError(
            f"expected {rows * cols} entries, got {len(data)}"
        )
    try:
        flat = np.array(
            [complex(float(re), float(im)) for re, im in data], dtype=complex
        )
    except (TypeError, ValueError) as exc:
        raise MeasureFormatError(f"malformed matrix entry: {exc}") from exc
    return flat.reshape(rows, cols)


def matrix_to_csv(matrix: np.ndarray) -> str:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2:
        raise MeasureFormatError(f"expected a 2-d array, got ndim={matrix.ndim}")
    lines = []
    for row in matrix:
        parts = []
        for z in row:
            parts.append(repr(float(z.real)))
            parts.append(repr(float(z.imag)))
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def matrix_from_csv(text: str) -> np.ndarray:
    rows = []
    width = None
    for lineno, line in enumerate(text.strip().splitlines(), start=1):
        fields = [f for f in line.strip().split(",") if f != ""]
        if not fields:
            continue
        if len(fields) % 2 != 0:
            raise MeasureFormatError(
                f"line {lineno}: odd field count {len(fields)}; "
                "entries must be re,im pairs"
            )
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise MeasureFormatError(f"line {lineno}: {exc}") from exc
        row = [complex(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise MeasureFormatError(
                f"line {lineno}: ragged row width {len(row)} != {width}"
            )
        rows.append(row)
    if not rows:
        raise MeasureFormatError("empty matrix file")
    return np.array(rows, dtype=complex)


def save_matrix(path: str | Path, matrix: np.ndarray) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(matrix_to_json(matrix)))
    elif path.suffix == ".csv":
        path.write_text(matrix_to_csv(matrix))
    else:
        raise MeasureFormatError(f"unsupported matrix extension {path.suffix!r}")


def load_matrix(path: str | Path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".json":
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise MeasureFormatError(f"{path}: invalid JSON: {exc}") from exc
        return matrix_from_json(payload)
    if path.suffix == ".csv":
        return matrix_from_csv(path.read_text())
    raise MeasureFormatError(f"unsupported matrix extension {path.suffix!r}")
