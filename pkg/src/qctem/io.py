"""Atomic file output: text, JSON, CSV grids and 16-bit PGM images."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import QctemError


class OutputError(QctemError, OSError):
    pass


def write_atomic(path: str | Path, data: bytes | str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    payload = data.encode() if isinstance(data, str) else data
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def _finite_or_null(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite_or_null(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_null(v) for v in obj]
    return obj


def write_json(path: str | Path, obj) -> Path:
    """Sorted, indented JSON; NaN and infinities become null."""
    return write_atomic(path, json.dumps(_finite_or_null(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def array_csv(array: np.ndarray) -> str:
    """Rows of a 2D array, 17 significant digits so values round-trip."""
    array = np.atleast_2d(np.asarray(array, dtype=float))
    return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in array)


def pgm16_bytes(image: np.ndarray) -> tuple[bytes, dict]:
    """Binary P5 PGM, maxval 65535, big-endian, min-max normalized.

    Returns the file bytes and the scaling metadata needed to recover the
    original values (``value = min + pixel / 65535 * (max - min)``). A flat
    image is written as all zeros.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise OutputError("PGM output needs a 2D image")
    if not np.all(np.isfinite(image)):
        raise OutputError("image contains non-finite values")
    lo, hi = float(image.min()), float(image.max())
    if hi > lo:
        scaled = np.rint((image - lo) / (hi - lo) * 65535.0)
    else:
        scaled = np.zeros_like(image)
    # rows of the PGM are the x index i, columns the y index j
    pixels = scaled.astype(">u2").tobytes()
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n65535\n".encode()
    meta = {"min": lo, "max": hi, "height": image.shape[0], "width": image.shape[1], "maxval": 65535, "layout": "rows=i (x), cols=j (y)"}
    return header + pixels, meta


def write_pgm16(path: str | Path, image: np.ndarray) -> Path:
    """Write ``path`` plus a ``.json`` sidecar holding the normalization."""
    path = Path(path)
    data, meta = pgm16_bytes(image)
    write_atomic(path, data)
    meta["file"] = path.name
    write_json(path.with_suffix(".json"), meta)
    return path


def read_pgm16(path: str | Path) -> np.ndarray:
    """Raw 16-bit pixel values of a file written by :func:`write_pgm16`."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise OutputError(f"{path}: not a binary PGM")
    width, height = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=">u2", count=width * height).reshape(height, width).astype(np.uint16)
