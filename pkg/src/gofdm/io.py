"""Binary array files and JSON sidecars.

Array layout: a 16-byte header of two little-endian uint64 dimensions
``(rows, cols)``, followed by ``rows*cols`` complex values in row-major order,
each stored as two little-endian float64 (real, imaginary).
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<QQ")
_CPLX = np.dtype("<c16")


def write_array(path, arr) -> None:
    arr = np.asarray(arr)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"only 1-D and 2-D arrays can be written, got shape {arr.shape}")
    rows, cols = arr.shape
    data = np.ascontiguousarray(arr, dtype=_CPLX)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(rows, cols))
        fh.write(data.tobytes(order="C"))


def read_array(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    rows, cols = _HEADER.unpack_from(raw)
    body = raw[_HEADER.size:]
    if len(body) != rows * cols * _CPLX.itemsize:
        raise ValueError(f"{path}: expected {rows}x{cols} complex values, found {len(body)} bytes")
    return np.frombuffer(body, dtype=_CPLX).astype(np.complex128).reshape(rows, cols)


def read_real_vector(path) -> np.ndarray:
    arr = read_array(path)
    if np.any(arr.imag != 0):
        raise ValueError(f"{path}: expected a real vector")
    return arr.real.reshape(-1).copy()


def db_round(x, places: int = 4):
    """Round for serialization; ``None`` and non-finite values pass through as ``None``."""
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return round(x, places)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")
