"""Binary grid files and JSON reports.

Layout: 16-byte header ``b"SFGD"``, u8 ndim, u8 dtype code, u16 pad, then one
u32 per dimension (padded with zeros up to three), all little-endian, followed
by the row-major float64 payload.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import ParameterError

__all__ = ["write_grid", "read_grid", "write_json", "MAGIC"]

MAGIC = b"SFGD"
DTYPE_CODES = {0: np.float64}
_HEADER = struct.Struct("<4sBBH3I")


def write_grid(path, arr: np.ndarray):
    arr = np.ascontiguousarray(arr, dtype="<f8")
    if not 1 <= arr.ndim <= 3:
        raise ParameterError("grid files hold 1- to 3-dimensional arrays")
    dims = list(arr.shape) + [0] * (3 - arr.ndim)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, arr.ndim, 0, 0, *dims))
        fh.write(arr.tobytes(order="C"))


def read_grid(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ParameterError(f"{path}: truncated header")
        magic, ndim, code, _, *dims = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ParameterError(f"{path}: bad magic {magic!r}")
        if code not in DTYPE_CODES or not 1 <= ndim <= 3:
            raise ParameterError(f"{path}: unsupported dtype code {code} or ndim {ndim}")
        shape = tuple(dims[:ndim])
        payload = fh.read()
    n = int(np.prod(shape))
    if len(payload) != 8 * n:
        raise ParameterError(f"{path}: payload has {len(payload)} bytes, expected {8 * n}")
    return np.frombuffer(payload, dtype="<f8").reshape(shape).astype(np.float64)


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_default)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
