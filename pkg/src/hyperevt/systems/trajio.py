"""Binary trajectory persistence.

Layout: a 32-byte header (8-byte magic, uint32 version, uint64 row count
n, uint32 state dimension m, 8 reserved bytes) followed by n*m
little-endian float64 values in C order.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import DataError

__all__ = ["save_trajectory", "load_trajectory", "MAGIC", "VERSION"]

MAGIC = b"HEVTTRJ1"
VERSION = 1
_HEADER = struct.Struct("<8sIQI8x")
assert _HEADER.size == 32


def save_trajectory(path, states) -> None:
    """Write a (n, m) or (n,) float array; one-dimensional input is stored
    with m = 1."""
    arr = np.asarray(states, dtype="<f8")
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DataError("trajectory must be a 1- or 2-dimensional array")
    n, m = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, m))
        fh.write(np.ascontiguousarray(arr).tobytes())


def load_trajectory(path) -> np.ndarray:
    """Read a trajectory written by :func:`save_trajectory`."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DataError(f"{path}: truncated header")
        magic, version, n, m = _HEADER.unpack(head)
        if magic != MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise DataError(f"{path}: unsupported version {version}")
        payload = fh.read(8 * n * m)
    if len(payload) != 8 * n * m:
        raise DataError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype="<f8").reshape(n, m).copy()
