"""Binary tensor files.

Layout (all little-endian)::

    offset  size        field
    0       4           magic b"CFLT"
    4       2           version (u16, currently 1)
    6       1           dtype code: 1 = float32, 2 = float64
    7       4           ndim (u32)
    11      4 * ndim    extents (u32 each)
    ...     n * itemsize  payload, row-major

A 2x3 float32 tensor therefore has a 19-byte header followed by 24 bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CFLT"
VERSION = 1
DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODE_OF = {np.dtype("float32"): 1, np.dtype("float64"): 2}
_HEAD = struct.Struct("<4sHBI")


class TensorFormatError(ValueError):
    pass


def dumps(array: np.ndarray) -> bytes:
    array = np.asarray(array)
    code = _CODE_OF.get(array.dtype.newbyteorder("=") if array.dtype.byteorder == ">" else array.dtype)
    if code is None:
        raise TensorFormatError(f"unsupported dtype {array.dtype}; use float32 or float64")
    if any(n >= 2 ** 32 for n in array.shape):
        raise TensorFormatError("extent does not fit in u32")
    head = _HEAD.pack(MAGIC, VERSION, code, array.ndim) + struct.pack(f"<{array.ndim}I", *array.shape)
    return head + np.ascontiguousarray(array, dtype=DTYPE_CODES[code]).tobytes()


def loads(data: bytes) -> np.ndarray:
    if len(data) < _HEAD.size:
        raise TensorFormatError("truncated header")
    magic, version, code, ndim = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise TensorFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise TensorFormatError(f"unsupported version {version}")
    if code not in DTYPE_CODES:
        raise TensorFormatError(f"unknown dtype code {code}")
    start = _HEAD.size + 4 * ndim
    if len(data) < start:
        raise TensorFormatError("truncated extents")
    shape = struct.unpack_from(f"<{ndim}I", data, _HEAD.size)
    dtype = DTYPE_CODES[code]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(data) - start != expected:
        raise TensorFormatError(f"payload is {len(data) - start} bytes, header implies {expected}")
    return np.frombuffer(data, dtype=dtype, offset=start).reshape(shape).astype(dtype.newbyteorder("="))


def save(path, array: np.ndarray) -> None:
    Path(path).write_bytes(dumps(array))


def load(path) -> np.ndarray:
    return loads(Path(path).read_bytes())
