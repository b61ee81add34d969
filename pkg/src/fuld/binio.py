"""Versioned little-endian binary container shared by table and trajectory files.

Layout: 8-byte magic, uint32 format version, uint32 float-metadata count,
uint32 array count, then the metadata floats, then for each array a uint64
length followed by float64 data.  Everything is little-endian.
"""

from __future__ import annotations

import struct
from typing import BinaryIO, Sequence

import numpy as np

__all__ = ["write_block", "read_block", "FormatError"]


class FormatError(ValueError):
    """File does not match the expected magic or version."""


def write_block(
    fh: BinaryIO, magic: bytes, version: int, meta: Sequence[float], arrays: Sequence[np.ndarray]
) -> None:
    if len(magic) != 8:
        raise ValueError("magic must be exactly 8 bytes")
    fh.write(magic)
    fh.write(struct.pack("<III", version, len(meta), len(arrays)))
    fh.write(struct.pack(f"<{len(meta)}d", *meta))
    for arr in arrays:
        data = np.ascontiguousarray(arr, dtype="<f8")
        fh.write(struct.pack("<Q", data.size))
        fh.write(data.tobytes())


def read_block(fh: BinaryIO, magic: bytes, version: int):
    got = fh.read(8)
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}")
    ver, n_meta, n_arrays = struct.unpack("<III", fh.read(12))
    if ver != version:
        raise FormatError(f"unsupported format version {ver}, expected {version}")
    meta = struct.unpack(f"<{n_meta}d", fh.read(8 * n_meta))
    arrays = []
    for _ in range(n_arrays):
        (size,) = struct.unpack("<Q", fh.read(8))
        arrays.append(np.frombuffer(fh.read(8 * size), dtype="<f8").copy())
    return meta, arrays
