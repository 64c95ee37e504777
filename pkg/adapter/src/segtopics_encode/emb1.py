"""EMB1 writer/reader, implemented against the published byte layout.

Layout: magic "EMB1" | n uint32 LE | d uint32 LE | 4 reserved zero bytes |
n*d float32 LE row-major. One file per recording.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

MAGIC = b"EMB1"


def write_emb1(rows: np.ndarray, sink: BinaryIO) -> int:
    rows = np.asarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-d matrix, got shape {rows.shape}")
    if not np.isfinite(rows).all():
        raise ValueError("non-finite embedding values")
    n, d = rows.shape
    sink.write(MAGIC + struct.pack("<II", n, d) + b"\x00" * 4)
    payload = rows.tobytes(order="C")
    sink.write(payload)
    return 16 + len(payload)


def read_emb1(source: BinaryIO) -> np.ndarray:
    header = source.read(16)
    if len(header) < 16 or header[:4] != MAGIC:
        raise ValueError("not an EMB1 stream")
    n, d = struct.unpack("<II", header[4:12])
    payload = source.read(4 * n * d)
    if len(payload) < 4 * n * d:
        raise ValueError("truncated EMB1 payload")
    return np.frombuffer(payload, dtype="<f4").reshape(n, d).copy()
