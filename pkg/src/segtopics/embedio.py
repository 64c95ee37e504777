"""EMB1: bit-exact binary container for block-embedding sequences.

Layout (little-endian, normative):

    bytes 0..3    magic "EMB1"
    bytes 4..7    n, uint32
    bytes 8..11   d, uint32
    bytes 12..15  reserved, written as zeros
    bytes 16..    payload, n*d IEEE-754 float32, row-major

One file per recording, named <recording_id>.emb.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

MAGIC = b"EMB1"
HEADER_BYTES = 16


class EmbeddingFormatError(ValueError):
    """Raised on malformed EMB1 streams or invalid embedding matrices."""


@dataclass(frozen=True)
class BlockEmbeddingSequence:
    """n x d matrix of float32 block embeddings, one row per block."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise EmbeddingFormatError(f"expected 2-d matrix, got {arr.ndim}-d")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise EmbeddingFormatError(f"zero dimensions: shape {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def _check_finite(data: np.ndarray) -> None:
    bad = ~np.isfinite(data)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise EmbeddingFormatError(f"non-finite value at ({row}, {col})")


def write_embeddings(seq: BlockEmbeddingSequence, sink: BinaryIO) -> int:
    """Write the EMB1 layout; returns the byte count (16 + 4*n*d)."""
    _check_finite(seq.data)
    header = MAGIC + struct.pack("<II", seq.n, seq.d) + b"\x00" * 4
    payload = np.ascontiguousarray(seq.data, dtype="<f4").tobytes()
    sink.write(header)
    sink.write(payload)
    return HEADER_BYTES + len(payload)


def read_embeddings(source: BinaryIO) -> BlockEmbeddingSequence:
    """Exact inverse of write_embeddings."""
    header = source.read(HEADER_BYTES)
    if len(header) < HEADER_BYTES:
        raise EmbeddingFormatError(
            f"truncated header: expected {HEADER_BYTES} bytes, got {len(header)}"
        )
    magic = header[:4]
    if magic != MAGIC:
        if magic[:3] == MAGIC[:3]:
            raise EmbeddingFormatError(f"unsupported version {magic!r}")
        raise EmbeddingFormatError(f"bad magic {magic!r}")
    n, d = struct.unpack("<II", header[4:12])
    if n == 0 or d == 0:
        raise EmbeddingFormatError(f"zero dimensions: n={n}, d={d}")
    expected = 4 * n * d
    payload = source.read(expected)
    if len(payload) < expected:
        raise EmbeddingFormatError(
            f"truncated payload: expected {expected} bytes, got {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n, d).copy()
    _check_finite(data)
    return BlockEmbeddingSequence(data=data)


def write_embeddings_file(seq: BlockEmbeddingSequence, path: str | Path) -> int:
    with open(path, "wb") as f:
        return write_embeddings(seq, f)


def read_embeddings_file(path: str | Path) -> BlockEmbeddingSequence:
    with open(path, "rb") as f:
        return read_embeddings(f)
