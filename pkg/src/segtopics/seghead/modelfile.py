"""SGH1 model file: JSON header + raw float32 little-endian blob.

Layout: magic "SGH1" | uint32 LE header length | UTF-8 JSON header | blob.
The header holds the config and a tensor manifest (name, shape, byte offset
into the blob), manifest sorted by name. Values are stored as float32 and
loaded back as float64 for computation.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .model import HeadConfig, HeadModel, param_spec

MAGIC = b"SGH1"


class ModelFormatError(ValueError):
    """Raised on malformed SGH1 streams."""


def save_model(model: HeadModel, sink: BinaryIO) -> int:
    """Write the SGH1 layout; returns the byte count."""
    names = sorted(model.params)
    tensors = []
    offset = 0
    blobs = []
    for name in names:
        arr = np.asarray(model.params[name], dtype="<f4")
        tensors.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes(order="C"))
        offset += len(blobs[-1])
    header = json.dumps(
        {"config": dataclasses.asdict(model.config), "tensors": tensors},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    sink.write(MAGIC)
    sink.write(struct.pack("<I", len(header)))
    sink.write(header)
    for blob in blobs:
        sink.write(blob)
    return len(MAGIC) + 4 + len(header) + offset


def load_model(source: BinaryIO) -> HeadModel:
    head = source.read(8)
    if len(head) < 8:
        raise ModelFormatError("truncated header")
    if head[:4] != MAGIC:
        raise ModelFormatError(f"bad magic {head[:4]!r}")
    (header_len,) = struct.unpack("<I", head[4:8])
    header_bytes = source.read(header_len)
    if len(header_bytes) < header_len:
        raise ModelFormatError("truncated JSON header")
    try:
        header = json.loads(header_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"unreadable header: {e}") from e
    try:
        cfg = HeadConfig(**header["config"])
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"bad config: {e}") from e

    spec = param_spec(cfg)
    blob = source.read()
    params: dict[str, np.ndarray] = {}
    for entry in header.get("tensors", []):
        name = entry["name"]
        shape = tuple(entry["shape"])
        if name not in spec:
            raise ModelFormatError(f"unknown tensor {name!r}")
        if shape != spec[name]:
            raise ModelFormatError(
                f"tensor {name!r}: shape {shape} != expected {spec[name]}"
            )
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        start = entry["offset"]
        end = start + 4 * count
        if end > len(blob):
            raise ModelFormatError(f"truncated blob reading {name!r}")
        arr = np.frombuffer(blob[start:end], dtype="<f4").reshape(shape)
        params[name] = arr.astype(np.float64)
    missing = set(spec) - set(params)
    if missing:
        raise ModelFormatError(f"missing tensors: {sorted(missing)}")
    return HeadModel(config=cfg, params=params)


def save_model_file(model: HeadModel, path: str | Path) -> int:
    with open(path, "wb") as f:
        return save_model(model, f)


def load_model_file(path: str | Path) -> HeadModel:
    with open(path, "rb") as f:
        return load_model(f)
