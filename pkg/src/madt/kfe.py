"""KFE binary embedding file format.

Layout (little-endian throughout):

    magic   4 bytes  b"KFE1"
    dim     u32
    count   u64
    then `count` records of:
        key_len  u16
        key      key_len bytes, UTF-8
        vector   dim * f32

Vectors round-trip bit-exactly as float32. Keys must be unique per file.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import FormatError

MAGIC = b"KFE1"
_HEADER = struct.Struct("<4sIQ")
_KEYLEN = struct.Struct("<H")


def write_kfe(path: str | Path, entries: Iterable[tuple[str, np.ndarray]]) -> int:
    """Write (key, vector) pairs to `path`; returns the record count.

    All vectors must share one dimension and all keys must be unique,
    otherwise FormatError is raised and nothing is written.
    """
    items: list[tuple[bytes, np.ndarray]] = []
    dim: int | None = None
    seen: set[str] = set()
    for key, vec in entries:
        if key in seen:
            raise FormatError(f"duplicate key: {key!r}")
        seen.add(key)
        arr = np.asarray(vec, dtype="<f4").reshape(-1)
        if dim is None:
            dim = arr.shape[0]
        elif arr.shape[0] != dim:
            raise FormatError(f"mixed dimensions: {arr.shape[0]} != {dim} at key {key!r}")
        kb = key.encode("utf-8")
        if len(kb) > 0xFFFF:
            raise FormatError(f"key too long: {key[:32]!r}...")
        items.append((kb, arr))
    if dim is None or dim == 0:
        raise FormatError("cannot write an empty or zero-dimensional KFE file")

    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, dim, len(items)))
        for kb, arr in items:
            f.write(_KEYLEN.pack(len(kb)))
            f.write(kb)
            f.write(arr.tobytes())
    return len(items)


def read_kfe(path: str | Path) -> tuple[int, dict[str, np.ndarray]]:
    """Read a KFE file; returns (dim, key -> float32 vector) preserving order."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"truncated header in {path}")
    magic, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r} in {path}")
    if dim == 0:
        raise FormatError(f"zero dimension in {path}")

    vectors: dict[str, np.ndarray] = {}
    offset = _HEADER.size
    vec_bytes = 4 * dim
    for _ in range(count):
        if offset + _KEYLEN.size > len(data):
            raise FormatError(f"truncated record in {path}")
        (key_len,) = _KEYLEN.unpack_from(data, offset)
        offset += _KEYLEN.size
        end = offset + key_len + vec_bytes
        if end > len(data):
            raise FormatError(f"truncated record in {path}")
        try:
            key = data[offset : offset + key_len].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"non-UTF-8 key in {path}") from exc
        if key in vectors:
            raise FormatError(f"duplicate key: {key!r}")
        offset += key_len
        vectors[key] = np.frombuffer(data[offset : offset + vec_bytes], dtype="<f4").copy()
        offset += vec_bytes
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes in {path}")
    return dim, vectors
