"""KGWV vector file writer.

Format (all integers little-endian): magic "KGWV", version u32 = 1,
dimension u32, record count u64, then per record an id byte-length u32,
the UTF-8 id bytes, and dimension float32 values. The writer appends
records one batch at a time and patches the header count when closed, so
a crash leaves a file whose header disagrees with its body and readers
reject it as truncated.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"KGWV"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_COUNT_OFFSET = 12


class VectorWriter:
    """Single-writer append of (id, vector) records."""

    def __init__(self, path, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim
        self.count = 0
        self._seen: set[str] = set()
        self._fh = open(path, "wb")
        self._fh.write(_HEADER.pack(MAGIC, VERSION, dim, 0))

    def write(self, vec_id: str, vector) -> None:
        if vec_id in self._seen:
            self._fh.close()
            raise ValueError(f"duplicate id {vec_id!r}")
        vec = np.asarray(vector, dtype=np.float32).reshape(-1)
        if vec.shape[0] != self.dim:
            self._fh.close()
            raise ValueError(
                f"dimension drift: expected {self.dim}, got {vec.shape[0]} "
                f"for id {vec_id!r}"
            )
        if not np.isfinite(vec).all():
            self._fh.close()
            raise ValueError(f"non-finite vector for id {vec_id!r}")
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            self._fh.close()
            raise ValueError(f"zero vector for id {vec_id!r}")
        vec = vec / norm
        encoded = vec_id.encode("utf-8")
        self._fh.write(struct.pack("<I", len(encoded)))
        self._fh.write(encoded)
        self._fh.write(vec.astype("<f4").tobytes())
        self._seen.add(vec_id)
        self.count += 1

    def close(self) -> int:
        """Patch the record count into the header; returns the count."""
        self._fh.seek(_COUNT_OFFSET)
        self._fh.write(struct.pack("<Q", self.count))
        self._fh.close()
        return self.count

    def __enter__(self):
        return self

    def __exit__(self, exc_type, *rest):
        if exc_type is None:
            self.close()
        else:
            self._fh.close()
