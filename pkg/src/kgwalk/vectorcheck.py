"""Independent vector-file parser for format verification.

Deliberately separate from embedindex: pure stdlib, no shared code, so it
can act as a second opinion on any producer of the format (including our
own writer and the offline embedder tool).
"""

from __future__ import annotations

import math
import struct


def read_vector_file(path) -> tuple[int, list[tuple[str, list[float]]]]:
    """Parse a vector file byte by byte.

    Returns (dimension, [(id, values), ...]) or raises ValueError naming
    the first malformation found. Also checks that every stored vector is
    unit-normalized to within 1e-5.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 20:
        raise ValueError("truncated header")
    magic, version, dim, count = struct.unpack_from("<4sIIQ", data, 0)
    if magic != b"KGWV":
        raise ValueError(f"bad magic {magic!r}")
    if version != 1:
        raise ValueError(f"unsupported version {version}")
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    pos = 20
    records = []
    seen = set()
    for row in range(count):
        if pos + 4 > len(data):
            raise ValueError(f"truncated at record {row}")
        (id_len,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + id_len + 4 * dim > len(data):
            raise ValueError(f"truncated at record {row}")
        rec_id = data[pos:pos + id_len].decode("utf-8")
        pos += id_len
        values = list(struct.unpack_from(f"<{dim}f", data, pos))
        pos += 4 * dim
        if rec_id in seen:
            raise ValueError(f"duplicate id {rec_id!r}")
        seen.add(rec_id)
        norm = math.sqrt(sum(v * v for v in values))
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite component in record {rec_id!r}")
        if abs(norm - 1.0) > 1e-5:
            raise ValueError(f"record {rec_id!r} not unit-normalized (norm={norm})")
        records.append((rec_id, values))
    if pos != len(data):
        raise ValueError(f"{len(data) - pos} trailing bytes")
    return dim, records
