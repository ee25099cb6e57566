"""Exact top-k cosine retrieval over id -> vector maps.

Vectors are re-normalized on load so the dot product is the cosine
unconditionally. Retrieval is an exact linear scan (no approximation);
scores are accumulated in float64 over fixed-size chunks so the RAM and
memory-mapped modes produce bit-identical results. Ties break by
ascending id.

Vector file format (all integers little-endian):
    magic "KGWV" | version u32 = 1 | dimension u32 | record count u64
    per record: id byte-length u32 | id bytes (UTF-8) | dim x f32
"""

from __future__ import annotations

import mmap
import struct

import numpy as np

from .errors import ConfigError, VectorFileError

MAGIC = b"KGWV"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_IDLEN = struct.Struct("<I")

# chunk size for the scan; fixed so ram/mmap scoring is bit-identical
_SCAN_CHUNK = 8192


def _as_vector(values, dim: int | None = None) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float32).reshape(-1)
    if dim is not None and vec.shape[0] != dim:
        raise ConfigError(f"dimension mismatch: expected {dim}, got {vec.shape[0]}")
    return vec


def cosine(a, b) -> float:
    """Cosine similarity in [-1, 1]; raises on dimension mismatch or a
    zero-norm input."""
    va = _as_vector(a)
    vb = _as_vector(b, dim=va.shape[0])
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine of a zero vector is undefined")
    value = float(np.dot(va.astype(np.float64), vb.astype(np.float64)) / (na * nb))
    return max(-1.0, min(1.0, value))


def _normalize_rows(block: np.ndarray, what: str) -> np.ndarray:
    if not np.isfinite(block).all():
        raise VectorFileError(f"non-finite component in {what}")
    norms = np.linalg.norm(block, axis=1)
    if (norms == 0).any():
        raise VectorFileError(f"non-normalizable (zero) vector in {what}")
    return block / norms[:, None]


class _BaseIndex:
    """Shared query machinery; subclasses provide _iter_chunks()."""

    ids: list[str]
    dim: int
    kind: str

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, vec_id: str) -> bool:
        return vec_id in self._id_to_row

    def _finish_init(self):
        self._id_to_row = {vec_id: row for row, vec_id in enumerate(self.ids)}
        if len(self._id_to_row) != len(self.ids):
            raise VectorFileError("duplicate id in index")
        # lexicographic rank per row, for deterministic tie-breaking
        order = sorted(range(len(self.ids)), key=lambda r: self.ids[r])
        self._id_rank = np.empty(len(self.ids), dtype=np.int64)
        for rank, row in enumerate(order):
            self._id_rank[row] = rank

    def get(self, vec_id: str) -> np.ndarray:
        row = self._id_to_row.get(vec_id)
        if row is None:
            raise KeyError(f"id {vec_id!r} not in index")
        return self._row(row)

    def _prepare_query(self, query) -> np.ndarray:
        vec = _as_vector(query, dim=self.dim)
        try:
            return _normalize_rows(vec.reshape(1, -1), "query")[0]
        except VectorFileError as exc:
            raise ConfigError(str(exc)) from exc

    def _scores(self, query: np.ndarray) -> np.ndarray:
        q64 = query.astype(np.float64)
        scores = np.empty(len(self.ids), dtype=np.float64)
        for start, block in self._iter_chunks():
            scores[start:start + block.shape[0]] = block.astype(np.float64) @ q64
        return scores

    def top_k(self, query, k: int) -> list[tuple[str, float]]:
        """Exact top-k by cosine, descending, ties by ascending id."""
        if k < 1:
            raise ConfigError(f"top_k requires k >= 1, got {k}")
        if not self.ids:
            return []
        scores = self._scores(self._prepare_query(query))
        order = np.lexsort((self._id_rank, -scores))
        take = order[: min(k, len(self.ids))]
        return [(self.ids[row], float(scores[row])) for row in take]

    def most_similar(self, query) -> tuple[str, float]:
        if not self.ids:
            raise ConfigError("most_similar on an empty index")
        return self.top_k(query, 1)[0]

    # subclass hooks
    def _row(self, row: int) -> np.ndarray:
        raise NotImplementedError

    def _iter_chunks(self):
        raise NotImplementedError


class EmbeddingIndex(_BaseIndex):
    """Fully in-memory index."""

    def __init__(self, ids: list[str], matrix: np.ndarray, kind: str = ""):
        matrix = np.asarray(matrix, dtype=np.float32)
        if matrix.ndim != 2:
            raise ConfigError("matrix must be 2-d (n, dim)")
        if matrix.shape[0] != len(ids):
            raise ConfigError("id count and row count disagree")
        if matrix.shape[1] < 1:
            raise VectorFileError("dimension must be >= 1")
        self.ids = list(ids)
        self.dim = int(matrix.shape[1])
        self.kind = kind
        self._matrix = _normalize_rows(matrix, "index")
        self._finish_init()

    @classmethod
    def from_entries(cls, entries, kind: str = "") -> "EmbeddingIndex":
        """Build from (id, vector) pairs."""
        entries = list(entries)
        if not entries:
            raise ConfigError("cannot build an index from zero entries")
        ids = [vec_id for vec_id, _ in entries]
        matrix = np.stack([_as_vector(vec) for _, vec in entries])
        return cls(ids, matrix, kind=kind)

    def _row(self, row: int) -> np.ndarray:
        return self._matrix[row]

    def _iter_chunks(self):
        for start in range(0, self._matrix.shape[0], _SCAN_CHUNK):
            yield start, self._matrix[start:start + _SCAN_CHUNK]


class MmapEmbeddingIndex(_BaseIndex):
    """Memory-mapped scan over a vector file; ids parsed up front, vectors
    read per chunk at query time. Results match EmbeddingIndex exactly."""

    def __init__(self, path, kind: str = ""):
        self._fh = open(path, "rb")
        self._mm = mmap.mmap(self._fh.fileno(), 0, access=mmap.ACCESS_READ)
        self.kind = kind
        try:
            self.dim, self.ids, self._offsets = _parse_layout(self._mm, str(path))
        except Exception:
            self.close()
            raise
        self._finish_init()

    def close(self):
        if getattr(self, "_mm", None) is not None:
            self._mm.close()
            self._mm = None
        if getattr(self, "_fh", None) is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _read_block(self, rows: range) -> np.ndarray:
        block = np.empty((len(rows), self.dim), dtype=np.float32)
        for i, row in enumerate(rows):
            block[i] = np.frombuffer(
                self._mm, dtype="<f4", count=self.dim, offset=self._offsets[row]
            )
        return _normalize_rows(block, "index")

    def _row(self, row: int) -> np.ndarray:
        return self._read_block(range(row, row + 1))[0]

    def _iter_chunks(self):
        for start in range(0, len(self.ids), _SCAN_CHUNK):
            stop = min(start + _SCAN_CHUNK, len(self.ids))
            yield start, self._read_block(range(start, stop))


def _parse_layout(buf, name: str):
    """Validate header and record framing; return (dim, ids, vector offsets)."""
    if len(buf) < _HEADER.size:
        raise VectorFileError(f"{name}: truncated header")
    magic, version, dim, count = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise VectorFileError(f"{name}: bad magic {magic!r}")
    if version != VERSION:
        raise VectorFileError(f"{name}: unsupported version {version}")
    if dim < 1:
        raise VectorFileError(f"{name}: dimension must be >= 1, got {dim}")
    ids = []
    offsets = np.empty(count, dtype=np.int64)
    pos = _HEADER.size
    vec_bytes = 4 * dim
    for row in range(count):
        if pos + _IDLEN.size > len(buf):
            raise VectorFileError(f"{name}: truncated file at record {row}")
        (id_len,) = _IDLEN.unpack_from(buf, pos)
        pos += _IDLEN.size
        if pos + id_len + vec_bytes > len(buf):
            raise VectorFileError(f"{name}: truncated file at record {row}")
        try:
            vec_id = bytes(buf[pos:pos + id_len]).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise VectorFileError(f"{name}: undecodable id at record {row}") from exc
        pos += id_len
        ids.append(vec_id)
        offsets[row] = pos
        pos += vec_bytes
    if pos != len(buf):
        raise VectorFileError(f"{name}: {len(buf) - pos} trailing bytes")
    if len(set(ids)) != len(ids):
        dup = next(i for n, i in enumerate(ids) if i in ids[:n])
        raise VectorFileError(f"{name}: duplicate id {dup!r}")
    return dim, ids, offsets


def load_vectors(path, mode: str = "ram", kind: str = "") -> _BaseIndex:
    """Load a vector file; mode 'ram' materializes, 'mmap' scans lazily."""
    if mode == "mmap":
        return MmapEmbeddingIndex(path, kind=kind)
    if mode != "ram":
        raise ConfigError(f"unknown index mode {mode!r}")
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise VectorFileError(f"cannot read vector file {path}: {exc}") from exc
    dim, ids, offsets = _parse_layout(data, str(path))
    matrix = np.empty((len(ids), dim), dtype=np.float32)
    for row, offset in enumerate(offsets):
        matrix[row] = np.frombuffer(data, dtype="<f4", count=dim, offset=int(offset))
    return EmbeddingIndex(ids, matrix, kind=kind)


def save_vectors(path, entries, normalize: bool = True) -> int:
    """Write (id, vector) pairs in the vector file format; returns count.

    Ids must be unique; vectors finite, non-zero, and of one dimension.
    """
    entries = list(entries)
    if not entries:
        raise ConfigError("refusing to write an empty vector file")
    dim = _as_vector(entries[0][1]).shape[0]
    seen = set()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, len(entries)))
        for vec_id, vec in entries:
            if vec_id in seen:
                raise VectorFileError(f"duplicate id {vec_id!r}")
            seen.add(vec_id)
            row = _as_vector(vec, dim=dim).reshape(1, -1)
            if normalize:
                row = _normalize_rows(row, f"entry {vec_id!r}")
            encoded = vec_id.encode("utf-8")
            fh.write(_IDLEN.pack(len(encoded)))
            fh.write(encoded)
            fh.write(row.astype("<f4").tobytes())
    return len(entries)
