import struct

import pytest

from kgwalk.embedindex import save_vectors
from kgwalk.vectorcheck import read_vector_file

from conftest import hash_vec


def test_accepts_writer_output(tmp_path):
    path = tmp_path / "ok.kgwv"
    entries = [(f"id{i}", hash_vec(f"vc-{i}", 6)) for i in range(4)]
    save_vectors(path, entries)
    dim, records = read_vector_file(path)
    assert dim == 6
    assert [r[0] for r in records] == [e[0] for e in entries]


def test_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.kgwv"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        read_vector_file(path)


def test_rejects_truncation(tmp_path):
    path = tmp_path / "short.kgwv"
    path.write_bytes(struct.pack("<4sIIQ", b"KGWV", 1, 3, 2))
    with pytest.raises(ValueError, match="truncated"):
        read_vector_file(path)


def test_rejects_unnormalized_vector(tmp_path):
    path = tmp_path / "loose.kgwv"
    buf = struct.pack("<4sIIQ", b"KGWV", 1, 2, 1)
    buf += struct.pack("<I", 1) + b"a" + struct.pack("<2f", 3.0, 4.0)
    path.write_bytes(buf)
    with pytest.raises(ValueError, match="normalized"):
        read_vector_file(path)


def test_rejects_duplicate_id(tmp_path):
    path = tmp_path / "dup.kgwv"
    buf = struct.pack("<4sIIQ", b"KGWV", 1, 2, 2)
    for _ in range(2):
        buf += struct.pack("<I", 1) + b"a" + struct.pack("<2f", 1.0, 0.0)
    path.write_bytes(buf)
    with pytest.raises(ValueError, match="duplicate"):
        read_vector_file(path)
