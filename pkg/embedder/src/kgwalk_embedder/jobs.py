"""Embedding jobs: input parsing, batched inference, vector file output.

Inputs come in two layouts. The "texts" layout is the engine's text
export, one ``<id>\\t<text>`` line per record (triple sentences or node
labels); duplicate ids are fatal. The "dataset" layout is QA JSON lines,
from which a field selects the text to embed: the question stem, the
question concept, their concatenation, or "queries" for the union of all
three. Dataset records are keyed by the embedded text itself and
deduplicated, matching how the engine looks embeddings up (by exact
text, not item id).

Alongside the vector file the job writes ``<out>.meta.json`` recording
the model, the query/passage mode, the dimension, the record count, and
a digest of the input file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .encoders import DEFAULT_MODEL, apply_mode, build_encoder
from .vectorio import VectorWriter

TEXT_FIELDS = ("sentence", "node-label")
DATASET_FIELDS = ("question", "concept", "question+concept", "queries")
FIELDS = TEXT_FIELDS + DATASET_FIELDS

_DEFAULT_MODE = {
    "sentence": "passage",
    "node-label": "passage",
    "question": "query",
    "concept": "query",
    "question+concept": "query",
    "queries": "query",
}


@dataclass
class EmbedJob:
    input_path: str
    output_path: str
    field: str = "sentence"
    model: str = DEFAULT_MODEL
    mode: str | None = None       # query | passage | none; default per field
    batch_size: int = 64

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.mode is None:
            self.mode = _DEFAULT_MODE[self.field]

    @property
    def sidecar_path(self) -> str:
        return f"{self.output_path}.meta.json"


def _read_text_rows(path) -> list[tuple[str, str]]:
    rows = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                row_id, text = line.split("\t", 1)
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: not an id\\ttext line") from exc
            if row_id in seen:
                raise ValueError(f"duplicate id {row_id!r}")
            seen.add(row_id)
            rows.append((row_id, text))
    return rows


def _read_dataset_rows(path, field: str) -> list[tuple[str, str]]:
    rows = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                question = json.loads(line)["question"]
                stem = question["stem"]
                concept = question["question_concept"]
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed record") from exc
            if field == "question":
                texts = [stem]
            elif field == "concept":
                texts = [concept]
            elif field == "question+concept":
                texts = [f"{concept} {stem}"]
            else:  # queries: every composition the engine may look up
                texts = [concept, stem, f"{concept} {stem}"]
            # keyed by the text itself; repeats across items collapse
            for text in texts:
                if text not in seen:
                    seen.add(text)
                    rows.append((text, text))
    return rows


def read_rows(job: EmbedJob) -> list[tuple[str, str]]:
    if job.field in TEXT_FIELDS:
        return _read_text_rows(job.input_path)
    return _read_dataset_rows(job.input_path, job.field)


def _input_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def embed_file(job: EmbedJob) -> dict:
    """Run one job; returns the sidecar metadata dict."""
    rows = read_rows(job)
    if not rows:
        raise ValueError(f"input {job.input_path} has no rows")
    encoder = build_encoder(job.model)
    writer = VectorWriter(job.output_path, encoder.dim)
    for start in range(0, len(rows), job.batch_size):
        batch = rows[start:start + job.batch_size]
        texts = apply_mode([text for _, text in batch], job.mode)
        vectors = encoder.encode(texts)
        if vectors.shape != (len(batch), encoder.dim):
            raise ValueError(
                f"encoder returned shape {vectors.shape}, expected "
                f"({len(batch)}, {encoder.dim})"
            )
        for (row_id, _), vec in zip(batch, vectors):
            writer.write(row_id, vec)
    count = writer.close()
    meta = {
        "model": job.model,
        "mode": job.mode,
        "field": job.field,
        "dim": encoder.dim,
        "count": count,
        "input_digest": _input_digest(job.input_path),
    }
    with open(job.sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return meta
