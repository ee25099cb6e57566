"""Text encoders.

Two families behind one batch-encode interface:

  hash[:dim]      deterministic feature-hash encoder (no model download);
                  each text maps to a PCG64-seeded gaussian vector, so
                  identical text always embeds identically. Used for
                  tests and plumbing checks, not for real retrieval.
  anything else   a sentence-transformers model id, e.g. the default
                  intfloat/e5-base.

e5-family models expect a "query: " / "passage: " prefix; the mode knob
prepends it before encoding (for every encoder, so the hash fallback
honors the same query/passage asymmetry) and is recorded in the job's
sidecar metadata.
"""

from __future__ import annotations

import hashlib

import numpy as np

DEFAULT_MODEL = "intfloat/e5-base"
MODES = ("query", "passage", "none")

_PREFIXES = {"query": "query: ", "passage": "passage: ", "none": ""}


def apply_mode(texts: list[str], mode: str) -> list[str]:
    if mode not in MODES:
        raise ValueError(f"unknown embedding mode {mode!r}")
    prefix = _PREFIXES[mode]
    return [prefix + t for t in texts]


class HashEncoder:
    """Deterministic pseudo-embeddings from SHA-256-seeded gaussians."""

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim), dtype=np.float32)
        for row, text in enumerate(texts):
            seed = int.from_bytes(
                hashlib.sha256(text.encode("utf-8")).digest()[:8], "little"
            )
            rng = np.random.Generator(np.random.PCG64(seed))
            vec = rng.standard_normal(self.dim)
            out[row] = vec / np.linalg.norm(vec)
        return out


class SentenceTransformerEncoder:
    """Thin wrapper over a pretrained sentence-transformers model."""

    def __init__(self, model_id: str, _model=None):
        self.model_id = model_id
        if _model is not None:
            self._model = _model
        else:
            try:
                from sentence_transformers import SentenceTransformer
            except ImportError as exc:
                raise RuntimeError(
                    "sentence-transformers is not installed; "
                    "pip install 'kgwalk-embedder[encoders]'"
                ) from exc
            try:
                self._model = SentenceTransformer(model_id)
            except Exception as exc:
                raise RuntimeError(
                    f"cannot load encoder {model_id!r}: {exc}"
                ) from exc
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        vectors = self._model.encode(
            texts, convert_to_numpy=True, normalize_embeddings=True,
            show_progress_bar=False,
        )
        return np.asarray(vectors, dtype=np.float32)


def build_encoder(model: str):
    """Resolve a model identifier to an encoder instance."""
    if model == "hash" or model.startswith("hash:"):
        dim = 64
        if ":" in model:
            try:
                dim = int(model.split(":", 1)[1])
            except ValueError as exc:
                raise ValueError(f"bad hash encoder spec {model!r}") from exc
        return HashEncoder(dim)
    return SentenceTransformerEncoder(model)
