import hashlib
import json
import os

import numpy as np
import pytest

from kgwalk.embedindex import save_vectors
from kgwalk.evaluator import load_dataset
from kgwalk.kgstore import KnowledgeGraph
from kgwalk.verbalizer import verbalize

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

MINI_DUMP = os.path.join(DATA_DIR, "mini_dump.tsv")
FIG1A_DUMP = os.path.join(DATA_DIR, "fig1a_dump.tsv")
CSQA20 = os.path.join(DATA_DIR, "csqa20.jsonl")
REPLAY20 = os.path.join(DATA_DIR, "replay20.jsonl")

# hand-counted score of the replay fixture: q01-q10 correct, q11-q20 not
REPLAY20_CORRECT = 10
REPLAY20_TOTAL = 20


def hash_vec(text: str, dim: int) -> np.ndarray:
    """Deterministic pseudo-embedding: PCG64 seeded from SHA-256 of the text."""
    seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")
    rng = np.random.Generator(np.random.PCG64(seed))
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


@pytest.fixture(scope="session")
def fig1a_graph() -> KnowledgeGraph:
    graph = KnowledgeGraph()
    graph.ingest_conceptnet(FIG1A_DUMP, "en")
    return graph


@pytest.fixture(scope="session")
def run_inputs(tmp_path_factory, fig1a_graph):
    """Vector files and a base config covering the 20-item replay pipeline."""
    root = tmp_path_factory.mktemp("run_inputs")
    dim = 16

    labels = sorted({node.label for node in fig1a_graph.nodes})
    node_labels_path = str(root / "node_labels.kgwv")
    save_vectors(node_labels_path, [(lb, hash_vec(lb, dim)) for lb in labels])

    sentences_path = str(root / "sentences.kgwv")
    save_vectors(
        sentences_path,
        [(str(t.index), hash_vec(verbalize(t).text, dim))
         for t in fig1a_graph.triples],
    )

    items = load_dataset(CSQA20)
    query_texts = set()
    for item in items:
        query_texts.add(item.question_concept)
        query_texts.add(item.stem)
        query_texts.add(f"{item.question_concept} {item.stem}")
    queries_path = str(root / "queries.kgwv")
    save_vectors(
        queries_path, [(q, hash_vec(q, dim)) for q in sorted(query_texts)]
    )

    def make_config(**overrides) -> dict:
        config = {
            "version": 1,
            "regime": "qgi",
            "k": 3,
            "k_retrieved": 1,
            "shape": "4->1,1->2",
            "order": "documents-then-question",
            "seed": 7,
            "dataset": CSQA20,
            "graph": {"dump": FIG1A_DUMP, "language": "en"},
            "indexes": {
                "node_labels": node_labels_path,
                "sentences": sentences_path,
                "queries": queries_path,
            },
            "backend": {"kind": "replay", "path": REPLAY20},
            "generation": {"max_new_tokens": 16, "temperature": 0.0},
            "parallelism": 1,
        }
        config.update(overrides)
        return config

    return {
        "root": root,
        "dim": dim,
        "node_labels": node_labels_path,
        "sentences": sentences_path,
        "queries": queries_path,
        "make_config": make_config,
    }


def write_config(path, config: dict) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return str(path)
