"""Context assembly and prompt rendering for the experiment regimes.

Regimes:
  baseline               no context at all
  relevant-info-only     top-k verbalized triples by similarity to the
                         concept combined with the question
  irrelevant-info-only   k uniform-random triples
  graph-inference-only   a walk chain; relevance flag Y keeps the anchor
                         similar to the concept but draws triples at
                         random, N randomizes the anchor too
  kgi                    similar anchor, first triple by question
                         similarity, random extension
  qgi                    top-1 retrieved sentence followed by a kgi chain

The rendered prompt is three blocks: context sentences (one per line),
question stem, lettered choices. The order knob swaps the first two
blocks; with no context the block disappears entirely. The layout lives
in a plain-text template with {context}/{question}/{choices} placeholders
so it is versioned data, not code.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from importlib import resources

from .embedindex import _BaseIndex
from .errors import ConfigError
from .evaluator import QAItem
from .kgstore import KnowledgeGraph
from .verbalizer import Sentence, verbalize
from .walker import (
    IRRELEVANT_ANCHOR,
    RANDOM_TRIPLES,
    RELEVANT,
    ChainShape,
    WalkChain,
    chain_to_sentences,
    sample_irrelevant_triples,
    select_anchor,
    walk_chain,
)

BASELINE = "baseline"
RELEVANT_INFO = "relevant-info-only"
IRRELEVANT_INFO = "irrelevant-info-only"
GRAPH_ONLY = "graph-inference-only"
KGI = "kgi"
QGI = "qgi"
REGIMES = (BASELINE, RELEVANT_INFO, IRRELEVANT_INFO, GRAPH_ONLY, KGI, QGI)

DOCS_FIRST = "documents-then-question"
QUESTION_FIRST = "question-then-documents"
ORDERS = (DOCS_FIRST, QUESTION_FIRST)


@dataclass
class ExperimentSetting:
    """One cell of the experiment grid."""

    regime: str
    k: int = 0
    order: str = DOCS_FIRST
    shape: ChainShape | None = None
    relevance: str = "N"              # graph-inference-only only: Y or N
    direction_mode: str = "regular"
    permutation: list[int] | None = None
    anchor_query: str = "concept"     # or "concept+question"
    k_retrieved: int = 1              # qgi split
    k_graph: int = 0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}")
        if self.order not in ORDERS:
            raise ConfigError(f"unknown prompt order {self.order!r}")
        if self.anchor_query not in ("concept", "concept+question"):
            raise ConfigError(f"unknown anchor query mode {self.anchor_query!r}")
        if self.relevance not in ("Y", "N"):
            raise ConfigError(f"relevance flag must be Y or N, got {self.relevance!r}")
        if self.regime == BASELINE and self.k != 0:
            raise ConfigError("baseline requires k = 0")
        needs_shape = self.regime in (GRAPH_ONLY, KGI, QGI)
        if needs_shape:
            if self.shape is None:
                raise ConfigError(f"regime {self.regime} requires a chain shape")
            if self.regime == QGI:
                if self.k_graph == 0:
                    self.k_graph = len(self.shape)
                if self.k_graph != len(self.shape):
                    raise ConfigError("qgi k_graph must equal the shape length")
                if self.k != self.k_retrieved + self.k_graph:
                    raise ConfigError(
                        "qgi k must decompose as k_retrieved + k_graph "
                        f"({self.k} != {self.k_retrieved} + {self.k_graph})"
                    )
            elif self.k != len(self.shape):
                raise ConfigError(
                    f"regime {self.regime} needs k == shape length "
                    f"({self.k} != {len(self.shape)})"
                )
        if self.regime in (RELEVANT_INFO, IRRELEVANT_INFO) and self.k < 1:
            raise ConfigError(f"regime {self.regime} requires k >= 1")


@dataclass
class IndexBundle:
    """Embedding indexes the regimes draw on. queries maps exact text
    (concept, stem, or concept + " " + stem) to its embedding."""

    node_labels: _BaseIndex | None = None
    sentences: _BaseIndex | None = None
    queries: _BaseIndex | None = None

    def require(self, regime: str, **needed):
        for name, wanted in needed.items():
            if wanted and getattr(self, name) is None:
                raise ConfigError(f"regime {regime} requires the {name} index")


@dataclass
class PromptText:
    text: str
    context_sentences: list[str]
    item_id: str


@dataclass
class BuiltContext:
    sentences: list[Sentence] = field(default_factory=list)
    chain: WalkChain | None = None

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]


def combined_query_text(item: QAItem) -> str:
    return f"{item.question_concept} {item.stem}"


def _query_vec(indexes: IndexBundle, text: str):
    try:
        return indexes.queries.get(text)
    except KeyError as exc:
        raise ConfigError(f"no query embedding for text {text!r}") from exc


def _retrieved_sentences(item: QAItem, graph: KnowledgeGraph,
                         indexes: IndexBundle, k: int) -> list[Sentence]:
    qvec = _query_vec(indexes, combined_query_text(item))
    hits = indexes.sentences.top_k(qvec, k)
    sentences = []
    for sent_id, _ in hits:
        try:
            triple = graph.triples[int(sent_id)]
        except (ValueError, IndexError) as exc:
            raise ConfigError(
                f"sentence index id {sent_id!r} is not a triple index"
            ) from exc
        sentences.append(verbalize(triple))
    return sentences


def _chain_context(setting: ExperimentSetting, item: QAItem,
                   graph: KnowledgeGraph, indexes: IndexBundle,
                   rng: random.Random, mode: str) -> BuiltContext:
    anchor_text = (
        item.question_concept
        if setting.anchor_query == "concept"
        else combined_query_text(item)
    )
    anchor = select_anchor(
        anchor_text, indexes.node_labels, mode, rng, graph,
        query_vectors=indexes.queries,
    )
    question_vec = None
    if mode == RELEVANT:
        question_vec = _query_vec(indexes, item.stem)
    chain = walk_chain(
        graph, anchor, setting.shape, rng, mode=mode,
        question_vec=question_vec, sentence_index=indexes.sentences,
    )
    sentences = chain_to_sentences(
        chain, setting.direction_mode, setting.permutation
    )
    return BuiltContext(sentences=sentences, chain=chain)


def build_context(setting: ExperimentSetting, item: QAItem,
                  graph: KnowledgeGraph | None, indexes: IndexBundle,
                  rng: random.Random) -> BuiltContext:
    """Assemble the context sentences for one item under one regime."""
    regime = setting.regime
    if regime == BASELINE:
        return BuiltContext()
    if graph is None:
        raise ConfigError(f"regime {regime} requires an ingested graph")
    if regime == RELEVANT_INFO:
        indexes.require(regime, sentences=True, queries=True)
        return BuiltContext(
            sentences=_retrieved_sentences(item, graph, indexes, setting.k)
        )
    if regime == IRRELEVANT_INFO:
        triples = sample_irrelevant_triples(graph, setting.k, rng)
        return BuiltContext(sentences=[verbalize(t) for t in triples])
    if regime == GRAPH_ONLY:
        mode = RANDOM_TRIPLES if setting.relevance == "Y" else IRRELEVANT_ANCHOR
        if mode == RANDOM_TRIPLES:
            indexes.require(regime, node_labels=True, queries=True)
        return _chain_context(setting, item, graph, indexes, rng, mode)
    if regime == KGI:
        indexes.require(regime, node_labels=True, sentences=True, queries=True)
        return _chain_context(setting, item, graph, indexes, rng, RELEVANT)
    if regime == QGI:
        indexes.require(regime, node_labels=True, sentences=True, queries=True)
        retrieved = _retrieved_sentences(item, graph, indexes, setting.k_retrieved)
        chain_part = _chain_context(setting, item, graph, indexes, rng, RELEVANT)
        return BuiltContext(
            sentences=retrieved + chain_part.sentences,
            chain=chain_part.chain,
        )
    raise ConfigError(f"unknown regime {regime!r}")


def _load_builtin_template(order: str) -> str:
    name = (
        "prompt_docs_first.txt" if order == DOCS_FIRST
        else "prompt_question_first.txt"
    )
    ref = resources.files("kgwalk.data").joinpath(name)
    return ref.read_text(encoding="utf-8")


def render_prompt(item: QAItem, context, order: str = DOCS_FIRST,
                  template: str | None = None) -> PromptText:
    """Fill the prompt template; pure in (item, context, order, template)."""
    if order not in ORDERS:
        raise ConfigError(f"unknown prompt order {order!r}")
    if template is None:
        template = _load_builtin_template(order)
    context_texts = [
        s.text if isinstance(s, Sentence) else str(s) for s in context
    ]
    context_block = "\n".join(context_texts)
    choices_block = "\n".join(f"{c.label}. {c.text}" for c in item.choices)
    lines = []
    for line in template.rstrip("\n").split("\n"):
        if line.strip() == "{context}" and not context_block:
            continue
        lines.append(
            line.replace("{context}", context_block)
            .replace("{question}", item.stem)
            .replace("{choices}", choices_block)
        )
    return PromptText(
        text="\n".join(lines),
        context_sentences=context_texts,
        item_id=item.id,
    )
