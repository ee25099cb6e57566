"""Directed, relation-typed in-memory graph over ConceptNet assertions.

Ingestion parses the ConceptNet 5 assertions dump (tab-separated, five
fields, JSON metadata carrying the edge weight) and keeps every assertion
whose start and end URIs both match the requested language. Node ids are
assigned in first-seen order so repeated ingestion of the same file yields
an identical graph. After ingestion the graph is immutable; all lookups
are safe for concurrent readers.
"""

from __future__ import annotations

import gzip
import json
import random
from dataclasses import dataclass

from .errors import DataError, GraphError
from .templates import default_template_table


@dataclass(frozen=True)
class NodeId:
    """One entity node: dense integer handle plus its surface text."""

    id: int
    label: str
    uri: str

    def __repr__(self) -> str:  # keep assertion spew readable
        return f"NodeId({self.id}, {self.label!r})"


@dataclass(frozen=True)
class RelationId:
    """One relation type with its sentence template."""

    id: int
    name: str
    template_forward: str | None
    template_symmetric: bool


@dataclass(frozen=True)
class Triple:
    """Directed edge (subject, relation, object); ``index`` is its position
    in the owning graph's triple list."""

    index: int
    subject: NodeId
    relation: RelationId
    object: NodeId
    weight: float


@dataclass
class IngestReport:
    nodes: int
    triples: int
    skipped: int
    filtered: int = 0

    def as_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "triples": self.triples,
            "skipped": self.skipped,
            "filtered": self.filtered,
        }


def normalize_label(term: str) -> str:
    """URI term -> surface text: lowercase, underscores to spaces."""
    return term.replace("_", " ").strip().lower()


def _label_from_concept_uri(uri: str) -> str | None:
    # /c/<lang>/<term>[/<sense>...]
    parts = uri.split("/")
    if len(parts) < 4 or parts[1] != "c" or not parts[3]:
        return None
    return normalize_label(parts[3])


class KnowledgeGraph:
    """Nodes, triples, and inbound/outbound adjacency by node id."""

    def __init__(self):
        self.nodes: list[NodeId] = []
        self.triples: list[Triple] = []
        self.relations: list[RelationId] = []
        self._uri_to_id: dict[str, int] = {}
        self._label_to_id: dict[str, int] = {}
        self._rel_to_id: dict[str, int] = {}
        self._out: list[list[int]] = []
        self._in: list[list[int]] = []
        self._templates = default_template_table()

    def __len__(self) -> int:
        return len(self.nodes)

    # -- construction ------------------------------------------------------

    def _node(self, uri: str, label: str) -> NodeId:
        node_id = self._uri_to_id.get(uri)
        if node_id is not None:
            return self.nodes[node_id]
        node_id = len(self.nodes)
        node = NodeId(id=node_id, label=label, uri=uri)
        self.nodes.append(node)
        self._uri_to_id[uri] = node_id
        # first-seen node wins the label slot; sense variants share labels
        self._label_to_id.setdefault(label, node_id)
        self._out.append([])
        self._in.append([])
        return node

    def _relation(self, name: str) -> RelationId:
        rel_id = self._rel_to_id.get(name)
        if rel_id is not None:
            return self.relations[rel_id]
        rel_id = len(self.relations)
        template, symmetric = self._templates.get(name, (None, False))
        rel = RelationId(
            id=rel_id,
            name=name,
            template_forward=template,
            template_symmetric=symmetric,
        )
        self.relations.append(rel)
        self._rel_to_id[name] = rel_id
        return rel

    def _add_triple(self, subject: NodeId, relation: RelationId, obj: NodeId,
                    weight: float) -> Triple:
        triple = Triple(
            index=len(self.triples),
            subject=subject,
            relation=relation,
            object=obj,
            weight=weight,
        )
        self.triples.append(triple)
        self._out[subject.id].append(triple.index)
        self._in[obj.id].append(triple.index)
        return triple

    @classmethod
    def from_edges(cls, edges) -> "KnowledgeGraph":
        """Build a graph from (subject_label, relation_name, object_label[, weight])
        tuples. Ids follow first-seen order. Intended for fixtures and tests."""
        graph = cls()
        for edge in edges:
            if len(edge) == 4:
                subj, rel, obj, weight = edge
            else:
                subj, rel, obj = edge
                weight = 1.0
            s_label = normalize_label(subj)
            o_label = normalize_label(obj)
            s = graph._node(f"/c/en/{s_label.replace(' ', '_')}", s_label)
            o = graph._node(f"/c/en/{o_label.replace(' ', '_')}", o_label)
            graph._add_triple(s, graph._relation(rel), o, float(weight))
        return graph

    # -- ingestion ---------------------------------------------------------

    def ingest_conceptnet(self, path, language: str = "en") -> IngestReport:
        """Load assertions from a ConceptNet 5 dump (optionally gzipped).

        Keeps lines whose start and end URIs are both /c/<language>/...;
        well-formed lines failing that filter are counted as filtered,
        malformed lines as skipped. Raises DataError if the file cannot be
        read or if no triple survives (wrong file or filter).
        """
        prefix = f"/c/{language}/"
        skipped = 0
        filtered = 0
        opener = gzip.open if str(path).endswith(".gz") else open
        try:
            fh = opener(path, "rt", encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read dump {path}: {exc}") from exc
        with fh:
            try:
                for line in fh:
                    line = line.rstrip("\n")
                    if not line:
                        continue
                    fields = line.split("\t")
                    if len(fields) != 5:
                        skipped += 1
                        continue
                    _, rel_uri, start_uri, end_uri, meta_raw = fields
                    if not rel_uri.startswith("/r/"):
                        skipped += 1
                        continue
                    if not (start_uri.startswith(prefix) and end_uri.startswith(prefix)):
                        filtered += 1
                        continue
                    s_label = _label_from_concept_uri(start_uri)
                    o_label = _label_from_concept_uri(end_uri)
                    if not s_label or not o_label:
                        skipped += 1
                        continue
                    try:
                        meta = json.loads(meta_raw)
                        weight = float(meta.get("weight", 1.0))
                    except (ValueError, TypeError, AttributeError):
                        skipped += 1
                        continue
                    if weight < 0:
                        skipped += 1
                        continue
                    subject = self._node(start_uri, s_label)
                    obj = self._node(end_uri, o_label)
                    relation = self._relation(rel_uri[len("/r/"):])
                    self._add_triple(subject, relation, obj, weight)
            except (OSError, UnicodeDecodeError, gzip.BadGzipFile) as exc:
                raise DataError(f"cannot read dump {path}: {exc}") from exc
        if not self.triples:
            raise DataError(
                f"zero triples ingested from {path} with language {language!r}"
            )
        return IngestReport(
            nodes=len(self.nodes),
            triples=len(self.triples),
            skipped=skipped,
            filtered=filtered,
        )

    # -- lookups -----------------------------------------------------------

    @staticmethod
    def _node_id(node) -> int:
        return node.id if isinstance(node, NodeId) else int(node)

    def _check_node(self, node_id: int) -> int:
        if not 0 <= node_id < len(self.nodes):
            raise GraphError(f"unknown node id {node_id}")
        return node_id

    def outbound(self, node) -> list[Triple]:
        """Triples with the given node as subject, in ingestion order."""
        node_id = self._check_node(self._node_id(node))
        return [self.triples[i] for i in self._out[node_id]]

    def inbound(self, node) -> list[Triple]:
        """Triples with the given node as object, in ingestion order."""
        node_id = self._check_node(self._node_id(node))
        return [self.triples[i] for i in self._in[node_id]]

    def node_by_label(self, label: str) -> NodeId | None:
        node_id = self._label_to_id.get(normalize_label(label))
        return self.nodes[node_id] if node_id is not None else None

    def node_by_uri(self, uri: str) -> NodeId | None:
        node_id = self._uri_to_id.get(uri)
        return self.nodes[node_id] if node_id is not None else None

    def random_node(self, rng: random.Random) -> NodeId:
        """Uniform draw over nodes; deterministic for a seeded rng."""
        if not self.nodes:
            raise GraphError("random_node on an empty graph")
        return self.nodes[rng.randrange(len(self.nodes))]
