"""Triple verbalization.

Each triple renders to exactly one lowercase sentence via its relation's
template; the subject always fills the subject slot, so edge direction is
preserved in the text. Corpus export writes one ``<index>\\t<sentence>``
line per triple, which is the input contract for the offline embedder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .errors import UnknownRelationError
from .kgstore import KnowledgeGraph, Triple


@dataclass(frozen=True)
class Sentence:
    text: str
    source_triple: int
    direction: str = "forward"


def verbalize(triple: Triple) -> Sentence:
    """Render one triple; raises UnknownRelationError if its relation has
    no template."""
    template = triple.relation.template_forward
    if template is None:
        raise UnknownRelationError(triple.relation.name)
    text = template.replace("{subj}", triple.subject.label).replace(
        "{obj}", triple.object.label
    )
    return Sentence(text=text, source_triple=triple.index)


def verbalize_corpus(graph: KnowledgeGraph) -> Iterator[tuple[int, Sentence]]:
    """Yield (triple index, sentence) for every triple, in index order."""
    for triple in graph.triples:
        try:
            yield triple.index, verbalize(triple)
        except UnknownRelationError as exc:
            raise UnknownRelationError(
                f"{exc.relation_name} (triple {triple.index})"
            ) from exc


def export_sentences(graph: KnowledgeGraph, path) -> int:
    """Write the corpus as UTF-8 ``<index>\\t<sentence>`` lines (LF endings).

    Returns the number of lines written.
    """
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for index, sentence in verbalize_corpus(graph):
            fh.write(f"{index}\t{sentence.text}\n")
            count += 1
    return count


def export_labels(graph: KnowledgeGraph, path) -> int:
    """Write unique node labels as ``<label>\\t<label>`` lines, first-seen
    order, for the label-embedding job. Returns the line count."""
    count = 0
    seen = set()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for node in graph.nodes:
            if node.label in seen:
                continue
            seen.add(node.label)
            fh.write(f"{node.label}\t{node.label}\n")
            count += 1
    return count
