"""Directed random-walk chains around an anchor node.

A chain shape is written in the five-node numbering where the anchor is
node 1 and 5 -> 4 -> 1 -> 2 -> 3 is one directed path: node 2 is the
object of an outbound step from the anchor, node 3 extends node 2, node 4
is the subject of an inbound step into the anchor, node 5 extends node 4.
The first triple is picked by similarity between the question embedding
and the verbalized one-hop triples of the anchor (or uniformly at random,
depending on the relevance mode); every later step is a uniform draw over
admissible edges. Self-loops and immediate backtracking are never
admissible, so an untruncated chain is a simple directed path.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .embedindex import cosine
from .errors import ConfigError, GraphError, StrandedAnchorError
from .kgstore import KnowledgeGraph, NodeId, Triple
from .verbalizer import Sentence, verbalize

# relevance modes
RELEVANT = "relevant"
IRRELEVANT_ANCHOR = "irrelevant-anchor"
RANDOM_TRIPLES = "random-triples-from-anchor"
RELEVANCE_MODES = (RELEVANT, IRRELEVANT_ANCHOR, RANDOM_TRIPLES)

# paper-style node number <-> offset from the anchor (anchor = node 1)
_NODE_TO_OFFSET = {1: 0, 2: 1, 3: 2, 4: -1, 5: -2}
_OFFSET_TO_NODE = {off: num for num, off in _NODE_TO_OFFSET.items()}


@dataclass(frozen=True)
class ChainShape:
    """Ordered (from, to) node-number steps forming one directed path
    through the anchor, e.g. ((4, 1), (1, 2))."""

    steps: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.steps:
            raise ConfigError("a chain shape needs at least one step")
        offsets = []
        for a, b in self.steps:
            if a not in _NODE_TO_OFFSET or b not in _NODE_TO_OFFSET:
                raise ConfigError(f"unknown node number in shape step {a}->{b}")
            oa, ob = _NODE_TO_OFFSET[a], _NODE_TO_OFFSET[b]
            if ob != oa + 1:
                raise ConfigError(f"shape step {a}->{b} is not one directed hop")
            offsets.append(oa)
        offsets.sort()
        lo, hi = offsets[0], offsets[-1]
        if offsets != list(range(lo, hi + 1)):
            raise ConfigError("shape steps must form one contiguous path")
        if not lo <= 0 <= hi + 1:
            raise ConfigError("shape must contain the anchor")

    @classmethod
    def parse(cls, text: str) -> "ChainShape":
        """Parse forms like "4->1,1->2" or "(5 -> 4, 4 -> 1)"."""
        cleaned = text.replace("(", "").replace(")", "").replace(" ", "")
        steps = []
        for part in cleaned.split(","):
            if not part:
                continue
            try:
                a, b = part.split("->")
                steps.append((int(a), int(b)))
            except ValueError as exc:
                raise ConfigError(f"cannot parse shape step {part!r}") from exc
        shape = cls(tuple(steps))
        as_offsets = [(_NODE_TO_OFFSET[a], _NODE_TO_OFFSET[b]) for a, b in steps]
        if as_offsets != sorted(as_offsets):
            # presentation order is the direction_mode knob, not the shape
            raise ConfigError(f"shape {text!r} steps are not in path order")
        return shape

    def offset_steps(self) -> list[tuple[int, int]]:
        """Steps as anchor-relative offsets, in path order."""
        return sorted(
            (_NODE_TO_OFFSET[a], _NODE_TO_OFFSET[b]) for a, b in self.steps
        )

    def backward_steps(self) -> int:
        return -min(a for a, _ in self.offset_steps())

    def forward_steps(self) -> int:
        return max(b for _, b in self.offset_steps())

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        return ",".join(f"{a}->{b}" for a, b in self.steps)


@dataclass
class WalkChain:
    """A realized chain: triples in path order with their step labels."""

    anchor: NodeId
    steps: list[Triple]
    labels: list[tuple[int, int]]
    truncated: bool = False
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.steps)

    def validate(self, graph: KnowledgeGraph):
        """Assert the directed-path, membership, and no-self-loop invariants."""
        for triple in self.steps:
            if graph.triples[triple.index] is not triple:
                raise AssertionError("chain step is not an edge of the graph")
            if triple.subject.id == triple.object.id:
                raise AssertionError("chain contains a self-loop")
        for prev, nxt in zip(self.steps, self.steps[1:]):
            if prev.object.id != nxt.subject.id:
                raise AssertionError("chain steps do not form a directed path")
        if self.steps:
            touched = {self.steps[0].subject.id}
            touched.update(t.object.id for t in self.steps)
            if self.anchor.id not in touched:
                raise AssertionError("anchor not on the chain")

    def manifest_record(self, item_id: str) -> dict:
        return {
            "item_id": item_id,
            "anchor": self.anchor.label,
            "steps": [
                {
                    "subject": t.subject.label,
                    "relation": t.relation.name,
                    "object": t.object.label,
                }
                for t in self.steps
            ],
            "truncated": self.truncated,
            "seed": self.seed,
        }


@dataclass
class WalkConfig:
    shape: ChainShape
    relevance_mode: str = RELEVANT
    seed: int = 0
    direction_mode: str = "regular"
    permutation: list[int] | None = None

    def __post_init__(self):
        if self.relevance_mode not in RELEVANCE_MODES:
            raise ConfigError(f"unknown relevance mode {self.relevance_mode!r}")
        if self.direction_mode not in ("regular", "irregular"):
            raise ConfigError(f"unknown direction mode {self.direction_mode!r}")


def select_anchor(qc: str, node_index, mode: str, rng: random.Random,
                  graph: KnowledgeGraph, query_vectors=None) -> NodeId:
    """Pick the anchor node for a question concept.

    Relevance modes 'relevant' and 'random-triples-from-anchor' use the
    label most similar to the concept embedding; 'irrelevant-anchor' draws
    a uniform random node.
    """
    if mode not in RELEVANCE_MODES:
        raise ConfigError(f"unknown relevance mode {mode!r}")
    if mode == IRRELEVANT_ANCHOR:
        return graph.random_node(rng)
    if query_vectors is None:
        raise ConfigError("anchor selection by similarity needs query vectors")
    try:
        qvec = query_vectors.get(qc)
    except KeyError as exc:
        raise ConfigError(f"no query embedding for concept {qc!r}") from exc
    label, _ = node_index.most_similar(qvec)
    node = graph.node_by_label(label)
    if node is None:
        raise ConfigError(f"node index label {label!r} is not in the graph")
    return node


def _one_hop(graph: KnowledgeGraph, anchor: NodeId, outbound: bool) -> list[Triple]:
    triples = graph.outbound(anchor) if outbound else graph.inbound(anchor)
    return [t for t in triples if t.subject.id != t.object.id]


def _allowed_first(graph: KnowledgeGraph, anchor: NodeId,
                   shape: ChainShape) -> list[Triple]:
    offset_steps = shape.offset_steps()
    pool: list[Triple] = []
    if (-1, 0) in offset_steps:
        pool.extend(_one_hop(graph, anchor, outbound=False))
    if (0, 1) in offset_steps:
        pool.extend(_one_hop(graph, anchor, outbound=True))
    pool.sort(key=lambda t: t.index)
    return pool


def select_first_triple(anchor: NodeId, question_vec, graph: KnowledgeGraph,
                        sentence_index, candidates: list[Triple] | None = None
                        ) -> Triple:
    """One-hop triple whose verbalized sentence is most similar to the
    question; ties break toward the lower triple index."""
    if candidates is None:
        candidates = sorted(
            _one_hop(graph, anchor, outbound=False)
            + _one_hop(graph, anchor, outbound=True),
            key=lambda t: t.index,
        )
    if not candidates:
        raise StrandedAnchorError(f"anchor {anchor.label!r} has no one-hop triples")
    best = None
    best_score = None
    for triple in candidates:
        try:
            svec = sentence_index.get(str(triple.index))
        except KeyError as exc:
            raise ConfigError(
                f"sentence index has no vector for triple {triple.index}"
            ) from exc
        score = cosine(question_vec, svec)
        if best_score is None or score > best_score:
            best, best_score = triple, score
    return best


def extend_chain(first: Triple | None, anchor: NodeId, shape: ChainShape,
                 graph: KnowledgeGraph, rng: random.Random,
                 mode: str = RELEVANT) -> WalkChain:
    """Fill the shape around the first triple with uniform random hops.

    With first=None and a random relevance mode, the first triple is
    drawn uniformly from the one-hop triples admissible for the shape; an
    empty pool yields a zero-step chain flagged as truncated. Forward
    slots fill before backward slots; a dead end truncates that direction.
    """
    offset_steps = shape.offset_steps()
    node_at: dict[int, NodeId] = {0: anchor}
    filled: dict[tuple[int, int], Triple] = {}
    truncated = False

    if first is None:
        pool = _allowed_first(graph, anchor, shape)
        if mode == RELEVANT:
            raise ConfigError(
                "relevant mode requires an explicitly selected first triple"
            )
        if not pool:
            return WalkChain(anchor=anchor, steps=[], labels=[], truncated=True)
        first = pool[rng.randrange(len(pool))]

    if first.subject.id == anchor.id:
        slot = (0, 1)
        node_at[1] = first.object
    elif first.object.id == anchor.id:
        slot = (-1, 0)
        node_at[-1] = first.subject
    else:
        raise GraphError("first triple is not a one-hop edge of the anchor")
    if slot not in offset_steps:
        raise ConfigError(
            f"first triple direction does not fit shape {shape} "
            f"(needs slot {slot})"
        )
    filled[slot] = first

    hi = max(b for _, b in offset_steps)
    lo = min(a for a, _ in offset_steps)

    # forward: extend from the highest occupied offset up to hi
    front = max(node_at)
    while front < hi:
        frontier = node_at[front]
        came_from = node_at.get(front - 1)
        candidates = [
            t for t in _one_hop(graph, frontier, outbound=True)
            if came_from is None or t.object.id != came_from.id
        ]
        if not candidates:
            truncated = True
            break
        step = candidates[rng.randrange(len(candidates))]
        filled[(front, front + 1)] = step
        node_at[front + 1] = step.object
        front += 1

    # backward: extend from the lowest occupied offset down to lo
    rear = min(node_at)
    while rear > lo:
        rear_node = node_at[rear]
        came_from = node_at.get(rear + 1)
        candidates = [
            t for t in _one_hop(graph, rear_node, outbound=False)
            if came_from is None or t.subject.id != came_from.id
        ]
        if not candidates:
            truncated = True
            break
        step = candidates[rng.randrange(len(candidates))]
        filled[(rear - 1, rear)] = step
        node_at[rear - 1] = step.subject
        rear -= 1

    ordered = sorted(filled.items())
    return WalkChain(
        anchor=anchor,
        steps=[t for _, t in ordered],
        labels=[
            (_OFFSET_TO_NODE[a], _OFFSET_TO_NODE[b]) for (a, b), _ in ordered
        ],
        truncated=truncated,
    )


def walk_chain(graph: KnowledgeGraph, anchor: NodeId, shape: ChainShape,
               rng: random.Random, mode: str = RELEVANT,
               question_vec=None, sentence_index=None) -> WalkChain:
    """Select the first triple per the relevance mode, then extend."""
    if mode == RELEVANT:
        pool = _allowed_first(graph, anchor, shape)
        if not pool:
            return WalkChain(anchor=anchor, steps=[], labels=[], truncated=True)
        first = select_first_triple(
            anchor, question_vec, graph, sentence_index, candidates=pool
        )
        return extend_chain(first, anchor, shape, graph, rng, mode=mode)
    return extend_chain(None, anchor, shape, graph, rng, mode=mode)


def chain_to_sentences(chain: WalkChain, order_mode: str = "regular",
                       permutation: list[int] | None = None) -> list[Sentence]:
    """Verbalize the chain; 'regular' keeps path order, 'irregular' applies
    the given permutation (default: reversed)."""
    sentences = [verbalize(t) for t in chain.steps]
    if order_mode == "regular":
        return sentences
    if order_mode != "irregular":
        raise ConfigError(f"unknown direction mode {order_mode!r}")
    if permutation is None:
        return list(reversed(sentences))
    if sorted(permutation) != list(range(len(sentences))):
        raise ConfigError(
            f"permutation {permutation} does not fit a {len(sentences)}-step chain"
        )
    return [sentences[i] for i in permutation]


def sample_irrelevant_triples(graph: KnowledgeGraph, k: int,
                              rng: random.Random) -> list[Triple]:
    """k distinct uniform-random triples; connectivity is not required."""
    if k > len(graph.triples):
        raise GraphError(
            f"cannot sample {k} triples from a graph with {len(graph.triples)}"
        )
    indices = rng.sample(range(len(graph.triples)), k)
    return [graph.triples[i] for i in indices]
