import gzip
import random
import shutil

import pytest

from kgwalk.errors import DataError, GraphError
from kgwalk.kgstore import KnowledgeGraph, normalize_label

from conftest import FIG1A_DUMP, MINI_DUMP


def ingest(path, language="en"):
    graph = KnowledgeGraph()
    report = graph.ingest_conceptnet(path, language)
    return graph, report


class TestIngest:
    def test_mini_dump_counts(self):
        # 12 well-formed english lines plus one malformed line
        _, report = ingest(MINI_DUMP)
        assert report.triples == 12
        assert report.skipped == 1
        assert report.nodes == 18

    def test_language_filter_counts(self):
        _, report = ingest(FIG1A_DUMP)
        assert report.triples == 35
        assert report.filtered == 2
        assert report.skipped == 0

    def test_empty_file_errors(self, tmp_path):
        empty = tmp_path / "empty.tsv"
        empty.write_text("")
        with pytest.raises(DataError, match="zero triples"):
            ingest(empty)

    def test_wrong_language_errors(self):
        with pytest.raises(DataError, match="zero triples"):
            ingest(MINI_DUMP, language="de")

    def test_unreadable_file_errors(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            ingest(tmp_path / "missing.tsv")

    def test_gzip_transparent(self, tmp_path):
        gz = tmp_path / "mini.tsv.gz"
        with open(MINI_DUMP, "rb") as src, gzip.open(gz, "wb") as dst:
            shutil.copyfileobj(src, dst)
        _, report = ingest(gz)
        assert report.triples == 12

    def test_deterministic_ingestion(self):
        g1, _ = ingest(MINI_DUMP)
        g2, _ = ingest(MINI_DUMP)
        assert [n.uri for n in g1.nodes] == [n.uri for n in g2.nodes]
        assert [(t.subject.id, t.relation.name, t.object.id) for t in g1.triples] \
            == [(t.subject.id, t.relation.name, t.object.id) for t in g2.triples]

    def test_parallel_edges_kept_distinct(self, tmp_path):
        dump = tmp_path / "dup.tsv"
        line = "\t".join([
            "/a/x", "/r/IsA", "/c/en/cat", "/c/en/animal", '{"weight": 1.0}'
        ])
        dump.write_text(line + "\n" + line + "\n")
        graph, report = ingest(dump)
        assert report.triples == 2
        cat = graph.node_by_label("cat")
        assert len(graph.outbound(cat)) == 2


class TestAdjacency:
    def test_adjacency_round_trip(self, fig1a_graph):
        for triple in fig1a_graph.triples:
            assert triple in fig1a_graph.outbound(triple.subject)
            assert triple in fig1a_graph.inbound(triple.object)

    def test_degree_sums_match_triple_count(self, fig1a_graph):
        out_total = sum(len(fig1a_graph.outbound(n)) for n in fig1a_graph.nodes)
        in_total = sum(len(fig1a_graph.inbound(n)) for n in fig1a_graph.nodes)
        assert out_total == in_total == len(fig1a_graph.triples)

    def test_alcohol_one_hop_counts(self, fig1a_graph):
        alcohol = fig1a_graph.node_by_label("alcohol")
        assert len(fig1a_graph.outbound(alcohol)) == 6
        assert len(fig1a_graph.inbound(alcohol)) == 2

    def test_fixture_chain(self):
        graph = KnowledgeGraph.from_edges(
            [("a", "Causes", "b"), ("b", "Causes", "c")]
        )
        b = graph.node_by_label("b")
        out = graph.outbound(b)
        inn = graph.inbound(b)
        assert [t.object.label for t in out] == ["c"]
        assert [t.subject.label for t in inn] == ["a"]

    def test_isolated_direction_is_empty(self, fig1a_graph):
        # "wet" only ever appears as an object
        wet = fig1a_graph.node_by_label("wet")
        assert fig1a_graph.outbound(wet) == []

    def test_unknown_node_errors(self, fig1a_graph):
        with pytest.raises(GraphError):
            fig1a_graph.outbound(10_000)
        with pytest.raises(GraphError):
            fig1a_graph.inbound(-1)


class TestLabels:
    def test_normalization(self):
        assert normalize_label("Drink_Alcohol") == "drink alcohol"

    def test_lookup_case_insensitive(self, fig1a_graph):
        assert fig1a_graph.node_by_label("Alcohol") \
            == fig1a_graph.node_by_label("alcohol")

    def test_lookup_absent(self, fig1a_graph):
        assert fig1a_graph.node_by_label("") is None
        assert fig1a_graph.node_by_label("no such concept") is None


class TestRandomNode:
    def test_deterministic(self, fig1a_graph):
        a = fig1a_graph.random_node(random.Random(42))
        b = fig1a_graph.random_node(random.Random(42))
        assert a == b

    def test_single_node_graph(self):
        graph = KnowledgeGraph.from_edges([("a", "IsA", "a")])
        assert graph.random_node(random.Random(0)).label == "a"

    def test_empty_graph_errors(self):
        with pytest.raises(GraphError):
            KnowledgeGraph().random_node(random.Random(0))

    def test_roughly_uniform(self):
        graph = KnowledgeGraph.from_edges(
            [(f"n{i}", "RelatedTo", f"n{(i + 1) % 10}") for i in range(10)]
        )
        assert len(graph) == 10
        rng = random.Random(15)
        counts = [0] * 10
        for _ in range(10_000):
            counts[graph.random_node(rng).id] += 1
        for count in counts:
            assert abs(count - 1000) <= 1000 * 0.05
