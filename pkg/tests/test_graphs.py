"""Graph containers, file ingestion, perturbation, and relabeling."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hotmatch import (
    Alignment,
    Graph,
    GraphParseError,
    NoiseSpec,
    load_alignment,
    load_graph,
    permute_graph,
    perturb_edges,
    save_graph,
)

RING4 = np.array(
    [
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, 1.0, 0.0],
    ]
)


def ring_graph() -> Graph:
    return Graph(RING4, np.arange(8.0).reshape(4, 2))


@st.composite
def graphs(draw, max_nodes: int = 7):
    n = draw(st.integers(min_value=2, max_value=max_nodes))
    bits = draw(st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2))
    adjacency = np.zeros((n, n))
    iu, ju = np.triu_indices(n, k=1)
    adjacency[iu, ju] = np.array(bits, dtype=float)
    adjacency += adjacency.T
    attrs = np.arange(2.0 * n).reshape(n, 2)
    return Graph(adjacency, attrs)


class TestGraph:
    def test_properties(self):
        g = ring_graph()
        assert g.node_count == 4
        assert g.edge_count == 4
        assert g.attr_dim == 2

    def test_edge_array_is_sorted_upper_triangle(self):
        g = ring_graph()
        assert g.edge_array().tolist() == [[0, 1], [0, 3], [1, 2], [2, 3]]

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            Graph(np.zeros((2, 3)), np.zeros((2, 1)))

    def test_rejects_asymmetric(self):
        adj = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError, match="symmetric"):
            Graph(adj, np.zeros((2, 1)))

    def test_rejects_non_binary(self):
        adj = np.array([[0.0, 0.5], [0.5, 0.0]])
        with pytest.raises(ValueError, match="0 or 1"):
            Graph(adj, np.zeros((2, 1)))

    def test_rejects_self_loops(self):
        adj = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValueError, match="[Ss]elf-loop"):
            Graph(adj, np.zeros((2, 1)))

    def test_rejects_attribute_row_mismatch(self):
        with pytest.raises(ValueError, match="one row per node"):
            Graph(np.zeros((2, 2)), np.zeros((3, 1)))

    def test_rejects_non_finite_attributes(self):
        attrs = np.array([[np.nan], [0.0]])
        with pytest.raises(ValueError, match="finite"):
            Graph(np.zeros((2, 2)), attrs)

    def test_rejects_label_length_mismatch(self):
        with pytest.raises(ValueError, match="labels"):
            Graph(np.zeros((2, 2)), np.zeros((2, 1)), labels=(0,))


class TestLoadGraph:
    def test_parses_comments_duplicates_and_gaps(self, tmp_path):
        p = tmp_path / "edges.txt"
        p.write_text("# header\n5 7\n7 5\n\n9 5  # trailing comment\n")
        g = load_graph(p)
        assert g.labels == (5, 7, 9)
        assert g.edge_count == 2
        assert g.adjacency[0, 1] == 1.0 and g.adjacency[0, 2] == 1.0
        assert g.adjacency[1, 2] == 0.0

    def test_degree_fallback_attributes(self, tmp_path):
        p = tmp_path / "edges.txt"
        p.write_text("0 1\n0 2\n")
        g = load_graph(p)
        # node 0 has degree 2, the others 1; features are degree / max degree
        assert g.attributes.tolist() == [[1.0], [0.5], [0.5]]

    def test_attribute_csv_rows_follow_original_ids(self, tmp_path):
        edges = tmp_path / "edges.txt"
        edges.write_text("0 2\n")
        attrs = tmp_path / "attrs.csv"
        attrs.write_text("0.0,1.0\n9.0,9.0\n2.0,3.0\n")
        g = load_graph(edges, attrs)
        # node ids 0 and 2 select CSV rows 0 and 2; row 1 belongs to absent id 1
        assert g.attributes.tolist() == [[0.0, 1.0], [2.0, 3.0]]

    @pytest.mark.parametrize(
        "content, message",
        [
            ("0 1 2\n", "expected 'u v'"),
            ("0 x\n", "non-integer"),
            ("0 -1\n", "negative"),
            ("3 3\n", "self-loop"),
            ("# nothing\n", "no edges"),
        ],
    )
    def test_parse_errors(self, tmp_path, content, message):
        p = tmp_path / "bad.txt"
        p.write_text(content)
        with pytest.raises(GraphParseError, match=message):
            load_graph(p)

    def test_parse_error_names_file_and_line(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("0 1\nbroken line\n")
        with pytest.raises(GraphParseError, match=rf"{p.name}:2"):
            load_graph(p)

    def test_attribute_row_count_must_cover_max_id(self, tmp_path):
        edges = tmp_path / "edges.txt"
        edges.write_text("0 3\n")
        attrs = tmp_path / "attrs.csv"
        attrs.write_text("1.0\n2.0\n")
        with pytest.raises(GraphParseError, match="attribute rows"):
            load_graph(edges, attrs)

    def test_malformed_attribute_csv(self, tmp_path):
        edges = tmp_path / "edges.txt"
        edges.write_text("0 1\n")
        attrs = tmp_path / "attrs.csv"
        attrs.write_text("1.0,oops\n2.0,3.0\n")
        with pytest.raises(GraphParseError, match="malformed"):
            load_graph(edges, attrs)


class TestSaveLoadRoundTrip:
    def test_round_trip_preserves_structure_and_attributes(self, tmp_path):
        g = Graph(RING4, np.arange(8.0).reshape(4, 2), labels=(2, 4, 6, 8))
        edges = tmp_path / "g.txt"
        attrs = tmp_path / "g.csv"
        save_graph(g, edges, attrs)
        loaded = load_graph(edges, attrs)
        assert loaded.labels == g.labels
        np.testing.assert_array_equal(loaded.adjacency, g.adjacency)
        np.testing.assert_allclose(loaded.attributes, g.attributes)


class TestAlignment:
    def test_identity(self):
        a = Alignment.identity(3)
        assert a.pairs == ((0, 0), (1, 1), (2, 2))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            Alignment(((0, 5),), 2, 2)

    def test_rejects_repeats(self):
        with pytest.raises(ValueError, match="repeats"):
            Alignment(((0, 0), (0, 1)), 2, 2)

    def test_load_alignment_maps_original_ids(self, tmp_path):
        edges = tmp_path / "e.txt"
        edges.write_text("5 7\n")
        g = load_graph(edges)
        p = tmp_path / "align.tsv"
        p.write_text("# truth\n5\t7\n7\t5\n")
        a = load_alignment(p, g, g)
        assert a.pairs == ((0, 1), (1, 0))

    def test_load_alignment_unknown_id(self, tmp_path):
        edges = tmp_path / "e.txt"
        edges.write_text("0 1\n")
        g = load_graph(edges)
        p = tmp_path / "align.tsv"
        p.write_text("0 9\n")
        with pytest.raises(GraphParseError, match="unknown target"):
            load_alignment(p, g, g)

    def test_load_alignment_empty(self, tmp_path):
        edges = tmp_path / "e.txt"
        edges.write_text("0 1\n")
        g = load_graph(edges)
        p = tmp_path / "align.tsv"
        p.write_text("# nothing\n")
        with pytest.raises(GraphParseError, match="no alignment pairs"):
            load_alignment(p, g, g)


class TestNoiseSpec:
    def test_rejects_out_of_range_level(self):
        with pytest.raises(ValueError, match="level_percent"):
            NoiseSpec(level_percent=150.0, seed=0)

    def test_rejects_negative_seed(self):
        with pytest.raises(ValueError, match="seed"):
            NoiseSpec(level_percent=10.0, seed=-1)


class TestPerturbEdges:
    def test_zero_level_is_identity(self):
        g = ring_graph()
        out = perturb_edges(g, NoiseSpec(0.0, 3))
        np.testing.assert_array_equal(out.adjacency, g.adjacency)

    def test_exact_rewire_count(self):
        g = ring_graph()  # 4 edges: 25% -> exactly 1 rewired, 50% -> 2
        for level, moved in ((25.0, 1), (50.0, 2)):
            out = perturb_edges(g, NoiseSpec(level, 0))
            changed = int(np.abs(out.adjacency - g.adjacency).sum()) // 2
            assert changed == 2 * moved  # each rewire removes one pair, adds one
            assert out.edge_count == g.edge_count

    def test_deterministic_per_seed(self):
        g = ring_graph()
        a = perturb_edges(g, NoiseSpec(50.0, 7))
        b = perturb_edges(g, NoiseSpec(50.0, 7))
        c = perturb_edges(g, NoiseSpec(50.0, 8))
        np.testing.assert_array_equal(a.adjacency, b.adjacency)
        assert not np.array_equal(a.adjacency, c.adjacency)

    def test_attributes_untouched(self):
        g = ring_graph()
        out = perturb_edges(g, NoiseSpec(50.0, 1))
        np.testing.assert_array_equal(out.attributes, g.attributes)

    def test_error_when_no_room(self):
        # complete graph: removing k edges leaves k slots, but they are the
        # removed ones; rewiring needs untouched holes and there are none
        n = 4
        adj = 1.0 - np.eye(n)
        g = Graph(adj, np.zeros((n, 1)))
        with pytest.raises(ValueError, match="non-edge slots"):
            perturb_edges(g, NoiseSpec(100.0, 0))

    @given(graphs(), st.integers(min_value=0, max_value=1000), st.floats(0.0, 100.0))
    @settings(max_examples=60, deadline=None)
    def test_perturbed_graph_stays_valid(self, g, seed, level):
        k = int(np.floor(level * g.edge_count / 100.0 + 1e-9))
        holes = g.node_count * (g.node_count - 1) // 2 - g.edge_count
        if k > holes:
            with pytest.raises(ValueError):
                perturb_edges(g, NoiseSpec(level, seed))
            return
        out = perturb_edges(g, NoiseSpec(level, seed))
        assert out.edge_count == g.edge_count
        np.testing.assert_array_equal(out.adjacency, out.adjacency.T)
        assert np.isin(out.adjacency, (0.0, 1.0)).all()
        assert not np.diagonal(out.adjacency).any()


class TestPermuteGraph:
    def test_identity_permutation(self):
        g = ring_graph()
        out, align = permute_graph(g, np.arange(4))
        np.testing.assert_array_equal(out.adjacency, g.adjacency)
        assert align.pairs == Alignment.identity(4).pairs

    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError, match="bijection"):
            permute_graph(ring_graph(), np.array([0, 0, 1, 2]))

    @given(graphs(), st.randoms(use_true_random=False))
    @settings(max_examples=40, deadline=None)
    def test_relabeling_moves_edges_and_attributes_together(self, g, rand):
        n = g.node_count
        perm = list(range(n))
        rand.shuffle(perm)
        perm = np.array(perm)
        out, align = permute_graph(g, perm)
        for i in range(n):
            np.testing.assert_array_equal(out.attributes[perm[i]], g.attributes[i])
            for j in range(n):
                assert out.adjacency[perm[i], perm[j]] == g.adjacency[i, j]
        assert align.pairs == tuple((i, int(perm[i])) for i in range(n))
