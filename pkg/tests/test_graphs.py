"""Graph representation, toggles, Hamming distance, and file round-trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergmpool import (
    ConstrainedDyadError,
    ConstraintViolationError,
    DimensionMismatchError,
    Graph,
    GraphFormatError,
    GraphSet,
    CovariateSet,
    SizeMismatchError,
    SupportConstraint,
    hamming_distance,
    read_graph_set,
    toggle_dyad,
    write_graph_set,
)
from ergmpool.graphs import dyad_index, dyad_pairs

from conftest import random_graph


class TestToggle:
    def test_single_flip_from_empty(self):
        g = Graph(4)
        toggle_dyad(g, 0, 1)
        assert g.n_edges == 1 and g.has_edge(0, 1)

    def test_involution_restores_graph(self):
        g = Graph(4)
        g.set_edge(1, 2, True)
        before = g.copy()
        toggle_dyad(g, 0, 3)
        toggle_dyad(g, 0, 3)
        assert g == before

    def test_fixed_dyad_rejected(self):
        g = Graph(4, edges=[(i, j) for i in range(4) for j in range(i + 1, 4)])
        cons = SupportConstraint(fixed_present=[(0, 1)])
        with pytest.raises(ConstrainedDyadError):
            toggle_dyad(g, 0, 1, cons)

    def test_out_of_range_rejected(self):
        g = Graph(4)
        with pytest.raises(IndexError):
            toggle_dyad(g, 0, 4)
        with pytest.raises(IndexError):
            toggle_dyad(g, 2, 2)

    @given(st.integers(2, 10), st.data())
    @settings(max_examples=50, deadline=None)
    def test_involution_property(self, n, data):
        seed = data.draw(st.integers(0, 2**32 - 1))
        rng = np.random.default_rng(seed)
        g = random_graph(n, 0.4, rng)
        i = data.draw(st.integers(0, n - 2))
        j = data.draw(st.integers(i + 1, n - 1))
        before = g.copy()
        toggle_dyad(toggle_dyad(g, i, j), i, j)
        assert g == before

    def test_adjacency_agrees_with_dyads_after_toggles(self, rng):
        g = Graph(8)
        pairs = dyad_pairs(8)
        for _ in range(200):
            i, j = pairs[rng.integers(0, len(pairs))]
            g.toggle(int(i), int(j))
        for i, j in pairs:
            assert g.has_edge(int(i), int(j)) == (int(j) in g.adjacency_set(int(i)))
        assert all(
            (int(j) in g.adjacency_set(int(i))) == (int(i) in g.adjacency_set(int(j)))
            for i, j in pairs
        )


class TestDyadIndex:
    def test_bijection(self):
        n = 9
        seen = set()
        for i in range(n):
            for j in range(i + 1, n):
                idx = dyad_index(n, i, j)
                assert idx not in seen
                seen.add(idx)
        assert seen == set(range(n * (n - 1) // 2))

    def test_symmetric_arguments(self):
        assert dyad_index(6, 4, 1) == dyad_index(6, 1, 4)


class TestHamming:
    def test_identical_graphs(self, rng):
        g = random_graph(6, 0.5, rng)
        assert hamming_distance(g, g.copy()) == 0

    def test_empty_vs_complete(self):
        empty = Graph(4)
        complete = Graph(4, edges=[(i, j) for i in range(4) for j in range(i + 1, 4)])
        assert hamming_distance(empty, complete) == 6

    def test_matches_double_loop_oracle(self, rng):
        a = random_graph(6, 0.5, rng)
        b = random_graph(6, 0.5, rng)
        brute = sum(
            1
            for i in range(6)
            for j in range(i + 1, 6)
            if a.has_edge(i, j) != b.has_edge(i, j)
        )
        assert hamming_distance(a, b) == brute

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatchError):
            hamming_distance(Graph(4), Graph(5))

    @given(st.integers(2, 10), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_metric_axioms(self, n, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (random_graph(n, 0.5, rng) for _ in range(3))
        assert hamming_distance(a, b) == hamming_distance(b, a)
        assert (hamming_distance(a, b) == 0) == (a == b)
        assert hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c)


class TestConstraint:
    def test_overlapping_fixed_sets_rejected(self):
        with pytest.raises(ConstraintViolationError):
            SupportConstraint(fixed_present=[(0, 1)], fixed_absent=[(1, 0)])

    def test_free_dyads_excludes_fixed(self):
        cons = SupportConstraint(fixed_present=[(0, 1)], fixed_absent=[(2, 3)])
        free = cons.free_dyads(4)
        assert len(free) == 4
        listed = {tuple(p) for p in free}
        assert (0, 1) not in listed and (2, 3) not in listed

    def test_graph_set_checks_constraint(self):
        cons = SupportConstraint(fixed_present=[(0, 1)])
        with pytest.raises(ConstraintViolationError):
            GraphSet([Graph(4)], constraint=cons)


class TestIO:
    def test_round_trip(self, tmp_path, rng):
        graphs = [random_graph(7, 0.4, rng) for _ in range(3)]
        for g in graphs:
            g.set_edge(0, 1, True)
        cov = CovariateSet(
            n=7,
            nodal={"grp": np.array(list("ABABABA"), dtype=object), "w": np.arange(7.0)},
            dyadic={"d": np.ones((7, 7)) - np.eye(7)},
        )
        cons = SupportConstraint(fixed_present=[(0, 1)])
        gs = GraphSet(graphs, cov, cons)
        write_graph_set(tmp_path / "set", gs)
        back = read_graph_set(tmp_path / "set")
        assert back.m == 3 and back.n == 7
        for g0, g1 in zip(gs.graphs, back.graphs):
            assert np.array_equal(g0.dyad_vector(), g1.dyad_vector())
        assert list(back.covariates.nodal["grp"]) == list(cov.nodal["grp"])
        np.testing.assert_allclose(back.covariates.nodal["w"], cov.nodal["w"])
        np.testing.assert_allclose(back.covariates.dyadic["d"], cov.dyadic["d"])
        assert back.constraint == cons

    def test_empty_edge_list(self, tmp_path):
        (tmp_path / "g0.edgelist").write_text("n=5\n")
        gs = read_graph_set(tmp_path)
        assert gs.m == 1 and gs.n == 5 and gs.graphs[0].n_edges == 0

    def test_vertex_out_of_range(self, tmp_path):
        (tmp_path / "g0.edgelist").write_text("n=5\n0\t5\n")
        with pytest.raises(GraphFormatError):
            read_graph_set(tmp_path)

    def test_missing_header(self, tmp_path):
        (tmp_path / "g0.edgelist").write_text("0\t1\n")
        with pytest.raises(GraphFormatError):
            read_graph_set(tmp_path)

    def test_comments_and_tabs(self, tmp_path):
        (tmp_path / "g0.edgelist").write_text("# a comment\nn=4\n0\t1\n2\t3  # trailing\n")
        gs = read_graph_set(tmp_path)
        assert gs.graphs[0].n_edges == 2

    def test_covariate_length_mismatch(self, tmp_path):
        (tmp_path / "g0.edgelist").write_text("n=4\n")
        (tmp_path / "nodal.csv").write_text("x\n1\n2\n3\n")
        with pytest.raises(DimensionMismatchError):
            read_graph_set(tmp_path)

    def test_constraint_violation_on_ingest(self, tmp_path):
        (tmp_path / "g0.edgelist").write_text("n=4\n")
        (tmp_path / "constraints.txt").write_text("+ 0 1\n")
        with pytest.raises(ConstraintViolationError):
            read_graph_set(tmp_path)

    def test_ten_graphs_ninety_vertices(self, tmp_path, rng):
        # sanity check of a graph-set shaped like a multi-subject study
        for k in range(10):
            lines = ["n=90"]
            for _ in range(40):
                i, j = sorted(rng.choice(90, size=2, replace=False))
                lines.append(f"{i}\t{j}")
            (tmp_path / f"s{k:02d}.edgelist").write_text("\n".join(lines) + "\n")
        gs = read_graph_set(tmp_path)
        assert gs.m == 10 and gs.n == 90
