"""Statistic terms: global formulas against brute-force subgraph
enumeration, change statistics against full recomputation, and the
structural identities the terms must satisfy."""

import itertools

import numpy as np
import pytest

from ergmpool import (
    CovariateSet,
    DuplicateTermError,
    EdgesTerm,
    Graph,
    GraphSet,
    GwespTerm,
    MissingCovariateError,
    ModelSpec,
    NodematchTerm,
    NodemixTerm,
    OpenTwoPathsTerm,
    TrianglesTerm,
    TwoStarsTerm,
    UnknownLevelError,
    change_statistics,
    parse_model_text,
    statistics,
    statistics_mean,
)
from ergmpool._kernel import KernelModel, change_stats_add

from conftest import nine_term_model, random_covariates, random_graph


def brute_force_stats(model, graph, cov):
    """Independent evaluation by direct enumeration over vertex pairs,
    triples, and edges (no reuse of the library's counting shortcuts)."""
    n = graph.n
    adj = graph.to_matrix().astype(int)
    values = []
    for term in model.terms:
        kind = term.kind
        if kind == "edges":
            v = sum(adj[i, j] for i in range(n) for j in range(i + 1, n))
        elif kind == "gwesp":
            v = 0.0
            for i in range(n):
                for j in range(i + 1, n):
                    if adj[i, j]:
                        k = sum(adj[i, l] and adj[j, l] for l in range(n))
                        if k > 0:
                            v += np.exp(term.decay) * (
                                1 - (1 - np.exp(-term.decay)) ** k
                            )
        elif kind == "nodematch":
            x = cov.nodal[term.covariate]
            v = sum(
                adj[i, j]
                for i in range(n)
                for j in range(i + 1, n)
                if x[i] == x[j]
            )
        elif kind == "nodemix":
            x = cov.nodal[term.covariate]
            want = {term.level_a, term.level_b}
            v = sum(
                adj[i, j]
                for i in range(n)
                for j in range(i + 1, n)
                if {str(x[i]), str(x[j])} == want
            )
        elif kind == "nodecov":
            x = cov.nodal[term.covariate]
            v = sum(
                adj[i, j] * (x[i] + x[j]) for i in range(n) for j in range(i + 1, n)
            )
        elif kind == "edgecov":
            x = cov.dyadic[term.covariate]
            v = sum(adj[i, j] * x[i, j] for i in range(n) for j in range(i + 1, n))
        elif kind == "twostars":
            v = sum(
                adj[i, k] * adj[j, k]
                for i, j, k in itertools.permutations(range(n), 3)
                if i < j
            )
        elif kind == "triangles":
            v = sum(
                adj[i, j] * adj[j, k] * adj[i, k]
                for i, j, k in itertools.combinations(range(n), 3)
            )
        elif kind == "opentwopaths":
            # induced 3-vertex paths: center k tied to both i and j, i-j absent
            v = sum(
                adj[i, k] * adj[j, k] * (1 - adj[i, j])
                for i, j, k in itertools.permutations(range(n), 3)
                if i < j
            )
        else:
            raise AssertionError(kind)
        values.append(float(v))
    return np.array(values)


class TestGlobalStatistics:
    def test_edges_complete_graph(self):
        n = 6
        g = Graph(n, edges=[(i, j) for i in range(n) for j in range(i + 1, n)])
        model = ModelSpec([EdgesTerm()])
        assert statistics(model, g).values[0] == n * (n - 1) / 2

    def test_gwesp_single_triangle_collapses_to_three(self):
        g = Graph(3, edges=[(0, 1), (0, 2), (1, 2)])
        for decay in (0.25, 0.5, 0.8, 2.0):
            model = ModelSpec([GwespTerm(decay)])
            np.testing.assert_allclose(statistics(model, g).values[0], 3.0, rtol=1e-12)

    def test_twostars_and_triangles_on_star(self):
        center_star = Graph(6, edges=[(0, k) for k in range(1, 6)])
        model = ModelSpec([TwoStarsTerm(), TrianglesTerm()])
        vals = statistics(model, center_star).values
        assert vals[0] == 10.0  # C(5,2)
        assert vals[1] == 0.0

    def test_nine_term_vector_matches_brute_force(self, rng):
        model = nine_term_model()
        for _ in range(5):
            n = 8
            cov = random_covariates(n, rng)
            model.validate(cov)
            g = random_graph(n, 0.45, rng)
            got = statistics(model, g, cov).values
            expected = brute_force_stats(model, g, cov)
            np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-12)


class TestChangeStatistics:
    def test_edges_change_is_one(self, rng):
        g = random_graph(6, 0.5, rng)
        model = ModelSpec([EdgesTerm()])
        assert change_statistics(model, g, None, (0, 1)).values[0] == 1.0

    def test_triangle_change_is_common_neighbors(self, rng):
        g = random_graph(8, 0.5, rng)
        model = ModelSpec([TrianglesTerm()])
        for i, j in [(0, 1), (2, 5), (3, 7)]:
            common = len(g.adjacency_set(i) & g.adjacency_set(j) - {i, j})
            assert change_statistics(model, g, None, (i, j)).values[0] == common

    def test_change_equals_recomputation_exhaustive(self, rng):
        """Primary property: delta g equals the difference of two full
        evaluations, for every term and every dyad (n <= 8)."""
        model = nine_term_model()
        for n in (4, 6, 8):
            cov = random_covariates(n, rng)
            g = random_graph(n, 0.5, rng)
            for i in range(n):
                for j in range(i + 1, n):
                    delta = change_statistics(model, g, cov, (i, j)).values
                    plus = g.copy()
                    plus.set_edge(i, j, True)
                    minus = g.copy()
                    minus.set_edge(i, j, False)
                    full = (
                        statistics(model, plus, cov).values
                        - statistics(model, minus, cov).values
                    )
                    np.testing.assert_allclose(delta, full, rtol=1e-10, atol=1e-10)

    def test_change_leaves_graph_untouched(self, rng):
        model = nine_term_model()
        cov = random_covariates(6, rng)
        g = random_graph(6, 0.5, rng)
        before = g.copy()
        change_statistics(model, g, cov, (0, 1))
        change_statistics(model, g, cov, (0, 2))
        assert g == before

    def test_kernel_change_stats_match_reference(self, rng):
        """The compiled sampler kernel mirrors terms.py; pin them together."""
        model = nine_term_model()
        for n in (5, 8):
            cov = random_covariates(n, rng)
            kernel = KernelModel(model, cov, n)
            g = random_graph(n, 0.5, rng)
            for i in range(n):
                for j in range(i + 1, n):
                    ours = change_statistics(model, g, cov, (i, j)).values
                    kern = change_stats_add(kernel, g, i, j)
                    np.testing.assert_allclose(kern, ours, rtol=1e-12, atol=1e-12)


class TestTermProperties:
    def test_permutation_equivariance(self, rng):
        homogeneous = ModelSpec(
            [EdgesTerm(), GwespTerm(0.5), TwoStarsTerm(), TrianglesTerm(), OpenTwoPathsTerm()]
        )
        n = 9
        g = random_graph(n, 0.4, rng)
        perm = rng.permutation(n)
        relabeled = Graph(n, edges=[(int(perm[i]), int(perm[j])) for i, j in g.edge_list()])
        np.testing.assert_allclose(
            statistics(homogeneous, g).values,
            statistics(homogeneous, relabeled).values,
            rtol=1e-12,
        )

    def test_covariate_terms_equivariant_under_joint_permutation(self, rng):
        model = nine_term_model()
        n = 8
        cov = random_covariates(n, rng)
        g = random_graph(n, 0.4, rng)
        perm = rng.permutation(n)
        inv = np.argsort(perm)
        relabeled = Graph(n, edges=[(int(perm[i]), int(perm[j])) for i, j in g.edge_list()])
        cov2 = CovariateSet(
            n=n,
            nodal={k: v[inv] for k, v in cov.nodal.items()},
            dyadic={k: v[np.ix_(inv, inv)] for k, v in cov.dyadic.items()},
        )
        np.testing.assert_allclose(
            statistics(model, g, cov).values,
            statistics(model, relabeled, cov2).values,
            rtol=1e-12,
        )

    def test_opentwopaths_identity(self, rng):
        model = ModelSpec([TwoStarsTerm(), TrianglesTerm(), OpenTwoPathsTerm()])
        for _ in range(10):
            g = random_graph(9, rng.uniform(0.1, 0.9), rng)
            s2, tri, otp = statistics(model, g).values
            assert otp == s2 - 3 * tri

    def test_gwesp_monotone_under_triangle_closing_edge(self, rng):
        model = ModelSpec([GwespTerm(0.5)])
        for _ in range(20):
            g = random_graph(8, 0.5, rng)
            candidates = [
                (i, j)
                for i in range(8)
                for j in range(i + 1, 8)
                if not g.has_edge(i, j) and g.adjacency_set(i) & g.adjacency_set(j)
            ]
            if not candidates:
                continue
            i, j = candidates[0]
            before = statistics(model, g).values[0]
            g.set_edge(i, j, True)
            after = statistics(model, g).values[0]
            assert after >= before - 1e-12


class TestModelSpec:
    def test_duplicate_terms_rejected(self):
        with pytest.raises(DuplicateTermError):
            ModelSpec([EdgesTerm(), EdgesTerm()])
        # same kind with different parameters is fine
        ModelSpec([GwespTerm(0.25), GwespTerm(0.5)])

    def test_missing_covariate(self, rng):
        g = random_graph(5, 0.5, rng)
        model = ModelSpec([NodematchTerm("nope")])
        with pytest.raises(MissingCovariateError):
            statistics(model, g, CovariateSet.empty(5))

    def test_unknown_nodemix_level(self, rng):
        cov = CovariateSet(n=5, nodal={"g": np.array(list("AABBB"), dtype=object)})
        model = ModelSpec([NodemixTerm("g", "A", "Z")])
        with pytest.raises(UnknownLevelError):
            model.validate(cov)

    def test_parse_model_text(self):
        model = parse_model_text(
            """
            # comment
            edges
            gwesp 0.5
            nodemix area Frontal Temporal
            edgecov logdist
            twostars
            """
        )
        assert model.stat_names() == [
            "edges",
            "gwesp(0.5)",
            "nodemix(area,Frontal,Temporal)",
            "edgecov(logdist)",
            "twostars",
        ]

    def test_parse_errors(self):
        with pytest.raises(ValueError):
            parse_model_text("frobnicate 3")
        with pytest.raises(ValueError):
            parse_model_text("gwesp")
        with pytest.raises(ValueError):
            parse_model_text("gwesp -0.5")

    def test_fingerprint_changes_with_terms(self):
        a = parse_model_text("edges\ngwesp 0.5\n")
        b = parse_model_text("edges\ngwesp 0.25\n")
        assert a.fingerprint() != b.fingerprint()
        assert a.fingerprint() == parse_model_text("edges\ngwesp 0.5\n").fingerprint()


class TestStatisticsMean:
    def test_identical_graphs(self, rng):
        g = random_graph(6, 0.5, rng)
        model = ModelSpec([EdgesTerm(), TrianglesTerm()])
        gs = GraphSet([g.copy() for _ in range(4)])
        np.testing.assert_allclose(
            statistics_mean(model, gs).values, statistics(model, g).values
        )

    def test_two_graph_average(self):
        # graphs with 10 and 20 edges average to an edges coordinate of 15
        model = ModelSpec([EdgesTerm()])

        def with_edges(count):
            g = Graph(7)
            placed = 0
            for i in range(7):
                for j in range(i + 1, 7):
                    if placed < count:
                        g.set_edge(i, j, True)
                        placed += 1
            assert g.n_edges == count
            return g

        gs = GraphSet([with_edges(10), with_edges(20)])
        np.testing.assert_allclose(statistics_mean(model, gs).values, [15.0])

    def test_accumulation_order_irrelevant(self, rng):
        """Mean matches a permuted-order summation oracle."""
        model = nine_term_model()
        cov = random_covariates(7, rng)
        graphs = [random_graph(7, 0.4, rng) for _ in range(10)]
        gs = GraphSet(graphs, cov)
        got = statistics_mean(model, gs).values
        per_graph = [statistics(model, g, cov).values for g in graphs]
        order = rng.permutation(10)
        total = np.zeros(model.p)
        for k in order:
            total += per_graph[k]
        np.testing.assert_allclose(got, total / 10.0, rtol=1e-12)
        assert statistics_mean(model, gs).label == "mean"
