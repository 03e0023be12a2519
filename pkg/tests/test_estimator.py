"""MLE machinery: MPLE closed forms and oracle fits, hull checks, both
fitting methods against the exact oracle, and the FitResult contracts."""

import numpy as np
import pytest
import scipy.special

from ergmpool import (
    ChainConfig,
    EdgesTerm,
    EstimatorConfig,
    Graph,
    GraphSet,
    HullInfeasibleError,
    ModelSpec,
    NonIdentifiableModelError,
    StatVector,
    TargetProblem,
    TrianglesTerm,
    TwoStarsTerm,
    fit_geyer_thompson,
    fit_stochastic_approximation,
    hull_check,
    mple,
    sample_bernoulli,
)
from ergmpool.oracle import enumerate_graphs, exact_mean, exact_mle
from ergmpool.sampler import sample_ergm

from conftest import random_graph

TWO_TERM = ModelSpec([EdgesTerm(), TrianglesTerm()])


def quick_cfg(seed, method="geyer-thompson", draws=1024, t=0.05):
    return EstimatorConfig(
        method=method,
        chain=ChainConfig(burn_in=3000, thin=60, n_draws=draws, seed=seed),
        t_ratio_threshold=t,
        max_outer=30,
    )


class TestMple:
    def test_edges_only_gives_logit_density(self, rng):
        g = random_graph(10, 0.35, rng)
        density = g.n_edges / 45
        problem = TargetProblem(
            ModelSpec([EdgesTerm()]),
            StatVector([g.n_edges], "observed"),
            reference_graph=g,
        )
        got = mple(problem)[0]
        np.testing.assert_allclose(got, scipy.special.logit(density), atol=1e-6)

    def test_recovers_bernoulli_logit(self):
        p = 0.25
        batch = sample_bernoulli(40, p, n_draws=1, seed=3, record_graphs=True,
                                 model=ModelSpec([EdgesTerm()]))
        g = batch.graphs[0]
        problem = TargetProblem(
            ModelSpec([EdgesTerm()]), StatVector([float(g.n_edges)]), reference_graph=g
        )
        got = mple(problem)[0]
        observed_density = g.n_edges / (40 * 39 / 2)
        np.testing.assert_allclose(got, scipy.special.logit(observed_density), atol=1e-8)

    def test_matches_grid_scan_oracle(self, rng):
        """Two-term MPLE against direct pseudo-likelihood maximization by
        nested grid refinement."""
        from ergmpool.terms import change_statistics

        g = random_graph(6, 0.5, rng)
        problem = TargetProblem(
            TWO_TERM,
            StatVector([float(g.n_edges), 0.0]),
            reference_graph=g,
        )
        got = mple(problem)

        x = []
        y = []
        for i in range(6):
            for j in range(i + 1, 6):
                x.append(change_statistics(TWO_TERM, g, None, (i, j)).values)
                y.append(1.0 if g.has_edge(i, j) else 0.0)
        x, y = np.array(x), np.array(y)

        def pll(beta):
            eta = x @ beta
            return float(y @ eta - np.logaddexp(0.0, eta).sum())

        center = np.zeros(2)
        width = 8.0
        for _ in range(12):
            grid = [
                center + np.array([a, b])
                for a in np.linspace(-width, width, 11)
                for b in np.linspace(-width, width, 11)
            ]
            center = max(grid, key=pll)
            width /= 4.0
        np.testing.assert_allclose(got, center, atol=1e-2)

    def test_separation_clips_and_warns(self):
        # a graph whose edges all sit inside one block separates a
        # membership covariate perfectly
        g = Graph(6, edges=[(0, 1), (0, 2), (1, 2)])
        from ergmpool import CovariateSet, NodematchTerm

        cov = CovariateSet(n=6, nodal={"blk": np.array(list("AAABBB"), dtype=object)})
        model = ModelSpec([EdgesTerm(), NodematchTerm("blk")])
        problem = TargetProblem(
            model, StatVector([3.0, 3.0]), covariates=cov, reference_graph=g
        )
        with pytest.warns(UserWarning, match="separation"):
            beta = mple(problem)
        assert np.all(np.isfinite(beta))
        assert np.max(np.abs(beta)) <= 4.0


class TestHullCheck:
    def test_mean_is_interior(self, rng):
        stats = rng.integers(0, 8, size=(400, 3)).astype(float)
        res = hull_check(stats, stats.mean(axis=0))
        assert res.status == "interior"
        assert res.epsilon > 0

    def test_componentwise_max_plus_one_exterior(self, rng):
        stats = rng.integers(0, 8, size=(400, 3)).astype(float)
        res = hull_check(stats, stats.max(axis=0) + 1.0)
        assert res.status == "exterior"

    def test_vertex_of_crafted_hull_is_boundary(self):
        # 2-d batch whose hull is a triangle; a vertex is on the boundary
        stats = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [1.0, 1.0]])
        res = hull_check(stats, [0.0, 0.0])
        assert res.status == "boundary"

    def test_degenerate_batch_flagged(self):
        stats = np.column_stack([np.arange(10.0), np.arange(10.0) * 2.0])
        res = hull_check(stats, [4.5, 9.0])
        assert res.degenerate
        assert res.status in ("interior", "boundary")

    def test_margins_reported(self, rng):
        stats = rng.normal(size=(200, 2))
        res = hull_check(stats, [0.0, 0.0])
        np.testing.assert_allclose(
            res.margins,
            np.minimum(-stats.min(axis=0), stats.max(axis=0)),
            atol=1e-12,
        )


class TestFitAgainstOracle:
    @pytest.mark.parametrize("method", ["geyer-thompson", "stochastic-approximation"])
    def test_recovers_exact_mle(self, method):
        table = enumerate_graphs(TWO_TERM, 5)
        rng = np.random.default_rng(51)
        theta_star = rng.uniform(-0.8, 0.3, size=2)
        target = exact_mean(table, theta_star)
        exact = exact_mle(table, target)
        ref = Graph(5)
        ref.set_edge(0, 1, True)
        problem = TargetProblem(TWO_TERM, StatVector(target, "target"), reference_graph=ref)
        result = (
            fit_geyer_thompson(problem, quick_cfg(7, t=0.03))
            if method == "geyer-thompson"
            else fit_stochastic_approximation(problem, quick_cfg(8, method=method, t=0.03))
        )
        assert result.converged
        np.testing.assert_allclose(result.theta, exact, atol=0.05)

    def test_edges_only_closed_form(self):
        d = 0.3
        n = 7
        model = ModelSpec([EdgesTerm()])
        target = d * n * (n - 1) / 2
        ref = Graph(n)
        ref.set_edge(0, 1, True)
        problem = TargetProblem(model, StatVector([target]), reference_graph=ref)
        result = fit_geyer_thompson(problem, quick_cfg(3, t=0.03))
        np.testing.assert_allclose(result.theta[0], scipy.special.logit(d), atol=0.06)

    def test_sa_fixed_point(self):
        """If the target equals the expected statistics at theta0, the
        stochastic-approximation drift is ~0 and theta stays put."""
        table = enumerate_graphs(TWO_TERM, 5)
        theta0 = np.array([-0.6, 0.15])
        target = exact_mean(table, theta0)
        ref = Graph(5)
        ref.set_edge(0, 1, True)
        problem = TargetProblem(TWO_TERM, StatVector(target, "target"), reference_graph=ref)
        cfg = EstimatorConfig(
            method="stochastic-approximation",
            chain=ChainConfig(burn_in=4000, thin=60, n_draws=2048, seed=5),
            theta0=theta0,
            t_ratio_threshold=0.05,
        )
        result = fit_stochastic_approximation(problem, cfg)
        assert result.converged
        np.testing.assert_allclose(result.theta, theta0, atol=0.08)

    def test_moment_matching_at_solution(self):
        """Fresh chain at theta_hat reproduces the target within loose
        t-ratios (statistic-SD units)."""
        table = enumerate_graphs(TWO_TERM, 5)
        target = exact_mean(table, np.array([-0.4, 0.2]))
        ref = Graph(5)
        ref.set_edge(0, 1, True)
        problem = TargetProblem(TWO_TERM, StatVector(target, "target"), reference_graph=ref)
        result = fit_geyer_thompson(problem, quick_cfg(9, t=0.03))
        fresh = sample_ergm(
            TWO_TERM, result.theta, n=5,
            cfg=ChainConfig(burn_in=6000, thin=60, n_draws=4096, seed=123),
        )
        tr = (fresh.mean() - target) / fresh.stats.std(axis=0, ddof=1)
        assert np.max(np.abs(tr)) < 0.15

    def test_zero_count_target_raises_hull_error(self, rng):
        target = np.array([6.0, 0.0])  # zero triangles: smallest attainable value
        ref = random_graph(6, 0.4, rng)
        problem = TargetProblem(TWO_TERM, StatVector(target, "target"), reference_graph=ref)
        with pytest.raises(HullInfeasibleError) as err:
            fit_geyer_thompson(problem, quick_cfg(2))
        assert "triangles" in str(err.value)
        with pytest.raises(HullInfeasibleError):
            fit_stochastic_approximation(
                problem, quick_cfg(2, method="stochastic-approximation")
            )

    def test_nonconvergence_returns_partial_result(self, rng):
        ref = random_graph(5, 0.4, rng)
        table = enumerate_graphs(TWO_TERM, 5)
        target = exact_mean(table, np.array([-0.4, 0.2]))
        problem = TargetProblem(TWO_TERM, StatVector(target, "target"), reference_graph=ref)
        cfg = EstimatorConfig(
            chain=ChainConfig(burn_in=200, thin=5, n_draws=64, seed=1),
            t_ratio_threshold=1e-5,  # unreachable
            max_outer=2,
        )
        with pytest.warns(UserWarning, match="did not converge"):
            result = fit_geyer_thompson(problem, cfg)
        assert not result.converged
        assert np.all(np.isfinite(result.theta))


class TestFitResultContracts:
    def test_covariance_weight_identity(self, rng):
        table = enumerate_graphs(TWO_TERM, 5)
        target = exact_mean(table, np.array([-0.5, 0.1]))
        ref = random_graph(5, 0.3, rng)
        problem = TargetProblem(TWO_TERM, StatVector(target, "target"), reference_graph=ref)
        result = fit_geyer_thompson(problem, quick_cfg(31))
        for w in (1.0, 7.0, 66.1):
            scaled = result.rescaled(w)
            ident = scaled.covariance @ (w * scaled.fisher_info)
            np.testing.assert_allclose(ident, np.eye(2), atol=1e-8)

    def test_wald_ci_width_scales_with_weight(self, rng):
        table = enumerate_graphs(TWO_TERM, 5)
        target = exact_mean(table, np.array([-0.5, 0.1]))
        ref = random_graph(5, 0.3, rng)
        problem = TargetProblem(TWO_TERM, StatVector(target, "target"), reference_graph=ref)
        result = fit_geyer_thompson(problem, quick_cfg(32))
        w1 = result.rescaled(1.0)
        w4 = result.rescaled(4.0)
        np.testing.assert_allclose(
            (w1.wald_ci[:, 1] - w1.wald_ci[:, 0]) / (w4.wald_ci[:, 1] - w4.wald_ci[:, 0]),
            2.0,
            rtol=1e-9,
        )

    def test_collinear_statistics_rejected(self, rng):
        """A nodematch on a one-level covariate duplicates the edge count;
        the identifiability guard must fail loudly."""
        from ergmpool import CovariateSet, NodematchTerm

        cov = CovariateSet(n=6, nodal={"one": np.array(["X"] * 6, dtype=object)})
        model = ModelSpec([EdgesTerm(), NodematchTerm("one")])
        ref = random_graph(6, 0.4, rng)
        problem = TargetProblem(
            model, StatVector([6.0, 6.0]), covariates=cov, reference_graph=ref
        )
        with pytest.raises(NonIdentifiableModelError):
            fit_geyer_thompson(problem, quick_cfg(4))

    def test_hotelling_gate_respected(self):
        """With the Hotelling criterion enabled the fit still converges on
        an easy problem."""
        model = ModelSpec([EdgesTerm()])
        n = 6
        target = 0.4 * n * (n - 1) / 2
        ref = Graph(n)
        ref.set_edge(0, 1, True)
        problem = TargetProblem(model, StatVector([target]), reference_graph=ref)
        cfg = EstimatorConfig(
            chain=ChainConfig(burn_in=3000, thin=50, n_draws=1024, seed=6),
            t_ratio_threshold=0.08,
            hotelling_pvalue=0.5,
            max_outer=40,
        )
        result = fit_geyer_thompson(problem, cfg)
        assert result.converged
