"""Goodness-of-fit, graph-level indices, and simulation-study harnesses.

GOF compares observed mean distributions (degree, edgewise shared
partners, geodesic distance, triad census) against predictive quantile
bands: simulation at the point estimate for an MLE fit, or one graph per
posterior coefficient draw for a Laplace posterior.  The study runners
replicate the coverage and prior-weight experiments at configurable
scale.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph
import scipy.stats

from .errors import EmptySetError
from .estimator import EstimatorConfig, FitResult, Z_95
from .graphs import CovariateSet, Graph, GraphSet, SupportConstraint
from .pooled import PosteriorResult, PriorSpec, conjugate_map, pooled_mle, posterior_sample
from .sampler import Chain, ChainConfig, derive_seed, sample_ergm
from .terms import ModelSpec

__all__ = [
    "GofReport",
    "GliRow",
    "GliReport",
    "CoverageStudyConfig",
    "CoverageCell",
    "DeltaSweepConfig",
    "DeltaSweepCell",
    "degree_histogram",
    "esp_histogram",
    "geodesic_histogram",
    "triad_census",
    "core_numbers",
    "m_eccentricity",
    "transitivity",
    "graph_level_indices",
    "gli_report",
    "gof",
    "run_coverage_study",
    "run_delta_sweep",
]

GOF_QUANTILES = (2.5, 25.0, 50.0, 75.0, 97.5)


# ---------------------------------------------------------------------------
# Per-graph structure summaries
# ---------------------------------------------------------------------------


def degree_histogram(graph: Graph) -> np.ndarray:
    """Counts of vertices with degree k, k = 0..n-1."""
    hist = np.zeros(graph.n, dtype=float)
    for d in graph.degrees():
        hist[d] += 1
    return hist


def esp_histogram(graph: Graph) -> np.ndarray:
    """Counts of edges whose endpoints share exactly k partners,
    k = 0..n-2."""
    hist = np.zeros(max(graph.n - 1, 1), dtype=float)
    for i, j in graph.edge_list():
        sp = len(graph.adjacency_set(i) & graph.adjacency_set(j))
        hist[sp] += 1
    return hist


def _pairwise_distances(graph: Graph) -> np.ndarray:
    adj = scipy.sparse.csr_matrix(graph.to_matrix())
    return scipy.sparse.csgraph.shortest_path(adj, method="D", unweighted=True, directed=False)


def geodesic_histogram(graph: Graph) -> np.ndarray:
    """Counts of unordered vertex pairs at geodesic distance d for
    d = 1..n-1, with unreachable pairs in the final slot."""
    dist = _pairwise_distances(graph)
    n = graph.n
    iu = np.triu_indices(n, k=1)
    d = dist[iu]
    hist = np.zeros(n, dtype=float)
    finite = np.isfinite(d)
    for v in d[finite].astype(int):
        hist[v - 1] += 1
    hist[-1] = float((~finite).sum())
    return hist


def triad_census(graph: Graph) -> np.ndarray:
    """Undirected 4-class triad census: (empty, one-edge, two-path,
    triangle) counts over all vertex triples."""
    n = graph.n
    if n < 3:
        return np.zeros(4, dtype=float)
    e = graph.n_edges
    d = graph.degrees()
    twostars = float((d * (d - 1) // 2).sum())
    tri = 0
    for i, j in graph.edge_list():
        tri += len(graph.adjacency_set(i) & graph.adjacency_set(j))
    tri = tri // 3
    paths = twostars - 3.0 * tri
    one_edge = e * (n - 2) - 2.0 * paths - 3.0 * tri
    total = n * (n - 1) * (n - 2) / 6.0
    empty = total - one_edge - paths - tri
    return np.array([empty, one_edge, paths, float(tri)], dtype=float)


def transitivity(graph: Graph) -> float:
    """3 * triangles / 2-stars, or 0 when the graph has no 2-stars."""
    d = graph.degrees()
    twostars = float((d * (d - 1) // 2).sum())
    if twostars == 0:
        return 0.0
    tri = triad_census(graph)[3]
    return 3.0 * tri / twostars


def core_numbers(graph: Graph) -> np.ndarray:
    """k-core numbers by repeated minimum-degree peeling."""
    n = graph.n
    deg = graph.degrees().astype(int)
    alive = np.ones(n, dtype=bool)
    core = np.zeros(n, dtype=int)
    k = 0
    for _ in range(n):
        candidates = np.flatnonzero(alive)
        v = candidates[np.argmin(deg[candidates])]
        k = max(k, int(deg[v]))
        core[v] = k
        alive[v] = False
        for u in graph.adjacency_set(int(v)):
            if alive[u]:
                deg[u] -= 1
    return core


def m_eccentricity(graph: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex mean geodesic distance to the *reachable* others.

    Returns (values, reachable_counts); a vertex that reaches nobody
    gets 0.  Unreachable pairs are excluded from the mean rather than
    imputed, and the reachable counts are reported alongside so that
    disconnected graphs stay interpretable.
    """
    dist = _pairwise_distances(graph)
    np.fill_diagonal(dist, np.inf)
    finite = np.isfinite(dist)
    counts = finite.sum(axis=1)
    sums = np.where(finite, dist, 0.0).sum(axis=1)
    values = np.divide(sums, counts, out=np.zeros(graph.n), where=counts > 0)
    return values, counts


@dataclass
class GliRow:
    """Graph-level indices for one graph."""

    transitivity: float
    sd_degree: float
    sd_core: float
    sd_m_eccentricity: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.transitivity, self.sd_degree, self.sd_core, self.sd_m_eccentricity]
        )

    @staticmethod
    def names() -> list[str]:
        return ["transitivity", "sd_degree", "sd_core", "sd_m_eccentricity"]


def graph_level_indices(graph: Graph) -> GliRow:
    """Transitivity, sd of degree, sd of core number, sd of
    M-eccentricity (population standard deviations)."""
    mecc, _ = m_eccentricity(graph)
    return GliRow(
        transitivity=transitivity(graph),
        sd_degree=float(np.std(graph.degrees())),
        sd_core=float(np.std(core_numbers(graph))),
        sd_m_eccentricity=float(np.std(mecc)),
    )


@dataclass
class GliReport:
    """Observed per-graph GLIs and, optionally, predictive draws."""

    observed: np.ndarray  # (m, 4)
    predictive: np.ndarray | None = None  # (n_draws, 4)
    names: tuple = tuple(GliRow.names())


def gli_report(
    graph_set: GraphSet,
    result: FitResult | PosteriorResult | None = None,
    n_pred_draws: int = 200,
    seed: int = 0,
    chain: ChainConfig | None = None,
) -> GliReport:
    observed = np.array([graph_level_indices(g).as_array() for g in graph_set.graphs])
    predictive = None
    if result is not None:
        graphs = _predictive_graphs(result, graph_set, n_pred_draws, seed, chain)
        predictive = np.array([graph_level_indices(g).as_array() for g in graphs])
    return GliReport(observed=observed, predictive=predictive)


# ---------------------------------------------------------------------------
# Goodness of fit
# ---------------------------------------------------------------------------


@dataclass
class GofBand:
    """Quantile bands (rows = GOF_QUANTILES) plus observed means and the
    per-graph observed curves behind them."""

    bins: np.ndarray
    quantiles: np.ndarray  # (5, n_bins)
    observed: np.ndarray  # (n_bins,)
    observed_per_graph: np.ndarray | None = None  # (m, n_bins)


@dataclass
class GofReport:
    degree: GofBand
    esp: GofBand
    geodesic: GofBand
    triad: GofBand
    n_pred_draws: int

    def families(self) -> dict:
        return {
            "degree": self.degree,
            "esp": self.esp,
            "geodesic": self.geodesic,
            "triad": self.triad,
        }


def _predictive_graphs(
    result: FitResult | PosteriorResult,
    graph_set: GraphSet,
    n_draws: int,
    seed: int,
    chain_cfg: ChainConfig | None,
) -> list[Graph]:
    """Simulated graphs for GOF: at theta_hat for an MLE fit, or one
    graph per posterior coefficient draw for a Laplace posterior (the
    chain re-targets each drawn theta between retained snapshots)."""
    n = graph_set.n
    cfg = chain_cfg or ChainConfig()
    burn, thin = cfg.resolved(n)
    if isinstance(result, PosteriorResult):
        thetas = posterior_sample(result, n_draws, seed=derive_seed(seed, 11))
        start = graph_set.constraint.apply_to(graph_set.graphs[0].copy())
        chain = Chain(
            result.model, graph_set.covariates, graph_set.constraint, start,
            seed=derive_seed(seed, 12), theta=result.map,
        )
        chain.advance(burn)
        graphs = []
        for theta in thetas:
            chain.set_theta(theta)
            _, dyads = chain.sample(1, thin, record_graphs=True)
            graphs.append(Graph.from_dyad_vector(n, dyads[0]))
        return graphs
    batch = sample_ergm(
        result.model,
        result.theta,
        cov=graph_set.covariates,
        constraint=graph_set.constraint,
        cfg=replace(cfg, n_draws=n_draws, seed=derive_seed(seed, 13), start="observed"),
        reference_graph=graph_set.graphs[0],
        record_graphs=True,
    )
    return batch.graphs


def _band(per_draw: np.ndarray, observed: np.ndarray) -> GofBand:
    quantiles = np.percentile(per_draw, GOF_QUANTILES, axis=0)
    return GofBand(bins=np.arange(per_draw.shape[1]), quantiles=quantiles, observed=observed)


def gof(
    result: FitResult | PosteriorResult,
    graph_set: GraphSet,
    n_pred_draws: int = 200,
    seed: int = 0,
    chain: ChainConfig | None = None,
) -> GofReport:
    """Predictive quantile bands for degree, shared-partner, geodesic,
    and triad-census distributions, with observed means attached."""
    if isinstance(result, PosteriorResult) and not result.converged:
        warnings.warn("GOF on a non-converged fit", stacklevel=2)
    graphs = _predictive_graphs(result, graph_set, n_pred_draws, seed, chain)
    fams = {
        "degree": degree_histogram,
        "esp": esp_histogram,
        "geodesic": geodesic_histogram,
        "triad": triad_census,
    }
    sims = {name: np.array([fn(g) for g in graphs]) for name, fn in fams.items()}
    per_graph = {
        name: np.array([fn(g) for g in graph_set.graphs]) for name, fn in fams.items()
    }

    def band(name):
        b = _band(sims[name], per_graph[name].mean(axis=0))
        b.observed_per_graph = per_graph[name]
        return b

    return GofReport(
        degree=band("degree"),
        esp=band("esp"),
        geodesic=band("geodesic"),
        triad=band("triad"),
        n_pred_draws=n_pred_draws,
    )


# ---------------------------------------------------------------------------
# Simulation studies
# ---------------------------------------------------------------------------


@dataclass
class CoverageStudyConfig:
    """Frequentist replication study for the pooled MLE.

    For each m in m_grid, n_replicates datasets of m graphs are simulated
    at theta_star and refit; the cells report bias, the average reported
    SE, the empirical SD of the estimates, and Wald CI coverage.
    """

    theta_star: np.ndarray
    model: ModelSpec
    n: int
    m_grid: tuple = (1, 5, 20)
    n_replicates: int = 200
    nominal_level: float = 0.95
    covariates: CovariateSet | None = None
    constraint: SupportConstraint | None = None
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    sim_chain: ChainConfig | None = None
    seed: int = 0
    n_threads: int = 1

    def __post_init__(self):
        self.theta_star = np.asarray(self.theta_star, dtype=float)
        if self.n_replicates < 1:
            raise ValueError("n_replicates must be >= 1")
        if not 0 < self.nominal_level < 1:
            raise ValueError("nominal_level must be in (0, 1)")


@dataclass
class CoverageCell:
    m: int
    coord: int
    name: str
    mean_estimate: float
    bias: float
    mean_se: float
    empirical_sd: float
    coverage: float
    n_ok: int
    n_failed: int


def _simulate_dataset(cfg: CoverageStudyConfig, m: int, seed: int) -> GraphSet:
    chain = cfg.sim_chain or ChainConfig()
    batch = sample_ergm(
        cfg.model,
        cfg.theta_star,
        cov=cfg.covariates,
        constraint=cfg.constraint,
        cfg=replace(chain, n_draws=m, seed=seed),
        n=cfg.n,
        record_graphs=True,
    )
    return GraphSet(batch.graphs, cfg.covariates, cfg.constraint)


def _coverage_replicate(cfg: CoverageStudyConfig, m: int, rep: int):
    data = _simulate_dataset(cfg, m, derive_seed(cfg.seed, m, rep, 1))
    est_cfg = replace(
        cfg.estimator, chain=cfg.estimator.chain.with_seed(derive_seed(cfg.seed, m, rep, 2))
    )
    fit_result = pooled_mle(data, cfg.model, est_cfg)
    if not fit_result.converged:
        raise RuntimeError("replicate fit did not converge")
    z = float(scipy.stats.norm.ppf(0.5 + cfg.nominal_level / 2.0))
    half = z * fit_result.se
    covered = np.abs(fit_result.theta - cfg.theta_star) <= half
    return fit_result.theta, fit_result.se, covered


def run_coverage_study(cfg: CoverageStudyConfig) -> list[CoverageCell]:
    """Replicated pooled-MLE study; failures are excluded with a count."""
    names = cfg.model.stat_names()
    cells = []
    for m in cfg.m_grid:
        results = [None] * cfg.n_replicates

        def one(rep, m=m):
            try:
                return _coverage_replicate(cfg, m, rep)
            except Exception as exc:
                warnings.warn(f"replicate {rep} at m={m} failed: {exc}", stacklevel=2)
                return None

        if cfg.n_threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.n_threads) as pool:
                results = list(pool.map(one, range(cfg.n_replicates)))
        else:
            results = [one(rep) for rep in range(cfg.n_replicates)]

        ok = [r for r in results if r is not None]
        n_failed = cfg.n_replicates - len(ok)
        if not ok:
            raise RuntimeError(f"every replicate failed at m={m}")
        thetas = np.array([r[0] for r in ok])
        ses = np.array([r[1] for r in ok])
        covered = np.array([r[2] for r in ok])
        for k in range(cfg.model.p):
            cells.append(
                CoverageCell(
                    m=m,
                    coord=k,
                    name=names[k],
                    mean_estimate=float(thetas[:, k].mean()),
                    bias=float(thetas[:, k].mean() - cfg.theta_star[k]),
                    mean_se=float(ses[:, k].mean()),
                    empirical_sd=float(thetas[:, k].std(ddof=1)) if len(ok) > 1 else float("nan"),
                    coverage=float(covered[:, k].mean()),
                    n_ok=len(ok),
                    n_failed=n_failed,
                )
            )
    return cells


@dataclass
class DeltaSweepConfig:
    """Replicated MAP study across relative prior weights.

    The K datasets are simulated once and shared across every delta, so
    the estimate paths are paired; delta=0 reduces each fit to the MLE.
    """

    theta_star: np.ndarray
    model: ModelSpec
    n: int
    prior_tau_bar: np.ndarray
    delta_grid: tuple = (0.0, 0.01, 0.05, 0.2, 0.5, 0.9)
    m: int = 1
    n_replicates: int = 100
    nominal_level: float = 0.95
    covariates: CovariateSet | None = None
    constraint: SupportConstraint | None = None
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    sim_chain: ChainConfig | None = None
    seed: int = 0
    n_threads: int = 1

    def __post_init__(self):
        self.theta_star = np.asarray(self.theta_star, dtype=float)
        self.prior_tau_bar = np.asarray(self.prior_tau_bar, dtype=float)
        for d in self.delta_grid:
            if not 0 <= d < 1:
                raise ValueError(f"delta must be in [0, 1), got {d}")


@dataclass
class DeltaSweepCell:
    delta: float
    n0: float
    coord: int
    name: str
    mean_map: float
    bias: float
    coverage: float
    n_ok: int
    n_failed: int


def _n0_for_delta(delta: float, m: int) -> float:
    return 0.0 if delta == 0 else delta * m / (1.0 - delta)


def run_delta_sweep(cfg: DeltaSweepConfig) -> list[DeltaSweepCell]:
    names = cfg.model.stat_names()
    z = float(scipy.stats.norm.ppf(0.5 + cfg.nominal_level / 2.0))

    cov_cfg = CoverageStudyConfig(
        theta_star=cfg.theta_star,
        model=cfg.model,
        n=cfg.n,
        covariates=cfg.covariates,
        constraint=cfg.constraint,
        sim_chain=cfg.sim_chain,
        seed=cfg.seed,
    )
    datasets = [
        _simulate_dataset(cov_cfg, cfg.m, derive_seed(cfg.seed, cfg.m, rep, 1))
        for rep in range(cfg.n_replicates)
    ]

    def one(args):
        delta, rep = args
        n0 = _n0_for_delta(delta, cfg.m)
        prior = PriorSpec(cfg.prior_tau_bar, n0)
        est_cfg = replace(
            cfg.estimator,
            chain=cfg.estimator.chain.with_seed(derive_seed(cfg.seed, cfg.m, rep, 2)),
        )
        try:
            post = conjugate_map(datasets[rep], cfg.model, prior, est_cfg)
            if not post.converged:
                raise RuntimeError("MAP fit did not converge")
            half = z * post.sd
            covered = np.abs(post.map - cfg.theta_star) <= half
            return post.map, covered
        except Exception as exc:
            warnings.warn(f"delta={delta} replicate {rep} failed: {exc}", stacklevel=2)
            return None

    cells = []
    for delta in cfg.delta_grid:
        jobs = [(delta, rep) for rep in range(cfg.n_replicates)]
        if cfg.n_threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.n_threads) as pool:
                results = list(pool.map(one, jobs))
        else:
            results = [one(j) for j in jobs]
        ok = [r for r in results if r is not None]
        n_failed = cfg.n_replicates - len(ok)
        if not ok:
            raise RuntimeError(f"every replicate failed at delta={delta}")
        maps = np.array([r[0] for r in ok])
        covered = np.array([r[1] for r in ok])
        for k in range(cfg.model.p):
            cells.append(
                DeltaSweepCell(
                    delta=float(delta),
                    n0=_n0_for_delta(delta, cfg.m),
                    coord=k,
                    name=names[k],
                    mean_map=float(maps[:, k].mean()),
                    bias=float(maps[:, k].mean() - cfg.theta_star[k]),
                    coverage=float(covered[:, k].mean()),
                    n_ok=len(ok),
                    n_failed=n_failed,
                )
            )
    return cells
