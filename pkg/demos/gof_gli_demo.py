"""Goodness-of-fit bands and graph-level index variability.

Fits a model, draws from the posterior predictive (one simulated graph
per Laplace coefficient draw) and compares four structural distributions
(degree, edgewise shared partners, geodesic distances, triad census)
against the observed means, plus four graph-level indices (transitivity,
sd of degree, sd of core number, sd of M-eccentricity).

Run:  python3 demos/gof_gli_demo.py
"""

import numpy as np

from ergmpool import (
    ChainConfig,
    CovariateSet,
    EdgesTerm,
    EstimatorConfig,
    GraphSet,
    GwespTerm,
    ModelSpec,
    NodematchTerm,
    build_bernoulli_prior,
    conjugate_map,
    gli_report,
    gof,
    sample_ergm,
)

n = 20
group = np.array(["F"] * 10 + ["M"] * 10, dtype=object)
cov = CovariateSet(n=n, nodal={"group": group})
model = ModelSpec([EdgesTerm(), NodematchTerm("group"), GwespTerm(0.25)])

batch = sample_ergm(
    model, [-1.8, 0.5, 0.4], cov=cov, n=n,
    cfg=ChainConfig(burn_in=150_000, thin=2000, n_draws=8, seed=21),
    record_graphs=True,
)
data = GraphSet(batch.graphs, cov)

prior = build_bernoulli_prior(model, n, mean_degree=5.0, n0=0.01, n_sims=1000, seed=2, cov=cov)
cfg = EstimatorConfig(
    chain=ChainConfig(burn_in=100_000, thin=1500, n_draws=512, seed=4),
    t_ratio_threshold=0.1,
)
post = conjugate_map(data, model, prior, cfg)
print("MAP:", post.map.round(3))

report = gof(post, data, n_pred_draws=200, seed=9,
             chain=ChainConfig(burn_in=50_000, thin=1500))
for name, band in report.families().items():
    inside = np.mean((band.observed >= band.quantiles[0]) & (band.observed <= band.quantiles[-1]))
    print(f"{name:<10} bins with observed mean inside the 95% band: {inside:.0%}")

print("\ndegree distribution (observed mean vs predictive quantiles):")
band = report.degree
print(f"{'deg':>4} {'obs':>6} {'2.5%':>6} {'50%':>6} {'97.5%':>7}")
for b in range(10):
    print(
        f"{b:>4} {band.observed[b]:>6.2f} {band.quantiles[0, b]:>6.2f} "
        f"{band.quantiles[2, b]:>6.2f} {band.quantiles[4, b]:>7.2f}"
    )

glis = gli_report(data, post, n_pred_draws=200, seed=10,
                  chain=ChainConfig(burn_in=50_000, thin=1500))
print("\ngraph-level indices (observed mean vs predictive mean +- sd):")
for k, name in enumerate(glis.names):
    obs = glis.observed[:, k].mean()
    pred = glis.predictive[:, k]
    print(f"{name:<20} observed {obs:>7.3f}   predictive {pred.mean():>7.3f} +- {pred.std():.3f}")
