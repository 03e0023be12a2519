"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from ergmpool import (
    CovariateSet,
    EdgecovTerm,
    EdgesTerm,
    Graph,
    GwespTerm,
    ModelSpec,
    NodecovTerm,
    NodematchTerm,
    NodemixTerm,
    OpenTwoPathsTerm,
    TrianglesTerm,
    TwoStarsTerm,
)


def random_graph(n: int, density: float, rng: np.random.Generator) -> Graph:
    g = Graph(n)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                g.set_edge(i, j, True)
    return g


def random_covariates(n: int, rng: np.random.Generator) -> CovariateSet:
    group = np.array([("A", "B", "C")[rng.integers(0, 3)] for _ in range(n)], dtype=object)
    weight = rng.normal(size=n)
    dist = np.abs(rng.normal(size=(n, n)))
    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    return CovariateSet(n=n, nodal={"group": group, "weight": weight}, dyadic={"dist": dist})


def nine_term_model() -> ModelSpec:
    """One term of every kind, exercising every code path at once."""
    return ModelSpec(
        [
            EdgesTerm(),
            GwespTerm(0.5),
            NodematchTerm("group"),
            NodemixTerm("group", "A", "B"),
            NodecovTerm("weight"),
            EdgecovTerm("dist"),
            TwoStarsTerm(),
            TrianglesTerm(),
            OpenTwoPathsTerm(),
        ]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
