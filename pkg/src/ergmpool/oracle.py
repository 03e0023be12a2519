"""Brute-force ground truth on tiny graphs.

Enumerates every admissible graph under the support constraint by
Gray-code dyad flips (each successive graph differs by one dyad, so the
statistic table costs one change-statistic evaluation per graph), and
derives the exact log-partition function, exact moments, and the exact
MLE/MAP from the table.  Capped at 22 free dyads (~4 million graphs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special

from .errors import EnumerationCapError, HullInfeasibleError
from .estimator import hull_check
from .graphs import CovariateSet, Graph, SupportConstraint
from .terms import ModelSpec, as_values, change_statistics, statistics

__all__ = [
    "EnumerationTable",
    "enumerate_graphs",
    "exact_psi",
    "exact_probabilities",
    "exact_mean",
    "exact_covariance",
    "exact_mle",
]

MAX_FREE_DYADS = 22


@dataclass
class EnumerationTable:
    """Statistic vectors for every admissible graph, in Gray-code order.

    Row t corresponds to the graph whose free-dyad bitmask is
    gray(t) = t ^ (t >> 1); index_of() inverts the code so chain states
    can be matched to rows in O(#free dyads).
    """

    model: ModelSpec
    n: int
    stats: np.ndarray
    free_pairs: np.ndarray
    constraint: SupportConstraint
    covariates: CovariateSet | None = None

    @property
    def count(self) -> int:
        return self.stats.shape[0]

    def index_of(self, graph: Graph) -> int:
        """Table row of a graph (must satisfy the constraint)."""
        mask = 0
        for b, (i, j) in enumerate(self.free_pairs):
            if graph.has_edge(int(i), int(j)):
                mask |= 1 << b
        # inverse of the binary-reflected Gray code
        t = mask
        shift = mask >> 1
        while shift:
            t ^= shift
            shift >>= 1
        return t

    def graph_at(self, index: int) -> Graph:
        mask = index ^ (index >> 1)
        g = Graph(self.n)
        self.constraint.apply_to(g)
        for b, (i, j) in enumerate(self.free_pairs):
            if (mask >> b) & 1:
                g.set_edge(int(i), int(j), True)
        return g


def enumerate_graphs(
    model: ModelSpec,
    n: int,
    cov: CovariateSet | None = None,
    constraint: SupportConstraint | None = None,
    max_free_dyads: int = MAX_FREE_DYADS,
) -> EnumerationTable:
    """Build the exact statistic table for all admissible graphs."""
    constraint = constraint if constraint is not None else SupportConstraint.none()
    model.validate(cov)
    free = constraint.free_dyads(n)
    f = len(free)
    if f > max_free_dyads:
        raise EnumerationCapError(
            f"{f} free dyads exceeds the enumeration cap of {max_free_dyads} "
            f"({2**f:,} graphs)"
        )
    count = 1 << f
    p = model.p
    table = np.empty((count, p))

    g = Graph(n)
    constraint.apply_to(g)
    current = statistics(model, g, cov).values.copy()
    table[0] = current
    for t in range(1, count):
        # Gray code: bit flipped at step t is the number of trailing zeros of t
        bit = (t & -t).bit_length() - 1
        i, j = int(free[bit, 0]), int(free[bit, 1])
        delta = change_statistics(model, g, cov, (i, j)).values
        if g.has_edge(i, j):
            current = current - delta
        else:
            current = current + delta
        g.toggle(i, j)
        table[t] = current
    return EnumerationTable(
        model=model, n=n, stats=table, free_pairs=free, constraint=constraint, covariates=cov
    )


def exact_psi(table: EnumerationTable, theta) -> float:
    """Log-partition function: log sum over admissible graphs of
    exp(theta . g(y)), stabilized by max-shift."""
    theta = np.asarray(theta, dtype=float)
    return float(scipy.special.logsumexp(table.stats @ theta))


def exact_probabilities(table: EnumerationTable, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    logits = table.stats @ theta
    logits -= scipy.special.logsumexp(logits)
    return np.exp(logits)


def exact_mean(table: EnumerationTable, theta) -> np.ndarray:
    """E_theta g(Y), exactly."""
    return exact_probabilities(table, theta) @ table.stats


def exact_covariance(table: EnumerationTable, theta) -> np.ndarray:
    """Var_theta g(Y) (the single-graph Fisher information), exactly."""
    w = exact_probabilities(table, theta)
    mu = w @ table.stats
    centered = table.stats - mu
    cov = (centered * w[:, None]).T @ centered
    return (cov + cov.T) / 2.0


def exact_mle(
    table: EnumerationTable,
    target,
    tol: float = 1e-10,
    max_iter: int = 200,
    hull_tolerance: float = 1e-9,
    theta0=None,
) -> np.ndarray:
    """Exact maximizer of theta . target - psi(theta) by Newton's method
    with exact gradient (target - E g) and Hessian (-Var g).

    Raises HullInfeasibleError when the target is not strictly interior
    to the exact convex hull of achievable statistics.
    """
    target = as_values(target)
    hc = hull_check(table.stats, target, hull_tolerance)
    if not hc.interior:
        bad = [table.model.stat_names()[k] for k in np.flatnonzero(hc.margins <= hull_tolerance)]
        raise HullInfeasibleError(
            f"target is {hc.status} for the exact achievable hull "
            f"(offending coordinate(s): {', '.join(bad) or 'joint'})",
            coordinates=bad,
            margins=hc.margins,
        )
    p = table.model.p
    theta = np.zeros(p) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    scale = np.maximum(np.abs(target), 1.0)

    def objective(th):
        return float(th @ target - exact_psi(table, th))

    obj = objective(theta)
    for _ in range(max_iter):
        mu = exact_mean(table, theta)
        grad = target - mu
        if np.max(np.abs(grad) / scale) < tol:
            break
        hess = exact_covariance(table, theta)
        ridge = 1e-14 * max(np.trace(hess) / p, 1.0)
        step = scipy.linalg.solve(hess + ridge * np.eye(p), grad, assume_a="pos")
        # backtracking keeps the concave objective increasing
        scale_step = 1.0
        for _ in range(60):
            cand = theta + scale_step * step
            cand_obj = objective(cand)
            if cand_obj >= obj - 1e-15:
                theta, obj = cand, cand_obj
                break
            scale_step *= 0.5
        else:
            break
    return theta
