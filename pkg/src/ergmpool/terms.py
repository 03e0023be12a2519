"""Sufficient-statistic terms: global values g(y) and single-dyad change
statistics for undirected binary graphs.

Implemented kinds (one statistic coordinate each):

* ``edges``           number of edges
* ``gwesp <decay>``   geometrically weighted edgewise shared partners,
  ``exp(d) * sum_k [1 - (1 - exp(-d))^k] * EP_k`` with EP_k the number of
  edges whose endpoints have exactly k common neighbors
* ``nodematch <cov>`` edges between vertices with equal covariate value
* ``nodemix <cov> <a> <b>``  edges whose endpoint values are {a, b}
* ``nodecov <cov>``   sum over edges of x_i + x_j
* ``edgecov <cov>``   sum over edges of the dyadic covariate x_ij
* ``twostars``        number of 2-star configurations, sum_v C(deg_v, 2)
* ``triangles``       number of triangles
* ``opentwopaths``    induced 3-vertex paths, equal to twostars - 3*triangles

Change statistics return ``g(y+ij) - g(y-ij)`` for a dyad, computed from
neighbor scans only.  This module is the readable reference path; the
sampler's compiled kernel mirrors the same formulas and is tested
against it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateTermError,
    EmptySetError,
    MissingCovariateError,
    UnknownLevelError,
)
from .graphs import CovariateSet, Graph, GraphSet

__all__ = [
    "Term",
    "EdgesTerm",
    "GwespTerm",
    "NodematchTerm",
    "NodemixTerm",
    "NodecovTerm",
    "EdgecovTerm",
    "TwoStarsTerm",
    "TrianglesTerm",
    "OpenTwoPathsTerm",
    "ModelSpec",
    "StatVector",
    "statistics",
    "change_statistics",
    "statistics_mean",
    "parse_model_text",
    "parse_model_file",
]


def _require_nodal(cov: CovariateSet | None, name: str):
    if cov is None or name not in cov.nodal:
        raise MissingCovariateError(f"nodal covariate '{name}' not found")
    return cov.nodal[name]


def _require_dyadic(cov: CovariateSet | None, name: str):
    if cov is None or name not in cov.dyadic:
        raise MissingCovariateError(f"dyadic covariate '{name}' not found")
    return cov.dyadic[name]


def level_str(value) -> str:
    """Canonical string form of a categorical level.

    Numeric values print via %g so that a model file's ``nodemix group 1 2``
    matches a float covariate holding 1.0 and 2.0.
    """
    if isinstance(value, (int, float, np.integer, np.floating)):
        return "%g" % float(value)
    return str(value)


class Term:
    """One statistic coordinate: a label, a global evaluator, and a local
    change evaluator (delta for adding dyad {i,j} to a graph where it is
    absent)."""

    kind = "?"

    def label(self) -> str:
        raise NotImplementedError

    def spec_line(self) -> str:
        """Line in the model-file grammar reproducing this term."""
        raise NotImplementedError

    def validate(self, cov: CovariateSet | None) -> None:
        """Check covariate references; raise Missing/UnknownLevel errors."""

    def lower_bound(self) -> float | None:
        """Smallest value the statistic can take on any graph, when cheap
        to state (0 for pure counting terms; None when covariate signs
        make it unbounded below)."""
        return 0.0

    def global_stat(self, graph: Graph, cov: CovariateSet | None) -> float:
        raise NotImplementedError

    def change_add(self, graph: Graph, cov: CovariateSet | None, i: int, j: int) -> float:
        """g(y + ij) - g(y - ij), assuming {i,j} currently absent."""
        raise NotImplementedError

    def key(self):
        return (self.kind,)

    def __eq__(self, other):
        return isinstance(other, Term) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return self.label()


class EdgesTerm(Term):
    kind = "edges"

    def label(self):
        return "edges"

    def spec_line(self):
        return "edges"

    def global_stat(self, graph, cov):
        return float(graph.n_edges)

    def change_add(self, graph, cov, i, j):
        return 1.0


class GwespTerm(Term):
    kind = "gwesp"

    def __init__(self, decay: float):
        decay = float(decay)
        if not decay > 0:
            raise ValueError(f"gwesp decay must be > 0, got {decay}")
        self.decay = decay

    def key(self):
        return (self.kind, self.decay)

    def label(self):
        return f"gwesp({self.decay:g})"

    def spec_line(self):
        return f"gwesp {self.decay:g}"

    def weight(self, k: int) -> float:
        """Contribution of one edge with k shared partners."""
        if k <= 0:
            return 0.0
        return float(np.exp(self.decay) * (1.0 - (1.0 - np.exp(-self.decay)) ** k))

    def weight_table(self, n: int) -> np.ndarray:
        """weight(k) for k = 0..n-2 (max shared partners of an edge)."""
        k = np.arange(n - 1, dtype=float)
        w = np.exp(self.decay) * (1.0 - (1.0 - np.exp(-self.decay)) ** k)
        w[0] = 0.0
        return w

    def global_stat(self, graph, cov):
        total = 0.0
        for i, j in graph.edge_list():
            sp = len(graph.adjacency_set(i) & graph.adjacency_set(j))
            total += self.weight(sp)
        return total

    def change_add(self, graph, cov, i, j):
        ni = graph.adjacency_set(i)
        nj = graph.adjacency_set(j)
        common = ni & nj
        delta = self.weight(len(common))
        for k in common:
            nk = graph.adjacency_set(k)
            sp_ik = len(ni & nk)
            sp_jk = len(nj & nk)
            delta += self.weight(sp_ik + 1) - self.weight(sp_ik)
            delta += self.weight(sp_jk + 1) - self.weight(sp_jk)
        return delta


class NodematchTerm(Term):
    kind = "nodematch"

    def __init__(self, covariate: str):
        self.covariate = str(covariate)

    def key(self):
        return (self.kind, self.covariate)

    def label(self):
        return f"nodematch({self.covariate})"

    def spec_line(self):
        return f"nodematch {self.covariate}"

    def validate(self, cov):
        _require_nodal(cov, self.covariate)

    def global_stat(self, graph, cov):
        x = _require_nodal(cov, self.covariate)
        return float(sum(1.0 for i, j in graph.edge_list() if x[i] == x[j]))

    def change_add(self, graph, cov, i, j):
        x = _require_nodal(cov, self.covariate)
        return 1.0 if x[i] == x[j] else 0.0


class NodemixTerm(Term):
    """Edges whose endpoint levels are exactly the unordered pair {a, b}."""

    kind = "nodemix"

    def __init__(self, covariate: str, level_a, level_b):
        self.covariate = str(covariate)
        # unordered pair, stored in a canonical order
        a, b = sorted([level_str(level_a), level_str(level_b)])
        self.level_a = a
        self.level_b = b

    def key(self):
        return (self.kind, self.covariate, self.level_a, self.level_b)

    def label(self):
        return f"nodemix({self.covariate},{self.level_a},{self.level_b})"

    def spec_line(self):
        return f"nodemix {self.covariate} {self.level_a} {self.level_b}"

    def validate(self, cov):
        x = _require_nodal(cov, self.covariate)
        observed = {level_str(v) for v in x}
        for lev in (self.level_a, self.level_b):
            if lev not in observed:
                raise UnknownLevelError(
                    f"nodemix level '{lev}' never observed in covariate "
                    f"'{self.covariate}' (levels: {sorted(observed)})"
                )

    def _match(self, xi, xj) -> bool:
        pair = tuple(sorted([level_str(xi), level_str(xj)]))
        return pair == (self.level_a, self.level_b)

    def global_stat(self, graph, cov):
        x = _require_nodal(cov, self.covariate)
        return float(sum(1.0 for i, j in graph.edge_list() if self._match(x[i], x[j])))

    def change_add(self, graph, cov, i, j):
        x = _require_nodal(cov, self.covariate)
        return 1.0 if self._match(x[i], x[j]) else 0.0


class NodecovTerm(Term):
    kind = "nodecov"

    def __init__(self, covariate: str):
        self.covariate = str(covariate)

    def key(self):
        return (self.kind, self.covariate)

    def label(self):
        return f"nodecov({self.covariate})"

    def spec_line(self):
        return f"nodecov {self.covariate}"

    def validate(self, cov):
        x = _require_nodal(cov, self.covariate)
        if x.dtype == object:
            raise MissingCovariateError(
                f"nodecov needs a numeric covariate, '{self.covariate}' is categorical"
            )

    def lower_bound(self):
        return None  # sign depends on the covariate

    def global_stat(self, graph, cov):
        x = _require_nodal(cov, self.covariate)
        return float(sum(x[i] + x[j] for i, j in graph.edge_list()))

    def change_add(self, graph, cov, i, j):
        x = _require_nodal(cov, self.covariate)
        return float(x[i] + x[j])


class EdgecovTerm(Term):
    kind = "edgecov"

    def __init__(self, covariate: str):
        self.covariate = str(covariate)

    def key(self):
        return (self.kind, self.covariate)

    def label(self):
        return f"edgecov({self.covariate})"

    def spec_line(self):
        return f"edgecov {self.covariate}"

    def validate(self, cov):
        _require_dyadic(cov, self.covariate)

    def lower_bound(self):
        return None  # sign depends on the covariate

    def global_stat(self, graph, cov):
        x = _require_dyadic(cov, self.covariate)
        return float(sum(x[i, j] for i, j in graph.edge_list()))

    def change_add(self, graph, cov, i, j):
        x = _require_dyadic(cov, self.covariate)
        return float(x[i, j])


class TwoStarsTerm(Term):
    kind = "twostars"

    def label(self):
        return "twostars"

    def spec_line(self):
        return "twostars"

    def global_stat(self, graph, cov):
        d = graph.degrees()
        return float((d * (d - 1) // 2).sum())

    def change_add(self, graph, cov, i, j):
        return float(graph.degree(i) + graph.degree(j))


class TrianglesTerm(Term):
    kind = "triangles"

    def label(self):
        return "triangles"

    def spec_line(self):
        return "triangles"

    def global_stat(self, graph, cov):
        total = 0
        for i, j in graph.edge_list():
            total += len(graph.adjacency_set(i) & graph.adjacency_set(j))
        return float(total // 3)

    def change_add(self, graph, cov, i, j):
        return float(len(graph.adjacency_set(i) & graph.adjacency_set(j)))


class OpenTwoPathsTerm(Term):
    """Induced 3-vertex paths: 2-stars whose outer pair is not tied."""

    kind = "opentwopaths"

    def label(self):
        return "opentwopaths"

    def spec_line(self):
        return "opentwopaths"

    def global_stat(self, graph, cov):
        d = graph.degrees()
        twostars = float((d * (d - 1) // 2).sum())
        tri = TrianglesTerm().global_stat(graph, cov)
        return twostars - 3.0 * tri

    def change_add(self, graph, cov, i, j):
        common = len(graph.adjacency_set(i) & graph.adjacency_set(j))
        return float(graph.degree(i) + graph.degree(j) - 3 * common)


_TERM_PARSERS = {
    "edges": lambda args: EdgesTerm(),
    "gwesp": lambda args: GwespTerm(float(args[0])),
    "nodematch": lambda args: NodematchTerm(args[0]),
    "nodemix": lambda args: NodemixTerm(args[0], args[1], args[2]),
    "nodecov": lambda args: NodecovTerm(args[0]),
    "edgecov": lambda args: EdgecovTerm(args[0]),
    "twostars": lambda args: TwoStarsTerm(),
    "triangles": lambda args: TrianglesTerm(),
    "opentwopaths": lambda args: OpenTwoPathsTerm(),
}

_TERM_ARITY = {
    "edges": 0,
    "gwesp": 1,
    "nodematch": 1,
    "nodemix": 3,
    "nodecov": 1,
    "edgecov": 1,
    "twostars": 0,
    "triangles": 0,
    "opentwopaths": 0,
}


@dataclass(frozen=True)
class ModelSpec:
    """Ordered list of terms; defines the statistic map g and its
    coordinate order.  Duplicate terms are rejected (they make the Fisher
    information exactly singular)."""

    terms: tuple

    def __init__(self, terms):
        terms = tuple(terms)
        if not terms:
            raise ValueError("a model needs at least one term")
        seen = set()
        for t in terms:
            if t.key() in seen:
                raise DuplicateTermError(f"duplicate term {t.label()}")
            seen.add(t.key())
        object.__setattr__(self, "terms", terms)

    @property
    def p(self) -> int:
        return len(self.terms)

    def stat_names(self) -> list[str]:
        return [t.label() for t in self.terms]

    def validate(self, cov: CovariateSet | None) -> None:
        for t in self.terms:
            t.validate(cov)

    def to_text(self) -> str:
        return "\n".join(t.spec_line() for t in self.terms) + "\n"

    def fingerprint(self) -> str:
        """Stable hash of the term list, used to bind prior files to models."""
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def __iter__(self):
        return iter(self.terms)


@dataclass
class StatVector:
    """Point in mean-value space with a provenance label
    (observed | mean | prior | target | simulated)."""

    values: np.ndarray
    label: str = "observed"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self.values.astype(dtype)
        return self.values

    def __len__(self):
        return len(self.values)

    def check_model(self, model: ModelSpec):
        if len(self.values) != model.p:
            raise ValueError(
                f"statistic vector has length {len(self.values)}, model has p={model.p}"
            )
        return self


def as_values(x) -> np.ndarray:
    """Accept a StatVector or array-like; return a float ndarray."""
    if isinstance(x, StatVector):
        return x.values
    return np.asarray(x, dtype=float)


def statistics(model: ModelSpec, graph: Graph, cov: CovariateSet | None = None) -> StatVector:
    """Evaluate the full statistic vector g(y) by global formulas."""
    vals = np.array([t.global_stat(graph, cov) for t in model.terms], dtype=float)
    return StatVector(vals, label="observed")


def change_statistics(
    model: ModelSpec, graph: Graph, cov: CovariateSet | None, dyad
) -> StatVector:
    """g(y+ij) - g(y-ij) for one dyad, all other dyads held fixed.

    Computed from neighbor scans only.  If the dyad is currently present
    it is removed for the duration of the computation and restored.
    """
    i, j = dyad
    present = graph.has_edge(i, j)
    if present:
        graph.set_edge(i, j, False)
    try:
        vals = np.array(
            [t.change_add(graph, cov, i, j) for t in model.terms], dtype=float
        )
    finally:
        if present:
            graph.set_edge(i, j, True)
    return StatVector(vals, label="observed")


def statistics_mean(model: ModelSpec, graph_set: GraphSet) -> StatVector:
    """Arithmetic mean of per-graph statistic vectors over a graph set."""
    if len(graph_set.graphs) == 0:
        raise EmptySetError("cannot average statistics of an empty graph set")
    total = np.zeros(model.p)
    for g in graph_set.graphs:
        total += statistics(model, g, graph_set.covariates).values
    return StatVector(total / len(graph_set.graphs), label="mean")


def parse_model_text(text: str) -> ModelSpec:
    """Parse the model-file grammar: one term per line, ``#`` comments.

    Examples::

        edges
        gwesp 0.5
        nodemix area Frontal Temporal
        edgecov logdist
    """
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0].lower()
        if kind not in _TERM_PARSERS:
            raise ValueError(f"line {lineno}: unknown term kind '{parts[0]}'")
        args = parts[1:]
        if len(args) != _TERM_ARITY[kind]:
            raise ValueError(
                f"line {lineno}: term '{kind}' takes {_TERM_ARITY[kind]} "
                f"argument(s), got {len(args)}"
            )
        try:
            terms.append(_TERM_PARSERS[kind](args))
        except (ValueError, TypeError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return ModelSpec(terms)


def parse_model_file(path) -> ModelSpec:
    with open(path) as fh:
        return parse_model_text(fh.read())
