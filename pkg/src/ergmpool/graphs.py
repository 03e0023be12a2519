"""Undirected binary graphs on a fixed labeled vertex set.

A :class:`Graph` stores dyad states twice: a packed boolean vector over
the n(n-1)/2 unordered pairs (O(1) state queries for change statistics)
and per-vertex adjacency sets (O(degree) neighbor scans for triangle and
shared-partner counting).  Both views are maintained through every
toggle.  :class:`GraphSet` bundles m graphs with the covariates and
support constraint they share; it is immutable after load.

File formats (one directory per graph set):

* ``*.edgelist``  one file per graph; mandatory header ``n=<int>``,
  then one ``i<TAB>j`` pair per line, ``#`` comments allowed.
* ``nodal.csv``   optional; header row of covariate names, n rows in
  vertex order.  Numeric columns become real covariates, anything else
  categorical.
* ``<name>.mat``  optional; whitespace-delimited symmetric n x n matrix,
  one file per dyadic covariate.
* ``constraints.txt``  optional; lines ``+ i j`` (fixed present) and
  ``- i j`` (fixed absent).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConstrainedDyadError,
    ConstraintViolationError,
    DimensionMismatchError,
    GraphFormatError,
    SizeMismatchError,
)

__all__ = [
    "Graph",
    "CovariateSet",
    "SupportConstraint",
    "GraphSet",
    "dyad_index",
    "dyad_pairs",
    "toggle_dyad",
    "hamming_distance",
    "read_graph_set",
    "write_graph_set",
]


def dyad_index(n: int, i: int, j: int) -> int:
    """Position of unordered pair {i, j} in the packed dyad vector.

    Pairs are ordered row-major over the strict upper triangle:
    (0,1), (0,2), ..., (0,n-1), (1,2), ...
    """
    if i == j:
        raise IndexError(f"self-loop dyad ({i},{i}) is undefined")
    if i > j:
        i, j = j, i
    if j >= n or i < 0:
        raise IndexError(f"dyad ({i},{j}) out of range for n={n}")
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def dyad_pairs(n: int) -> np.ndarray:
    """(n(n-1)/2, 2) int array of all unordered pairs, in dyad-index order."""
    iu = np.triu_indices(n, k=1)
    return np.column_stack(iu).astype(np.int64)


class Graph:
    """Mutable undirected binary graph on vertices 0..n-1.

    Single-writer: clone before handing to a second sampler.
    """

    __slots__ = ("n", "_dyads", "_adj")

    def __init__(self, n: int, edges=()):
        if n < 1:
            raise ValueError(f"vertex count must be >= 1, got {n}")
        self.n = int(n)
        self._dyads = np.zeros(n * (n - 1) // 2, dtype=bool)
        self._adj = [set() for _ in range(n)]
        for i, j in edges:
            self.set_edge(i, j, True)

    # -- state queries -------------------------------------------------

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self._dyads[dyad_index(self.n, i, j)])

    def neighbors(self, i: int) -> frozenset:
        return frozenset(self._adj[i])

    def adjacency_set(self, i: int) -> set:
        """Direct (read-only by convention) view of vertex i's neighbor set."""
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self._adj], dtype=np.int64)

    @property
    def n_edges(self) -> int:
        return int(self._dyads.sum())

    def edge_list(self) -> list[tuple[int, int]]:
        pairs = dyad_pairs(self.n)[self._dyads]
        return [(int(i), int(j)) for i, j in pairs]

    def dyad_vector(self) -> np.ndarray:
        """Copy of the packed dyad-state vector (bool, length n(n-1)/2)."""
        return self._dyads.copy()

    def to_matrix(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency matrix (uint8)."""
        m = np.zeros((self.n, self.n), dtype=np.uint8)
        iu = np.triu_indices(self.n, k=1)
        m[iu] = self._dyads
        return m | m.T

    # -- construction --------------------------------------------------

    @classmethod
    def from_dyad_vector(cls, n: int, dyads: np.ndarray) -> "Graph":
        g = cls(n)
        dyads = np.asarray(dyads, dtype=bool)
        if dyads.shape != g._dyads.shape:
            raise DimensionMismatchError(
                f"dyad vector length {dyads.size} != {g._dyads.size} for n={n}"
            )
        g._dyads[:] = dyads
        pairs = dyad_pairs(n)[dyads]
        for i, j in pairs:
            g._adj[i].add(int(j))
            g._adj[j].add(int(i))
        return g

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "Graph":
        matrix = np.asarray(matrix)
        n = matrix.shape[0]
        g = cls(n)
        iu = np.triu_indices(n, k=1)
        g._dyads[:] = matrix[iu] != 0
        pairs = dyad_pairs(n)[g._dyads]
        for i, j in pairs:
            g._adj[i].add(int(j))
            g._adj[j].add(int(i))
        return g

    def copy(self) -> "Graph":
        g = Graph.__new__(Graph)
        g.n = self.n
        g._dyads = self._dyads.copy()
        g._adj = [set(a) for a in self._adj]
        return g

    # -- mutation ------------------------------------------------------

    def set_edge(self, i: int, j: int, present: bool) -> None:
        idx = dyad_index(self.n, i, j)
        if self._dyads[idx] == present:
            return
        self._dyads[idx] = present
        if present:
            self._adj[i].add(j)
            self._adj[j].add(i)
        else:
            self._adj[i].discard(j)
            self._adj[j].discard(i)

    def toggle(self, i: int, j: int) -> None:
        self.set_edge(i, j, not self.has_edge(i, j))

    # -- comparison ----------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and np.array_equal(self._dyads, other._dyads)
        )

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.n_edges})"


@dataclass(frozen=True)
class CovariateSet:
    """Nodal and dyadic covariates shared by every graph in a set.

    nodal maps name -> length-n array (float for real covariates, object
    for categorical); dyadic maps name -> symmetric n x n float matrix
    whose diagonal is ignored.
    """

    n: int
    nodal: dict = field(default_factory=dict)
    dyadic: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, values in self.nodal.items():
            arr = np.asarray(values)
            if arr.shape != (self.n,):
                raise DimensionMismatchError(
                    f"nodal covariate '{name}' has {arr.size} entries, expected {self.n}"
                )
            self.nodal[name] = arr
        for name, mat in self.dyadic.items():
            mat = np.asarray(mat, dtype=float)
            if mat.shape != (self.n, self.n):
                raise DimensionMismatchError(
                    f"dyadic covariate '{name}' is {mat.shape}, expected ({self.n},{self.n})"
                )
            if not np.allclose(mat, mat.T, equal_nan=True):
                raise DimensionMismatchError(f"dyadic covariate '{name}' is not symmetric")
            self.dyadic[name] = mat

    @classmethod
    def empty(cls, n: int) -> "CovariateSet":
        return cls(n=n)


class SupportConstraint:
    """Dyads forced present or absent; samplers never touch them."""

    __slots__ = ("fixed_present", "fixed_absent")

    def __init__(self, fixed_present=(), fixed_absent=()):
        self.fixed_present = frozenset(self._norm(d) for d in fixed_present)
        self.fixed_absent = frozenset(self._norm(d) for d in fixed_absent)
        overlap = self.fixed_present & self.fixed_absent
        if overlap:
            raise ConstraintViolationError(
                f"dyads {sorted(overlap)} are fixed both present and absent"
            )

    @staticmethod
    def _norm(dyad):
        i, j = dyad
        if i == j:
            raise ValueError(f"self-loop dyad ({i},{i}) cannot be constrained")
        return (min(i, j), max(i, j))

    @classmethod
    def none(cls) -> "SupportConstraint":
        return cls()

    def is_fixed(self, i: int, j: int) -> bool:
        d = self._norm((i, j))
        return d in self.fixed_present or d in self.fixed_absent

    def free_dyads(self, n: int) -> np.ndarray:
        """(k, 2) array of unconstrained pairs, in dyad-index order."""
        pairs = dyad_pairs(n)
        if not self.fixed_present and not self.fixed_absent:
            return pairs
        fixed = self.fixed_present | self.fixed_absent
        mask = np.array([(int(i), int(j)) not in fixed for i, j in pairs])
        return pairs[mask]

    def check_graph(self, graph: Graph) -> None:
        for i, j in self.fixed_present:
            if not graph.has_edge(i, j):
                raise ConstraintViolationError(f"dyad ({i},{j}) must be present")
        for i, j in self.fixed_absent:
            if graph.has_edge(i, j):
                raise ConstraintViolationError(f"dyad ({i},{j}) must be absent")

    def apply_to(self, graph: Graph) -> Graph:
        """Set all fixed dyads to their required state, in place."""
        for i, j in self.fixed_present:
            graph.set_edge(i, j, True)
        for i, j in self.fixed_absent:
            graph.set_edge(i, j, False)
        return graph

    def __eq__(self, other):
        return (
            isinstance(other, SupportConstraint)
            and self.fixed_present == other.fixed_present
            and self.fixed_absent == other.fixed_absent
        )

    def __repr__(self):
        return (
            f"SupportConstraint(+{len(self.fixed_present)}, -{len(self.fixed_absent)})"
        )


@dataclass(frozen=True)
class GraphSet:
    """Ordered list of m graphs on one vertex set, with shared covariates
    and a shared support constraint.  Immutable after construction."""

    graphs: tuple
    covariates: CovariateSet
    constraint: SupportConstraint
    names: tuple = ()

    def __init__(self, graphs, covariates=None, constraint=None, names=None):
        graphs = tuple(graphs)
        if not graphs:
            raise ValueError("a GraphSet needs at least one graph")
        n = graphs[0].n
        for k, g in enumerate(graphs):
            if g.n != n:
                raise SizeMismatchError(
                    f"graph {k} has n={g.n}, expected {n} (equivalent-vertex assumption)"
                )
        covariates = covariates if covariates is not None else CovariateSet.empty(n)
        if covariates.n != n:
            raise DimensionMismatchError(
                f"covariates are for n={covariates.n}, graphs have n={n}"
            )
        constraint = constraint if constraint is not None else SupportConstraint.none()
        for k, g in enumerate(graphs):
            try:
                constraint.check_graph(g)
            except ConstraintViolationError as exc:
                raise ConstraintViolationError(f"graph {k}: {exc}") from None
        if names is None:
            names = tuple(f"graph{k}" for k in range(len(graphs)))
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "covariates", covariates)
        object.__setattr__(self, "constraint", constraint)
        object.__setattr__(self, "names", tuple(names))

    @property
    def m(self) -> int:
        return len(self.graphs)

    @property
    def n(self) -> int:
        return self.graphs[0].n

    def drop(self, index: int) -> "GraphSet":
        """New GraphSet without graph `index` (used by leave-one-out CV)."""
        keep = [g for k, g in enumerate(self.graphs) if k != index]
        names = [nm for k, nm in enumerate(self.names) if k != index]
        return GraphSet(keep, self.covariates, self.constraint, names)

    def __len__(self):
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def toggle_dyad(graph: Graph, i: int, j: int, constraint: SupportConstraint | None = None) -> Graph:
    """Flip the state of dyad {i, j} in place and return the graph.

    Raises ConstrainedDyadError if the dyad is fixed by `constraint` and
    IndexError if either endpoint is out of range.
    """
    if i == j:
        raise IndexError(f"self-loop dyad ({i},{i}) cannot be toggled")
    if i >= graph.n or j >= graph.n or i < 0 or j < 0:
        raise IndexError(f"dyad ({i},{j}) out of range for n={graph.n}")
    if constraint is not None and constraint.is_fixed(i, j):
        raise ConstrainedDyadError(f"dyad ({i},{j}) is fixed by the support constraint")
    graph.toggle(i, j)
    return graph


def hamming_distance(a: Graph, b: Graph) -> int:
    """Number of unordered dyads on which two graphs disagree."""
    if a.n != b.n:
        raise SizeMismatchError(f"graphs have n={a.n} and n={b.n}")
    return int(np.count_nonzero(a._dyads != b._dyads))


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

EDGELIST_SUFFIX = ".edgelist"
NODAL_FILE = "nodal.csv"
CONSTRAINT_FILE = "constraints.txt"
DYADIC_SUFFIX = ".mat"


def _parse_edge_list(text: str, path=None) -> Graph:
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("n="):
            try:
                n = int(line[2:])
            except ValueError:
                raise GraphFormatError(f"bad header {line!r}", path, lineno) from None
            if n < 1:
                raise GraphFormatError(f"vertex count must be >= 1, got {n}", path, lineno)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"expected 'i<TAB>j', got {raw!r}", path, lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"non-integer vertex in {raw!r}", path, lineno) from None
        if n is None:
            raise GraphFormatError("edge listed before mandatory 'n=<int>' header", path, lineno)
        if i == j:
            raise GraphFormatError(f"self-loop ({i},{j}) not allowed", path, lineno)
        if i >= n or j >= n or i < 0 or j < 0:
            raise GraphFormatError(f"vertex index out of range in ({i},{j}), n={n}", path, lineno)
        edges.append((i, j))
    if n is None:
        raise GraphFormatError("missing mandatory 'n=<int>' header", path)
    return Graph(n, edges)


def _format_edge_list(graph: Graph) -> str:
    out = io.StringIO()
    out.write(f"n={graph.n}\n")
    for i, j in graph.edge_list():
        out.write(f"{i}\t{j}\n")
    return out.getvalue()


def _parse_nodal_csv(text: str, n: int, path=None) -> dict:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise GraphFormatError("empty nodal covariate file", path)
    header = [c.strip() for c in rows[0]]
    data = rows[1:]
    if len(data) != n:
        raise DimensionMismatchError(
            f"{path}: nodal covariate file has {len(data)} rows, expected n={n}"
        )
    covs = {}
    for col, name in enumerate(header):
        raw = []
        for r in data:
            if col >= len(r):
                raise GraphFormatError(f"row with too few columns for '{name}'", path)
            raw.append(r[col].strip())
        try:
            covs[name] = np.array([float(v) for v in raw], dtype=float)
        except ValueError:
            covs[name] = np.array(raw, dtype=object)
    return covs


def _parse_constraints(text: str, n: int, path=None) -> SupportConstraint:
    present, absent = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in "+-":
            raise GraphFormatError(f"expected '+ i j' or '- i j', got {raw!r}", path, lineno)
        try:
            i, j = int(parts[1]), int(parts[2])
        except ValueError:
            raise GraphFormatError(f"non-integer vertex in {raw!r}", path, lineno) from None
        if i == j or i < 0 or j < 0 or i >= n or j >= n:
            raise GraphFormatError(f"bad dyad ({i},{j}) for n={n}", path, lineno)
        (present if parts[0] == "+" else absent).append((i, j))
    return SupportConstraint(present, absent)


def read_graph_set(path) -> GraphSet:
    """Load a graph-set directory (formats in the module docstring).

    Graph files are bound in sorted filename order.  Ingestion is
    fail-fast: covariate dimension mismatches and constraint violations
    raise instead of repairing.
    """
    root = Path(path)
    if not root.is_dir():
        raise GraphFormatError(f"not a directory: {root}")
    edge_files = sorted(p for p in root.iterdir() if p.suffix == EDGELIST_SUFFIX)
    if not edge_files:
        raise GraphFormatError(f"no *{EDGELIST_SUFFIX} files in {root}")
    graphs = [_parse_edge_list(p.read_text(), p) for p in edge_files]
    n = graphs[0].n
    for p, g in zip(edge_files, graphs):
        if g.n != n:
            raise SizeMismatchError(f"{p}: n={g.n}, expected {n} from {edge_files[0].name}")

    nodal = {}
    nodal_path = root / NODAL_FILE
    if nodal_path.exists():
        nodal = _parse_nodal_csv(nodal_path.read_text(), n, nodal_path)

    dyadic = {}
    for p in sorted(root.iterdir()):
        if p.suffix == DYADIC_SUFFIX:
            mat = np.loadtxt(p.open())
            mat = np.atleast_2d(mat)
            if mat.shape != (n, n):
                raise DimensionMismatchError(f"{p}: matrix is {mat.shape}, expected ({n},{n})")
            dyadic[p.stem] = mat

    constraint = SupportConstraint.none()
    cons_path = root / CONSTRAINT_FILE
    if cons_path.exists():
        constraint = _parse_constraints(cons_path.read_text(), n, cons_path)

    covs = CovariateSet(n=n, nodal=nodal, dyadic=dyadic)
    names = tuple(p.stem for p in edge_files)
    return GraphSet(graphs, covs, constraint, names)


def write_graph_set(path, graph_set: GraphSet) -> None:
    """Write a GraphSet as a directory readable by read_graph_set."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(len(graph_set.graphs) - 1)))
    for k, g in enumerate(graph_set.graphs):
        name = graph_set.names[k] if k < len(graph_set.names) else f"graph{k:0{width}d}"
        (root / f"{name}{EDGELIST_SUFFIX}").write_text(_format_edge_list(g))
    cov = graph_set.covariates
    if cov.nodal:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        names = sorted(cov.nodal)
        writer.writerow(names)
        for v in range(graph_set.n):
            writer.writerow([cov.nodal[nm][v] for nm in names])
        (root / NODAL_FILE).write_text(out.getvalue())
    for nm, mat in cov.dyadic.items():
        with (root / f"{nm}{DYADIC_SUFFIX}").open("w") as fh:
            np.savetxt(fh, mat, fmt="%.17g")
    cons = graph_set.constraint
    if cons.fixed_present or cons.fixed_absent:
        lines = [f"+ {i} {j}" for i, j in sorted(cons.fixed_present)]
        lines += [f"- {i} {j}" for i, j in sorted(cons.fixed_absent)]
        (root / CONSTRAINT_FILE).write_text("\n".join(lines) + "\n")
