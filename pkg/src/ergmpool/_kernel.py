"""Compiled Metropolis-Hastings core for ERGM simulation.

The hot loop runs over a dense uint8 adjacency matrix with all model
terms flattened into parallel arrays (term kind codes, GWESP weight
tables, integer-coded categorical covariates, stacked nodal and dyadic
covariate arrays).  Change statistics are recomputed here rather than
calling back into :mod:`ergmpool.terms`; the two implementations are
cross-checked by the sampler integrity tests (incremental statistics of
a finished chain must match a full re-evaluation of the final graph).

Randomness comes from an explicit xorshift64* stream seeded via
splitmix64, so identical seeds give bit-identical chains regardless of
NumPy version or threading.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .graphs import CovariateSet, Graph
from .terms import (
    EdgecovTerm,
    EdgesTerm,
    GwespTerm,
    ModelSpec,
    NodecovTerm,
    NodematchTerm,
    NodemixTerm,
    OpenTwoPathsTerm,
    TrianglesTerm,
    TwoStarsTerm,
    level_str,
)

K_EDGES = 0
K_GWESP = 1
K_NODEMATCH = 2
K_NODEMIX = 3
K_NODECOV = 4
K_EDGECOV = 5
K_TWOSTARS = 6
K_TRIANGLES = 7
K_OPENTWOPATHS = 8

_U64 = np.uint64


@njit(cache=True, nogil=True)
def _seed_state(seed):
    # splitmix64 of the seed; never returns 0 (xorshift64* fixed point)
    z = seed + _U64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    z = z ^ (z >> _U64(31))
    if z == _U64(0):
        z = _U64(0x9E3779B97F4A7C15)
    return z


@njit(cache=True, nogil=True)
def _next_u64(state):
    x = state[0]
    x ^= x >> _U64(12)
    x ^= x << _U64(25)
    x ^= x >> _U64(27)
    state[0] = x
    return x * _U64(0x2545F4914F6CDD1D)


@njit(cache=True, nogil=True)
def _next_unit(state):
    # top 53 bits -> (0, 1]; never 0 so log() is safe
    return (np.float64(_next_u64(state) >> _U64(11)) + 1.0) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def _change_stats_add(
    adj,
    deg,
    i,
    j,
    kinds,
    gwesp_w,
    cat_idx,
    cat_codes,
    mix_a,
    mix_b,
    ncov_idx,
    ncovs,
    ecov_idx,
    ecovs,
    out,
):
    """g(y+ij) - g(y-ij) for all terms, assuming adj[i, j] == 0."""
    n = adj.shape[0]
    p = kinds.shape[0]
    cn = 0
    for k in range(n):
        if adj[i, k] == 1 and adj[j, k] == 1:
            cn += 1
    for t in range(p):
        kd = kinds[t]
        if kd == K_EDGES:
            out[t] = 1.0
        elif kd == K_GWESP:
            w = gwesp_w[t]
            val = w[cn]
            for k in range(n):
                if adj[i, k] == 1 and adj[j, k] == 1:
                    s_ik = 0
                    s_jk = 0
                    for l in range(n):
                        if adj[k, l] == 1:
                            if adj[i, l] == 1:
                                s_ik += 1
                            if adj[j, l] == 1:
                                s_jk += 1
                    val += w[s_ik + 1] - w[s_ik]
                    val += w[s_jk + 1] - w[s_jk]
            out[t] = val
        elif kd == K_NODEMATCH:
            c = cat_codes[cat_idx[t]]
            out[t] = 1.0 if c[i] == c[j] else 0.0
        elif kd == K_NODEMIX:
            c = cat_codes[cat_idx[t]]
            ci = c[i]
            cj = c[j]
            a = mix_a[t]
            b = mix_b[t]
            out[t] = 1.0 if (ci == a and cj == b) or (ci == b and cj == a) else 0.0
        elif kd == K_NODECOV:
            x = ncovs[ncov_idx[t]]
            out[t] = x[i] + x[j]
        elif kd == K_EDGECOV:
            out[t] = ecovs[ecov_idx[t]][i, j]
        elif kd == K_TWOSTARS:
            out[t] = np.float64(deg[i] + deg[j])
        elif kd == K_TRIANGLES:
            out[t] = np.float64(cn)
        else:  # K_OPENTWOPATHS
            out[t] = np.float64(deg[i] + deg[j] - 3 * cn)


@njit(cache=True, nogil=True)
def _advance(
    adj,
    deg,
    stats,
    theta,
    rng,
    free_i,
    free_j,
    kinds,
    gwesp_w,
    cat_idx,
    cat_codes,
    mix_a,
    mix_b,
    ncov_idx,
    ncovs,
    ecov_idx,
    ecovs,
    n_steps,
    delta,
):
    """Run n_steps uniform-dyad toggle proposals in place; return accept count.

    Acceptance is decided in log space (log u < theta . delta), which is
    equivalent to clamping the ratio before exponentiation but immune to
    overflow for any theta.
    """
    accepted = 0
    nf = _U64(free_i.shape[0])
    p = stats.shape[0]
    for _ in range(n_steps):
        d = np.int64(_next_u64(rng) % nf)
        i = free_i[d]
        j = free_j[d]
        present = adj[i, j] == 1
        if present:
            adj[i, j] = 0
            adj[j, i] = 0
            deg[i] -= 1
            deg[j] -= 1
        _change_stats_add(
            adj, deg, i, j, kinds, gwesp_w, cat_idx, cat_codes,
            mix_a, mix_b, ncov_idx, ncovs, ecov_idx, ecovs, delta,
        )
        logr = 0.0
        for t in range(p):
            logr += theta[t] * delta[t]
        if present:
            logr = -logr
        if logr >= 0.0:
            accept = True
        else:
            accept = np.log(_next_unit(rng)) < logr
        if accept:
            accepted += 1
            if present:
                for t in range(p):
                    stats[t] -= delta[t]
            else:
                adj[i, j] = 1
                adj[j, i] = 1
                deg[i] += 1
                deg[j] += 1
                for t in range(p):
                    stats[t] += delta[t]
        elif present:
            adj[i, j] = 1
            adj[j, i] = 1
            deg[i] += 1
            deg[j] += 1
    return accepted


@njit(cache=True, nogil=True)
def _sample(
    adj,
    deg,
    stats,
    theta,
    rng,
    free_i,
    free_j,
    kinds,
    gwesp_w,
    cat_idx,
    cat_codes,
    mix_a,
    mix_b,
    ncov_idx,
    ncovs,
    ecov_idx,
    ecovs,
    n_draws,
    thin,
    out_stats,
    record,
    out_dyads,
    delta,
):
    """Retain n_draws states spaced thin steps apart; returns accept count."""
    accepted = 0
    n = adj.shape[0]
    p = stats.shape[0]
    for s in range(n_draws):
        accepted += _advance(
            adj, deg, stats, theta, rng, free_i, free_j, kinds, gwesp_w,
            cat_idx, cat_codes, mix_a, mix_b, ncov_idx, ncovs, ecov_idx,
            ecovs, thin, delta,
        )
        for t in range(p):
            out_stats[s, t] = stats[t]
        if record:
            idx = 0
            for a in range(n):
                for b in range(a + 1, n):
                    out_dyads[s, idx] = adj[a, b]
                    idx += 1
    return accepted


class KernelModel:
    """Flattened term arrays for one (model, covariates, n) binding.

    Immutable and shareable across chains.
    """

    def __init__(self, model: ModelSpec, cov: CovariateSet | None, n: int):
        model.validate(cov)
        self.model = model
        self.n = n
        p = model.p
        self.kinds = np.zeros(p, dtype=np.int64)
        self.gwesp_w = np.zeros((p, n + 1), dtype=np.float64)
        self.cat_idx = np.zeros(p, dtype=np.int64)
        self.mix_a = np.full(p, -1, dtype=np.int64)
        self.mix_b = np.full(p, -1, dtype=np.int64)
        self.ncov_idx = np.zeros(p, dtype=np.int64)
        self.ecov_idx = np.zeros(p, dtype=np.int64)

        cat_rows = [np.zeros(n, dtype=np.int64)]
        cat_row_of = {}
        ncov_rows = [np.zeros(n, dtype=np.float64)]
        ecov_rows = [np.zeros((n, n), dtype=np.float64)]

        def cat_row(name):
            if name not in cat_row_of:
                values = cov.nodal[name]
                levels = sorted({level_str(v) for v in values})
                codes = {lev: k for k, lev in enumerate(levels)}
                row = np.array([codes[level_str(v)] for v in values], dtype=np.int64)
                cat_rows.append(row)
                cat_row_of[name] = (len(cat_rows) - 1, codes)
            return cat_row_of[name]

        for t, term in enumerate(model.terms):
            if isinstance(term, EdgesTerm):
                self.kinds[t] = K_EDGES
            elif isinstance(term, GwespTerm):
                self.kinds[t] = K_GWESP
                table = term.weight_table(n)
                self.gwesp_w[t, : len(table)] = table
            elif isinstance(term, NodematchTerm):
                self.kinds[t] = K_NODEMATCH
                self.cat_idx[t] = cat_row(term.covariate)[0]
            elif isinstance(term, NodemixTerm):
                self.kinds[t] = K_NODEMIX
                idx, codes = cat_row(term.covariate)
                self.cat_idx[t] = idx
                self.mix_a[t] = codes[term.level_a]
                self.mix_b[t] = codes[term.level_b]
            elif isinstance(term, NodecovTerm):
                self.kinds[t] = K_NODECOV
                ncov_rows.append(np.asarray(cov.nodal[term.covariate], dtype=np.float64))
                self.ncov_idx[t] = len(ncov_rows) - 1
            elif isinstance(term, EdgecovTerm):
                self.kinds[t] = K_EDGECOV
                ecov_rows.append(np.asarray(cov.dyadic[term.covariate], dtype=np.float64))
                self.ecov_idx[t] = len(ecov_rows) - 1
            elif isinstance(term, TwoStarsTerm):
                self.kinds[t] = K_TWOSTARS
            elif isinstance(term, TrianglesTerm):
                self.kinds[t] = K_TRIANGLES
            elif isinstance(term, OpenTwoPathsTerm):
                self.kinds[t] = K_OPENTWOPATHS
            else:
                raise TypeError(f"no kernel mapping for term {term!r}")

        self.cat_codes = np.stack(cat_rows)
        self.ncovs = np.stack(ncov_rows)
        self.ecovs = np.stack(ecov_rows)

    def term_args(self) -> tuple:
        return (
            self.kinds,
            self.gwesp_w,
            self.cat_idx,
            self.cat_codes,
            self.mix_a,
            self.mix_b,
            self.ncov_idx,
            self.ncovs,
            self.ecov_idx,
            self.ecovs,
        )


def seed_state(seed: int) -> np.ndarray:
    """One-element uint64 array holding the RNG state for a chain."""
    return np.array([_seed_state(_U64(int(seed) & 0xFFFFFFFFFFFFFFFF))], dtype=np.uint64)


def change_stats_add(kernel: KernelModel, graph: Graph, i: int, j: int) -> np.ndarray:
    """One-shot kernel change statistic (used by tests to pin the kernel
    against the reference implementation in terms.py)."""
    adj = graph.to_matrix()
    present = adj[i, j] == 1
    if present:
        adj[i, j] = 0
        adj[j, i] = 0
    deg = adj.sum(axis=1).astype(np.int64)
    out = np.empty(kernel.model.p, dtype=np.float64)
    _change_stats_add(adj, deg, i, j, *kernel.term_args(), out)
    return out
