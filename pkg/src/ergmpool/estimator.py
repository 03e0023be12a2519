"""Single-target MLE machinery.

Given a target statistic vector (an observed g(y), a mean over a graph
set, or a prior-blended posterior target), find the coefficient vector
theta whose expected statistics match it.  Two methods are provided:

* Geyer-Thompson MCMC-MLE: iteratively sample at the current theta and
  maximize the importance-sampled log-likelihood ratio by Newton steps.
  Each iteration fits a working target stepped toward the sampled mean
  by the largest step-length factor that keeps it inside a slightly
  shrunk sample hull, so the update never extrapolates beyond what the
  sample supports; the factor reaches 1 as the fit closes in.
* Robbins-Monro stochastic approximation: a three-phase scheme that
  scales stochastic gradient steps by an estimated statistic covariance
  and averages iterates within subphases of halving gain.

Both terminate on per-coordinate convergence t-ratios (mean minus
target in units of the statistic standard deviation, the usual
stochastic-approximation convention), with an optional autocorrelation-
adjusted Hotelling T^2 test, and finish by re-estimating the Fisher
information Var_theta g(Y) from a larger fresh sample.

A target on a face of the achievable-statistics hull has no finite
maximizer; the fit drives the pinned statistic to a constant equal to
the target, which is detected and raised as HullInfeasibleError naming
the offending coordinates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse
import scipy.special
import scipy.stats

from .errors import HullInfeasibleError, NonIdentifiableModelError
from .graphs import CovariateSet, Graph, SupportConstraint
from .sampler import (
    Chain,
    ChainConfig,
    batch_means_se,
    derive_seed,
    estimate_statistic_covariance,
    hotelling_pvalue,
)
from .terms import ModelSpec, StatVector, as_values, change_statistics

__all__ = [
    "TargetProblem",
    "EstimatorConfig",
    "FitResult",
    "HullCheckResult",
    "mple",
    "hull_check",
    "fit",
    "fit_geyer_thompson",
    "fit_stochastic_approximation",
]

Z_95 = float(scipy.stats.norm.ppf(0.975))

# Separation guard for the pseudo-likelihood initializer: estimates that
# drift past MPLE_DRIFT are clipped to +-MPLE_CLIP so that the first
# sampling batch of the main estimator still mixes.
MPLE_CLIP = 4.0
MPLE_DRIFT = 8.0


@dataclass
class TargetProblem:
    """A model, the statistic vector its fitted expectation must match,
    and the data context (covariates, support constraint, reference
    graph for initialization and chain starts)."""

    model: ModelSpec
    target: StatVector
    covariates: CovariateSet | None = None
    constraint: SupportConstraint | None = None
    reference_graph: Graph | None = None

    def __post_init__(self):
        if not isinstance(self.target, StatVector):
            self.target = StatVector(np.asarray(self.target, dtype=float), label="target")
        self.target.check_model(self.model)
        if self.constraint is None:
            self.constraint = SupportConstraint.none()


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs for the fitting loop.

    t_ratio_threshold uses the statistic-SD convention: converged when
    |mean - target| < threshold * sd(statistic) per coordinate.
    hotelling_pvalue (when set) additionally requires the T^2 test of
    mean == target to obtain p above that value.
    """

    method: str = "geyer-thompson"
    chain: ChainConfig = field(default_factory=ChainConfig)
    max_outer: int = 25
    t_ratio_threshold: float = 0.1
    hotelling_pvalue: float | None = None
    theta0: object = None
    fisher_draw_factor: int = 4
    reburn_fraction: float = 0.25
    hull_tolerance: float = 1e-9
    hull_patience: int = 3
    unstick_patience: int = 8
    hull_shrink: float = 1.05
    newton_max_iter: int = 50
    newton_tol: float = 1e-10
    ridge: float = 1e-8
    max_step_norm: float = 2.0
    # stochastic-approximation phase controls
    sa_initial_gain: float = 0.1
    sa_subphases: int = 4
    sa_base_iters: int = 64
    sa_steps_per_iter: int | None = None
    sa_rounds: int = 4

    def __post_init__(self):
        if self.method not in ("geyer-thompson", "stochastic-approximation"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.t_ratio_threshold <= 0:
            raise ValueError("t_ratio_threshold must be positive")


@dataclass
class FitResult:
    """Fitted coefficients with a single-graph-scale Fisher information
    estimate and the covariance implied by the effective weight.

    covariance = (1 / weight) * fisher_info^{-1}; wald_ci holds central
    95% intervals on that scale.
    """

    theta: np.ndarray
    fisher_info: np.ndarray
    weight: float
    covariance: np.ndarray
    converged: bool
    model: ModelSpec
    target: np.ndarray
    diagnostics: dict
    wald_ci: np.ndarray | None = None

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def rescaled(self, weight: float) -> "FitResult":
        """Same fit re-expressed for an effective sample size `weight`."""
        cov = _sym_inv(self.fisher_info) / weight
        sd = np.sqrt(np.diag(cov))
        ci = np.column_stack([self.theta - Z_95 * sd, self.theta + Z_95 * sd])
        return FitResult(
            theta=self.theta.copy(),
            fisher_info=self.fisher_info.copy(),
            weight=float(weight),
            covariance=cov,
            converged=self.converged,
            model=self.model,
            target=self.target.copy(),
            diagnostics=dict(self.diagnostics),
            wald_ci=ci,
        )


@dataclass
class HullCheckResult:
    """Outcome of the convex-hull membership test.

    status is "interior", "boundary", or "exterior"; margins holds the
    per-coordinate distance from the target to the nearer of the sampled
    min and max (negative when outside the componentwise range).
    epsilon is the largest uniform lower bound on barycentric weights
    expressing the target, positive only in the relative interior.
    degenerate flags batches whose statistics span fewer than p
    dimensions (reported, not fatal).
    """

    status: str
    margins: np.ndarray
    epsilon: float
    degenerate: bool

    @property
    def interior(self) -> bool:
        return self.status == "interior"


def _sym_inv(mat: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric PSD matrix with a ridge fallback."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    p = mat.shape[0]
    try:
        inv = scipy.linalg.inv(mat)
    except scipy.linalg.LinAlgError:
        ridge = 1e-10 * max(np.trace(mat) / p, 1.0)
        inv = scipy.linalg.inv(mat + ridge * np.eye(p))
    return (inv + inv.T) / 2.0


def hull_check(batch, target, tolerance: float = 1e-9) -> HullCheckResult:
    """Linear-programming membership test of a target in the convex hull
    of sampled statistic rows.

    Solves max eps s.t. sum_s w_s g_s = target, sum w = 1, w_s >= eps.
    A positive optimum certifies the relative interior; feasibility with
    eps ~ 0 is boundary; infeasibility is exterior.
    """
    stats = batch.stats if hasattr(batch, "stats") else np.asarray(batch, dtype=float)
    if stats.ndim != 2 or stats.shape[0] == 0:
        raise ValueError("hull check needs a nonempty 2-d batch of statistic rows")
    target = as_values(target)
    p = stats.shape[1]
    if target.shape != (p,):
        raise ValueError(f"target has shape {target.shape}, expected ({p},)")

    lo = stats.min(axis=0)
    hi = stats.max(axis=0)
    margins = np.minimum(target - lo, hi - target)

    centered = stats - stats.mean(axis=0)
    rank = np.linalg.matrix_rank(centered, tol=1e-9 * max(1.0, float(np.abs(stats).max())))
    degenerate = rank < p

    if np.any(margins < -tolerance):
        return HullCheckResult("exterior", margins, float("-inf"), degenerate)

    rows = np.unique(stats, axis=0)
    s = rows.shape[0]
    # variables: w_0..w_{s-1}, eps
    c = np.zeros(s + 1)
    c[-1] = -1.0
    a_eq = np.zeros((p + 1, s + 1))
    a_eq[:p, :s] = rows.T
    a_eq[p, :s] = 1.0
    b_eq = np.append(target, 1.0)
    # eps - w_s <= 0 for each s
    a_ub = scipy.sparse.hstack(
        [-scipy.sparse.identity(s, format="csc"), np.ones((s, 1))], format="csc"
    )
    b_ub = np.zeros(s)
    bounds = [(0, 1)] * s + [(None, 1)]
    res = scipy.optimize.linprog(
        c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs"
    )
    if not res.success:
        return HullCheckResult("exterior", margins, float("-inf"), degenerate)
    eps = float(-res.fun)
    status = "interior" if eps > tolerance else "boundary"
    return HullCheckResult(status, margins, eps, degenerate)


def t_ratios(stats: np.ndarray, target) -> np.ndarray:
    """(mean - target) / sd(statistic) per coordinate.

    Coordinates whose sampled statistic is constant get +-inf when the
    constant misses the target and NaN when it coincides with it; NaN is
    deliberately not a pass (a constant-at-target statistic is hull-face
    evidence, handled by the fitting loop).
    """
    target = as_values(target)
    mean = stats.mean(axis=0)
    sd = stats.std(axis=0, ddof=1)
    diff = mean - target
    out = np.empty_like(diff)
    for k in range(len(diff)):
        if sd[k] > 0:
            out[k] = diff[k] / sd[k]
        elif abs(diff[k]) <= 1e-12:
            out[k] = float("nan")
        else:
            out[k] = float(np.sign(diff[k]) * np.inf)
    return out


def _converged(tr: np.ndarray, threshold: float) -> bool:
    return bool(np.all(np.isfinite(tr)) and np.max(np.abs(tr)) < threshold)


def mple(problem: TargetProblem) -> np.ndarray:
    """Maximum pseudo-likelihood estimate on the reference graph.

    Logistic regression of free-dyad states on change statistics, by
    Newton-Raphson.  Used only to initialize the main estimators; under
    separation the drifting coefficients are clipped to +-MPLE_CLIP and
    a warning is emitted.
    """
    if problem.reference_graph is None:
        raise ValueError("MPLE needs a reference graph")
    graph = problem.reference_graph
    model, cov = problem.model, problem.covariates
    free = problem.constraint.free_dyads(graph.n)
    x = np.empty((len(free), model.p))
    y = np.empty(len(free))
    for d, (i, j) in enumerate(free):
        x[d] = change_statistics(model, graph, cov, (int(i), int(j))).values
        y[d] = 1.0 if graph.has_edge(int(i), int(j)) else 0.0

    beta = np.zeros(model.p)
    separated = False
    for _ in range(40):
        eta = np.clip(x @ beta, -30, 30)
        mu = scipy.special.expit(eta)
        w = mu * (1.0 - mu)
        grad = x.T @ (y - mu)
        hess = (x * w[:, None]).T @ x
        ridge = 1e-10 * max(np.trace(hess) / model.p, 1.0)
        try:
            step = scipy.linalg.solve(hess + ridge * np.eye(model.p), grad, assume_a="pos")
        except scipy.linalg.LinAlgError:
            step = scipy.linalg.solve(hess + 1e-4 * np.eye(model.p), grad)
        beta = beta + step
        if not np.all(np.isfinite(beta)) or np.max(np.abs(beta)) > MPLE_DRIFT:
            separated = True
            break
        if np.max(np.abs(step)) < 1e-10:
            break
    if separated or not np.all(np.isfinite(beta)):
        beta = np.clip(
            np.nan_to_num(beta, nan=0.0, posinf=MPLE_CLIP, neginf=-MPLE_CLIP),
            -MPLE_CLIP,
            MPLE_CLIP,
        )
        warnings.warn(
            "separation detected in pseudo-likelihood initializer; "
            f"coefficients clipped to +-{MPLE_CLIP}",
            stacklevel=2,
        )
    return beta


# ---------------------------------------------------------------------------
# Shared fitting-loop pieces
# ---------------------------------------------------------------------------


@dataclass
class _BatchFlags:
    """Degeneracy analysis of one sampled batch against the target.

    face: coordinates pinned constant AT the target value (the recession
    signature of a hull-face target).  stuck: coordinates pinned
    constant AWAY from the target (chain collapsed somewhere it cannot
    represent the target; recoverable by moving theta).
    """

    mean: np.ndarray
    sd: np.ndarray
    face: np.ndarray
    stuck: np.ndarray

    @property
    def any_face(self) -> bool:
        return bool(self.face.any())

    @property
    def any_stuck(self) -> bool:
        return bool(self.stuck.any())


def _batch_flags(stats: np.ndarray, target: np.ndarray, tol: float) -> _BatchFlags:
    mean = stats.mean(axis=0)
    sd = stats.std(axis=0, ddof=1)
    scale = np.maximum(np.abs(stats).max(axis=0), 1.0)
    degen = sd <= 1e-12 * scale
    off = np.abs(target - mean) > tol * scale
    return _BatchFlags(mean=mean, sd=sd, face=degen & ~off, stuck=degen & off)


class _HullMonitor:
    """Accumulates hull-face evidence across outer iterations.

    hull_patience consecutive iterations with face-pinned coordinates
    (or with no usable step length at all) raise HullInfeasibleError;
    unstick_patience consecutive collapsed-batch nudges do too (a target
    beyond an achievable ceiling keeps the statistic pinned no matter
    how far theta runs).
    """

    def __init__(self, names, patience: int, unstick_patience: int):
        self.names = list(names)
        self.patience = patience
        self.unstick_patience = unstick_patience
        self.consecutive = 0
        self.unsticks = 0
        self.last_offenders = ()

    def hit(self):
        self.consecutive = 0

    def _raise(self, offenders, margins=None):
        named = [self.names[k] for k in offenders] or self.names
        raise HullInfeasibleError(
            "target statistics appear to lie on or outside the convex hull of "
            f"achievable statistics (offending coordinate(s): {', '.join(named)}); "
            "no finite maximizer exists. A coordinate constant on the whole "
            "support would indicate a non-identifiable model instead.",
            coordinates=named,
            margins=margins,
        )

    def miss(self, offenders, margins=None):
        self.consecutive += 1
        self.last_offenders = tuple(offenders)
        if self.consecutive >= self.patience:
            self._raise(offenders, margins)

    def unstick(self, offenders):
        self.unsticks += 1
        if self.unsticks >= self.unstick_patience:
            self._raise(offenders)


def _choose_gamma(stats: np.ndarray, target: np.ndarray, cfg: EstimatorConfig) -> float:
    """Largest step-length factor whose blended target sits inside the
    sample hull shrunk toward its mean by cfg.hull_shrink (so the Newton
    stage never chases a point the sample cannot support).

    Returns a factor in [0, 1]; 0 means even a tiny step is outside the
    shrunk hull (collapsed or off-span batch).
    """
    mean = stats.mean(axis=0)
    shrunk = mean + (stats - mean) / cfg.hull_shrink
    if hull_check(shrunk, target, cfg.hull_tolerance).interior:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(12):
        mid = (lo + hi) / 2.0
        cand = mid * target + (1.0 - mid) * mean
        if hull_check(shrunk, cand, cfg.hull_tolerance).interior:
            lo = mid
        else:
            hi = mid
    return lo


def _newton_importance(theta, stats, work_target, cfg: EstimatorConfig, step_cap=None):
    """Maximize the importance-sampled log-likelihood ratio around theta.

    l(theta + d) - l(theta) = d . target - log mean_s exp(d . g_s); the
    gradient is target - E_w g and the Hessian is -Cov_w g under weights
    w ~ exp(d . g_s).  Steps are damped so the effective sample size of
    the weights stays usable, and the total move per call is capped (the
    importance approximation is only trusted locally).
    """
    cap = cfg.max_step_norm if step_cap is None else step_cap
    stats = np.asarray(stats, dtype=float)
    s, p = stats.shape
    d = np.zeros(p)
    min_ess = max(p + 2.0, 0.05 * s)
    scale = np.maximum(np.abs(work_target), 1.0)
    sd = stats.std(axis=0, ddof=1)
    if float(np.max(sd)) <= 1e-12:
        return theta.copy()  # batch carries no slope information
    for _ in range(cfg.newton_max_iter):
        lw = stats @ d
        lw -= scipy.special.logsumexp(lw)
        w = np.exp(lw)
        mu = w @ stats
        grad = work_target - mu
        if np.max(np.abs(grad) / scale) < cfg.newton_tol:
            break
        centered = stats - mu
        hess = (centered * w[:, None]).T @ centered
        hess = (hess + hess.T) / 2.0
        ridge = cfg.ridge * max(np.trace(hess) / p, 1.0)
        try:
            step = scipy.linalg.solve(hess + ridge * np.eye(p), grad, assume_a="pos")
        except scipy.linalg.LinAlgError:
            step = scipy.linalg.solve(
                hess + 1e-4 * max(np.trace(hess) / p, 1.0) * np.eye(p), grad
            )
        norm = float(np.max(np.abs(step)))
        if norm > cap:
            step *= cap / norm
        # keep the importance weights alive: halve until ESS is acceptable
        for _ in range(30):
            lw_try = stats @ (d + step)
            lw_try -= scipy.special.logsumexp(lw_try)
            ess = 1.0 / float(np.sum(np.exp(lw_try) ** 2))
            if ess >= min_ess:
                break
            step *= 0.5
        d = d + step
        total = float(np.max(np.abs(d)))
        if total > cap:
            d *= cap / total
            break
        if float(np.max(np.abs(step))) < cfg.newton_tol:
            break
    return theta + d


def _final_fisher(chain: Chain, cfg: EstimatorConfig, thin: int, reburn: int, target):
    """Fresh, larger sample at the solution for the information estimate."""
    chain.advance(reburn)
    n_draws = cfg.chain.n_draws * cfg.fisher_draw_factor
    stats, _ = chain.sample(n_draws, thin)
    fisher = estimate_statistic_covariance(stats)
    tr = t_ratios(stats, target)
    return fisher, stats, tr


def _problem_start(problem: TargetProblem) -> Graph:
    if problem.reference_graph is None:
        raise ValueError("fitting needs a reference graph for the chain start")
    g = problem.reference_graph.copy()
    problem.constraint.apply_to(g)
    return g


def _density_start(problem: TargetProblem) -> np.ndarray:
    """Bernoulli-equivalent fallback start: logit of the reference-graph
    density on edge-count coordinates, zero elsewhere.  Always produces a
    well-mixing first batch, unlike a separated pseudo-likelihood fit."""
    g = problem.reference_graph
    n_dyads = g.n * (g.n - 1) / 2.0
    dens = min(max(g.n_edges / n_dyads, 0.5 / n_dyads), 1.0 - 0.5 / n_dyads)
    theta = np.zeros(problem.model.p)
    for k, term in enumerate(problem.model.terms):
        if term.kind == "edges":
            theta[k] = float(np.log(dens / (1.0 - dens)))
    return theta


def _free_dyad_density(problem: TargetProblem, edge_count: float) -> float:
    n = problem.reference_graph.n
    fixed_present = len(problem.constraint.fixed_present)
    free = n * (n - 1) / 2.0 - fixed_present - len(problem.constraint.fixed_absent)
    free = max(free, 1.0)
    dens = (edge_count - fixed_present) / free
    return float(min(max(dens, 0.5 / free), 1.0 - 0.5 / free))


def _intercept_shift(theta: np.ndarray, problem: TargetProblem, target: np.ndarray) -> np.ndarray:
    """Density-match the edge-count coordinate(s) of the starting theta.

    A blended (prior-weighted) target can sit at a very different density
    than the reference graph the pseudo-likelihood initializer saw;
    shifting the intercept by the logit-density gap starts the chain in
    the target's density regime instead of forcing the optimizer to
    traverse it.
    """
    edges_idx = [k for k, t in enumerate(problem.model.terms) if t.kind == "edges"]
    if not edges_idx:
        return theta
    k = edges_idx[0]
    p_target = _free_dyad_density(problem, target[k])
    p_ref = _free_dyad_density(problem, problem.reference_graph.n_edges)
    shift = float(scipy.special.logit(p_target) - scipy.special.logit(p_ref))
    if abs(shift) > 0.5:
        theta = theta.copy()
        for k in edges_idx:
            theta[k] += shift
    return theta


def _attainable_min_precheck(model: ModelSpec, target: np.ndarray, tol: float):
    """Fail fast on targets at or below a counting statistic's smallest
    attainable value: such a target sits on a face of (or outside) the
    achievable hull and the MLE diverges along a recession direction.
    Support constraints can only raise these minima, never lower them.
    """
    offenders = []
    for k, term in enumerate(model.terms):
        lb = term.lower_bound()
        if lb is not None and target[k] <= lb + tol:
            offenders.append(k)
    if offenders:
        names = [model.stat_names()[k] for k in offenders]
        raise HullInfeasibleError(
            f"target coordinate(s) {', '.join(names)} are at or below the smallest "
            "attainable value of the statistic; the MLE does not exist (consider a "
            "conjugate prior with interior expectation as a regularizer). A "
            "statistic that is zero on the whole support would make the model "
            "non-identifiable instead.",
            coordinates=names,
            margins=None,
        )


def _identifiability_guard(stats: np.ndarray, model: ModelSpec):
    """Loud failure when two statistics are perfectly collinear across a
    long batch (duplicate-in-disguise or support-constant terms make the
    Fisher information exactly singular)."""
    if stats.shape[0] <= stats.shape[1]:
        return
    sd = stats.std(axis=0, ddof=1)
    scale = np.maximum(np.abs(stats).max(axis=0), 1.0)
    centered = (stats - stats.mean(axis=0)) / scale
    corr = centered.T @ centered
    diag = np.sqrt(np.maximum(np.diag(corr), 1e-300))
    corr = corr / diag / diag[:, None]
    for a in range(model.p):
        for b in range(a + 1, model.p):
            if sd[a] > 0 and sd[b] > 0 and abs(corr[a, b]) > 1.0 - 1e-12:
                raise NonIdentifiableModelError(
                    f"statistics '{model.stat_names()[a]}' and "
                    f"'{model.stat_names()[b]}' are perfectly collinear across "
                    "sampled graphs; the Fisher information is singular"
                )


def _build_result(theta, fisher, converged, model, target, diagnostics) -> FitResult:
    cov = _sym_inv(fisher)
    sd = np.sqrt(np.diag(cov))
    ci = np.column_stack([theta - Z_95 * sd, theta + Z_95 * sd])
    return FitResult(
        theta=theta,
        fisher_info=fisher,
        weight=1.0,
        covariance=cov,
        converged=converged,
        model=model,
        target=np.asarray(target, dtype=float).copy(),
        diagnostics=diagnostics,
        wald_ci=ci,
    )


def fit(problem: TargetProblem, cfg: EstimatorConfig | None = None) -> FitResult:
    """Dispatch on cfg.method."""
    cfg = cfg or EstimatorConfig()
    if cfg.method == "stochastic-approximation":
        return fit_stochastic_approximation(problem, cfg)
    return fit_geyer_thompson(problem, cfg)


def fit_geyer_thompson(problem: TargetProblem, cfg: EstimatorConfig | None = None) -> FitResult:
    cfg = cfg or EstimatorConfig()
    model = problem.model
    target = as_values(problem.target)
    _attainable_min_precheck(model, target, cfg.hull_tolerance)
    if cfg.theta0 is not None:
        theta = np.asarray(cfg.theta0, dtype=float)
    else:
        theta = _intercept_shift(mple(problem), problem, target)

    start = _problem_start(problem)
    n = start.n
    burn, thin = cfg.chain.resolved(n)
    reburn = max(1, int(burn * cfg.reburn_fraction))
    chain = Chain(
        model, problem.covariates, problem.constraint, start,
        seed=derive_seed(cfg.chain.seed, 101), theta=theta,
    )
    chain.advance(burn)

    monitor = _HullMonitor(model.stat_names(), cfg.hull_patience, cfg.unstick_patience)
    gammas: list[float] = []
    last_tr = None
    anchor = None  # last theta whose batch was non-collapsed
    converged = False
    iterations = 0
    step_cap = cfg.max_step_norm
    used_density_fallback = False
    for it in range(cfg.max_outer):
        iterations = it + 1
        stats, _ = chain.sample(cfg.chain.n_draws, thin)
        if it == 0:
            _identifiability_guard(stats, model)
        tr = t_ratios(stats, target)
        last_tr = tr
        if _converged(tr, cfg.t_ratio_threshold):
            if cfg.hotelling_pvalue is None or hotelling_pvalue(stats, target) > cfg.hotelling_pvalue:
                converged = True
                break

        flags = _batch_flags(stats, target, cfg.hull_tolerance)
        if flags.any_face:
            monitor.miss(list(np.flatnonzero(flags.face)))
        gamma = _choose_gamma(stats, target, cfg) if not flags.any_stuck else 0.0
        gammas.append(gamma)
        if flags.any_stuck or gamma <= 0.01:
            # chain collapsed somewhere that cannot support any step
            # toward the target: retry once from the density-only start
            # (a separated pseudo-likelihood initializer can land here),
            # else back up halfway to the last healthy iterate with a
            # tighter step cap, else nudge the offending coefficients
            step_cap = max(step_cap / 2.0, 0.25)
            if anchor is None and not used_density_fallback:
                used_density_fallback = True
                theta = _density_start(problem)
            elif anchor is not None and np.max(np.abs(theta - anchor)) > 1e-9:
                theta = (theta + anchor) / 2.0
            elif flags.any_stuck:
                monitor.unstick(list(np.flatnonzero(flags.stuck)))
                theta = theta + np.sign(target - flags.mean) * flags.stuck
            chain.set_theta(theta)
            chain.advance(reburn)
            continue
        if not flags.any_face:
            monitor.hit()
        work = gamma * target + (1.0 - gamma) * flags.mean
        if gamma >= 0.2:
            anchor = theta  # only well-supported iterates are worth returning to
        theta = _newton_importance(theta, stats, work, cfg, step_cap)
        step_cap = min(step_cap * 1.25, cfg.max_step_norm)
        chain.set_theta(theta)
        chain.advance(reburn)

    fisher, fstats, ftr = _final_fisher(chain, cfg, thin, reburn, target)
    if hull_check(fstats, target, cfg.hull_tolerance).interior:
        # one-step refinement on the big final batch: near the solution
        # the importance correction is almost unbiased and shaves off
        # most of the residual Monte Carlo error
        theta = _newton_importance(theta, fstats, target, cfg)
    diagnostics = {
        "method": "geyer-thompson",
        "iterations": iterations,
        "final_t_ratios": ftr,
        "mc_draws": cfg.chain.n_draws,
        "fisher_draws": fstats.shape[0],
        "mcse": batch_means_se(fstats),
        "accept_rate": chain.accept_rate,
        "gamma_history": gammas,
    }
    if not converged:
        msg = np.nanmax(np.abs(last_tr)) if last_tr is not None else float("nan")
        warnings.warn(
            f"Geyer-Thompson did not converge in {cfg.max_outer} iterations "
            f"(max |t| = {msg:.3f}); returning the partial fit",
            stacklevel=2,
        )
    return _build_result(theta, fisher, converged, model, target, diagnostics)


def fit_stochastic_approximation(
    problem: TargetProblem, cfg: EstimatorConfig | None = None
) -> FitResult:
    cfg = cfg or EstimatorConfig()
    model = problem.model
    target = as_values(problem.target)
    _attainable_min_precheck(model, target, cfg.hull_tolerance)
    if cfg.theta0 is not None:
        theta = np.asarray(cfg.theta0, dtype=float)
    else:
        theta = _intercept_shift(mple(problem), problem, target)

    start = _problem_start(problem)
    n = start.n
    burn, thin = cfg.chain.resolved(n)
    reburn = max(1, int(burn * cfg.reburn_fraction))
    sa_steps = cfg.sa_steps_per_iter if cfg.sa_steps_per_iter is not None else max(2 * n, thin // 10)
    chain = Chain(
        model, problem.covariates, problem.constraint, start,
        seed=derive_seed(cfg.chain.seed, 202), theta=theta,
    )
    chain.advance(burn)

    monitor = _HullMonitor(model.stat_names(), cfg.hull_patience, cfg.unstick_patience)
    converged = False
    rounds = 0
    gain0 = cfg.sa_initial_gain
    last_tr = None
    best_theta = theta.copy()
    best_score = float("inf")
    for rnd in range(cfg.sa_rounds):
        rounds = rnd + 1
        # Phase 1: scaling matrix from a short run at the current theta
        n1 = max(model.p + 2, cfg.chain.n_draws // 4)
        stats1, _ = chain.sample(n1, thin)
        if rnd == 0:
            _identifiability_guard(stats1, model)
        flags = _batch_flags(stats1, target, cfg.hull_tolerance)
        if flags.any_stuck:
            if rnd == 0:
                theta = _density_start(problem)  # separated initializer rescue
            else:
                monitor.unstick(list(np.flatnonzero(flags.stuck)))
                theta = theta + np.sign(target - flags.mean) * flags.stuck
            chain.set_theta(theta)
            chain.reset_graph(start)
            chain.advance(reburn)
            continue
        if flags.any_face:
            monitor.miss(list(np.flatnonzero(flags.face)))
        gamma = _choose_gamma(stats1, target, cfg)
        work = gamma * target + (1.0 - gamma) * flags.mean if gamma > 0 else flags.mean
        # Var(g) at a theta far from the solution is a poor Jacobian
        # surrogate; flooring its spectrum bounds the amplification of
        # low-variance coordinates and keeps the updates stable
        d_mat = estimate_statistic_covariance(stats1)
        evals, evecs = scipy.linalg.eigh(d_mat)
        floor = max(float(evals.max()), 1e-12) / 25.0
        d_inv = (evecs / np.maximum(evals, floor)) @ evecs.T

        # Phase 2: Robbins-Monro subphases with halving gains and
        # iterate averaging.  The chain state is re-equilibrated from the
        # reference start at each subphase so that mode hysteresis (a
        # chain stranded in a high-density basin after theta has moved
        # on) cannot drag the iterates; a trust radius around the round
        # start bounds the excursions in between.
        theta_start = theta.copy()
        gain = gain0
        for sub in range(cfg.sa_subphases):
            chain.reset_graph(start)
            chain.advance(reburn)
            iters = cfg.sa_base_iters * (2**sub)
            acc = np.zeros(model.p)
            count = 0
            for t in range(iters):
                chain.advance(sa_steps)
                g_now = chain.current_stats()
                step = gain * (d_inv @ (g_now - work))
                norm = float(np.max(np.abs(step)))
                if norm > 0.25:
                    step *= 0.25 / norm
                theta = np.clip(theta - step, theta_start - 3.0, theta_start + 3.0)
                chain.set_theta(theta)
                if t >= iters // 2:
                    acc += theta
                    count += 1
            theta = acc / max(count, 1)
            chain.set_theta(theta)
            gain *= 0.5
        chain.reset_graph(start)

        # Phase 3: convergence check on a long run
        chain.advance(reburn)
        stats3, _ = chain.sample(cfg.chain.n_draws, thin)
        tr = t_ratios(stats3, target)
        last_tr = tr
        score = float(np.nanmax(np.abs(tr))) if np.all(np.isfinite(tr)) else float("inf")
        if score < best_score:
            best_score = score
            best_theta = theta.copy()
        if _converged(tr, cfg.t_ratio_threshold):
            if cfg.hotelling_pvalue is None or hotelling_pvalue(stats3, target) > cfg.hotelling_pvalue:
                converged = True
                break
        flags3 = _batch_flags(stats3, target, cfg.hull_tolerance)
        if flags3.any_face:
            monitor.miss(list(np.flatnonzero(flags3.face)))
        # restart the next round from the best iterate seen, more gently
        theta = best_theta.copy()
        chain.set_theta(theta)
        gain0 *= 0.5

    theta = best_theta if not converged else theta
    chain.set_theta(theta)
    fisher, fstats, ftr = _final_fisher(chain, cfg, thin, reburn, target)
    if hull_check(fstats, target, cfg.hull_tolerance).interior:
        theta = _newton_importance(theta, fstats, target, cfg)
    diagnostics = {
        "method": "stochastic-approximation",
        "rounds": rounds,
        "final_t_ratios": ftr,
        "mc_draws": cfg.chain.n_draws,
        "fisher_draws": fstats.shape[0],
        "mcse": batch_means_se(fstats),
        "accept_rate": chain.accept_rate,
    }
    if not converged:
        msg = np.nanmax(np.abs(last_tr)) if last_tr is not None else float("nan")
        warnings.warn(
            f"stochastic approximation did not converge in {cfg.sa_rounds} rounds "
            f"(max |t| = {msg:.3f}); returning the partial fit",
            stacklevel=2,
        )
    return _build_result(theta, fisher, converged, model, target, diagnostics)
