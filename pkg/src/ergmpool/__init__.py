"""Pooled ERGM inference on graph sets with a shared vertex set.

Fitting m IID graph observations costs one single-graph fit: the MLE
depends on the data only through the mean of the sufficient statistics,
and the information matrix rescales by m.  The same mean-value reduction
gives conjugate MAP estimates (blend the mean statistics with a prior
expectation) and Laplace-approximate posteriors at no extra cost.
"""

from .errors import (
    ConstrainedDyadError,
    ConstraintViolationError,
    DimensionMismatchError,
    DuplicateTermError,
    EmptySetError,
    EnumerationCapError,
    ErgmPoolError,
    GraphFormatError,
    HullInfeasibleError,
    InsufficientSampleError,
    InvalidProbabilityError,
    MissingCovariateError,
    NoFreeDyadError,
    NonIdentifiableModelError,
    NotPositiveDefiniteError,
    PriorModelMismatchError,
    SizeMismatchError,
    UnknownLevelError,
)
from .graphs import (
    CovariateSet,
    Graph,
    GraphSet,
    SupportConstraint,
    hamming_distance,
    read_graph_set,
    toggle_dyad,
    write_graph_set,
)
from .terms import (
    EdgecovTerm,
    EdgesTerm,
    GwespTerm,
    ModelSpec,
    NodecovTerm,
    NodematchTerm,
    NodemixTerm,
    OpenTwoPathsTerm,
    StatVector,
    TrianglesTerm,
    TwoStarsTerm,
    change_statistics,
    parse_model_file,
    parse_model_text,
    statistics,
    statistics_mean,
)
from .sampler import (
    ChainConfig,
    SampleBatch,
    estimate_statistic_covariance,
    sample_bernoulli,
    sample_ergm,
)
from .estimator import (
    EstimatorConfig,
    FitResult,
    TargetProblem,
    fit,
    fit_geyer_thompson,
    fit_stochastic_approximation,
    hull_check,
    mple,
)
from .pooled import (
    PosteriorResult,
    PriorSpec,
    bernoulli_natural_params,
    build_bernoulli_prior,
    conjugate_map,
    load_prior,
    pooled_mle,
    posterior_sample,
    protein_mean_degree,
    relative_prior_weight,
    save_prior,
    tune_delta_cv,
)
from .oracle import (
    EnumerationTable,
    enumerate_graphs,
    exact_covariance,
    exact_mean,
    exact_mle,
    exact_probabilities,
    exact_psi,
)
from .diagnostics import (
    CoverageStudyConfig,
    DeltaSweepConfig,
    GliReport,
    GofReport,
    gli_report,
    gof,
    graph_level_indices,
    run_coverage_study,
    run_delta_sweep,
)

__version__ = "0.1.0"
