"""Sufficient dimension reduction for manifold-valued responses.

Implements the intrinsic MAVE (iMAVE) and intrinsic OPG (iOPG) estimators
for responses on the SPD manifold (log-Euclidean or log-Cholesky metric) or
the unit sphere, together with leave-one-out cross-validation for the
structural dimension, seeded simulation-study generators, and a
replication harness.
"""

from .dataio import read_dataset, write_dataset
from .dimension import CvResult, cv_value, nw_loo_predict, select_dimension
from .errors import (
    ConfigError,
    ConvergenceError,
    DatasetError,
    DegenerateNeighborhoodError,
    DomainError,
    EstimationError,
    GenerationError,
    RankDeficiencyError,
    SdrError,
    SingularityError,
    ValidationError,
)
from .estimators import (
    METHOD_NAMES,
    EmbeddedSample,
    FitOptions,
    FitResult,
    embed_responses,
    fit_method,
    imave_fit,
    iopg_fit,
    orthonormalize,
    parse_method,
    standardize_predictors,
    subspace_error,
)
from .evaluation import (
    CvStudyResult,
    ExperimentResult,
    run_cv_study,
    run_paired_replications,
    run_replications,
    study_fit_options,
    write_results_csv,
    write_summary_csv,
)
from .local_fit import LocalFit, local_linear_fit
from .manifolds import (
    chol_map,
    chol_map_inverse,
    cholesky_factor,
    dist_log_cholesky,
    dist_log_euclidean,
    frechet_mean_sphere,
    group_op,
    spd_exp,
    spd_log,
    sphere_exp,
    sphere_log,
    sym_dim,
    tangent_frame,
    unvecl,
    unvecs,
    vecl,
    vecs,
)
from .simgen import (
    GeneratedData,
    ModelSpec,
    derive_seed,
    generate,
    sym_matrix_normal,
)
from .smoothing import (
    BandwidthSchedule,
    KernelSpec,
    initial_bandwidth,
    kernel_eval,
    local_weights,
    next_bandwidth,
    silverman_bandwidth,
)

__version__ = "0.1.0"
