"""Anomaly scores and per-variable responsibility for black-box regressors.

Given query access to a trained regression model and a batch of test
samples, this package scores how surprising each observed target is under
a locally estimated Gaussian noise model, and explains the surprise by
solving for the smallest per-variable input correction that would
reconcile the model with the observation. Z-score, local-lasso and
Shapley-value baselines are included for comparison.
"""

__version__ = "0.1.0"

from .baselines import (
    BackgroundDistribution,
    aggregate_group_lime,
    aggregate_group_mean,
    aggregate_group_z,
    lime_plus,
    sv_plus,
    z_score,
)
from .core import (
    AttributionResult,
    Dataset,
    Diagnostics,
    LcHyperParams,
    METHODS,
    Sample,
    Standardizer,
    ValidationIssue,
    ValidationReport,
    fit_standardizer,
    validate_dataset,
)
from .errors import (
    ConstantColumn,
    DegenerateWeightsWarning,
    DimensionMismatch,
    EmptyBackground,
    ExactTooLarge,
    ExternalModelFailure,
    LcattrError,
    MissingColumn,
    NoConvergence,
    ParseError,
    SingularSystem,
    ValidationError,
)
from .ingest import ingest_csv
from .models import (
    ExternalModel,
    LinearModel,
    MexicanHat,
    Model,
    PiecewiseStep,
    StandardizedModel,
    parse_model_spec,
)
from .runner import (
    AttributionReport,
    ReportRecord,
    RunConfig,
    emit_plot_series,
    experiment_mexican_hat,
    parse_background,
    run,
)
from .solver import SolverState, lc_objective, phi_update, soft_threshold, solve_lc
from .stats import (
    AnomalyReport,
    VarianceEstimate,
    anomaly_score,
    kernel_weight,
    kernel_weights,
    local_variance,
    loo_variances,
    weighted_residual_variance,
)
from .surrogate import (
    LinearFit,
    VicinitySample,
    ridge_gradient,
    sample_vicinity,
    weighted_lasso,
)
