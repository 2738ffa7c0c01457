"""Sparsity-inducing truncated-gradient iterative regularization for
ill-posed linear inverse problems, with ISTA/FISTA baselines, stopping
rules, and a Gaussian-blur deblurring test bed."""

from .errors import ConfigurationError, NumericError
from .linops import (
    DenseOperator,
    GaussianBlurOperator,
    LinearOperator,
    adjoint_check,
    apply,
    apply_adjoint,
    make_gaussian_blur,
    operator_norm_estimate,
)
from .problems import (
    ImageGrid,
    NoiseSpec,
    add_noise,
    relative_error,
    residual_relative_percent,
    sparsity_count,
    synth_dense_image,
    synth_sparse_image,
)
from .solvers import (
    BoundConstraint,
    ExactLineSearch,
    FixedStep,
    IterationRecord,
    IterationState,
    NuAccelerated,
    RunReport,
    fista,
    gradient,
    ista,
    nu_coefficients,
    nu_descent,
    project_lower_bound,
    step_length,
    tg_descent,
)
from .stopping import (
    Discrepancy,
    MaxIter,
    MdpConfig,
    Never,
    Snapshot,
    dp_should_stop,
    mdp_capture,
    mdp_select,
    mdp_thresholds,
)
from .threshold import (
    AlphaPercent,
    FixedLambda,
    MaxCombo,
    MinCombo,
    NoTruncation,
    TopK,
    apply_rule,
    lambda_from_alpha,
    soft_threshold,
    truncate_fixed,
    truncate_max_combo,
    truncate_min_combo,
    truncate_topk,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "NumericError",
    "LinearOperator", "DenseOperator", "GaussianBlurOperator", "make_gaussian_blur",
    "apply", "apply_adjoint", "operator_norm_estimate", "adjoint_check",
    "ImageGrid", "NoiseSpec", "synth_sparse_image", "synth_dense_image", "add_noise",
    "relative_error", "sparsity_count", "residual_relative_percent",
    "BoundConstraint", "FixedStep", "ExactLineSearch", "NuAccelerated",
    "IterationState", "IterationRecord", "RunReport",
    "gradient", "step_length", "project_lower_bound", "nu_coefficients",
    "tg_descent", "ista", "fista", "nu_descent",
    "MaxIter", "Discrepancy", "Never", "MdpConfig", "Snapshot",
    "dp_should_stop", "mdp_thresholds", "mdp_capture", "mdp_select",
    "NoTruncation", "FixedLambda", "AlphaPercent", "TopK", "MinCombo", "MaxCombo",
    "apply_rule", "truncate_fixed", "lambda_from_alpha", "truncate_topk",
    "truncate_min_combo", "truncate_max_combo", "soft_threshold",
]
