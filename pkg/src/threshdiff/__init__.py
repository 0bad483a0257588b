"""Threshold diffusion simulation, estimation, and limit-law verification.

The drift of these scalar diffusions switches between regimes at unknown
threshold levels, which makes the likelihood discontinuous in the
threshold: estimators converge at rate T rather than sqrt(T), with
non-Gaussian limit laws.  The package simulates the models, computes the
threshold and rate estimators, draws from the limit distributions, and
checks goodness of fit and robustness to trend misspecification.
"""

from .errors import (
    ThreshDiffError, InvalidThresholdOrder, DegenerateSigma, NonErgodicModel,
    IndexOutOfRange, NumericalBlowup, EmptyBox, RegimeStarved,
    ConventionViolation, QuadratureFailure, BoundaryHit, ConfigError,
    FailureRateExceeded,
)
from .models import (
    TOU, SimpleThreshold, SimpleSwitching, MultiThresholdOU,
    GeneralThreshold, PiecewiseLinearDrift,
    regime_index, trend_eval, sigma_eval,
    invariant_density, invariant_cdf, invariant_cdf_inverse,
    stationary_moment, gamma_sq, rate_error_variance,
    with_thresholds, model_id, model_to_dict, model_from_dict,
)
from .simulate import (
    RngStream, Fixed, Stationary, Burnin, Path,
    simulate_path, path_slice, empirical_cdf, local_time_density,
    path_to_csv, path_from_csv,
)
from .likelihood import (
    loglik_tou, loglik_general, loglik_curve, LogLikCurve, curve_to_csv,
)
from .estimators import (
    ThresholdEstimate, mle_threshold, bayes_threshold, joint_estimate_tou3,
    two_stage_estimate, mom_switching, windowed_mle_switching,
    estimate_to_json, estimate_from_json,
)
from .limitlaws import (
    UHAT_SECOND_MOMENT, UTILDE_SECOND_MOMENT, FUNCTIONAL_TAGS,
    LimitLawSamples, QuantileTable, sample_uhat_utilde,
    sample_brownian_functional, quantile_table, write_table, read_table,
    predicted_error_scale,
)
from .gof import (
    GofReport, w2_statistic, d_statistic, v2_statistic, psi_function,
    gof_test, composite_test, ks_distance_to_table, table_tag,
)
from .misspec import (
    Contamination, contamination_from_csv, mirror_tou, contaminated_model,
    contaminated_density, condition7_check, kl_profile, kl_derivative,
    misspec_experiment,
)
from .harness import (
    ExperimentConfig, ExperimentReport, run_experiment, build_tables,
    config_from_json,
)

__version__ = "0.1.0"

__all__ = [
    "ThreshDiffError", "InvalidThresholdOrder", "DegenerateSigma",
    "NonErgodicModel", "IndexOutOfRange", "NumericalBlowup", "EmptyBox",
    "RegimeStarved", "ConventionViolation", "QuadratureFailure",
    "BoundaryHit", "ConfigError", "FailureRateExceeded",
    "TOU", "SimpleThreshold", "SimpleSwitching", "MultiThresholdOU",
    "GeneralThreshold", "PiecewiseLinearDrift",
    "regime_index", "trend_eval", "sigma_eval",
    "invariant_density", "invariant_cdf", "invariant_cdf_inverse",
    "stationary_moment", "gamma_sq", "rate_error_variance",
    "with_thresholds", "model_id", "model_to_dict", "model_from_dict",
    "RngStream", "Fixed", "Stationary", "Burnin", "Path",
    "simulate_path", "path_slice", "empirical_cdf", "local_time_density",
    "path_to_csv", "path_from_csv",
    "loglik_tou", "loglik_general", "loglik_curve", "LogLikCurve",
    "curve_to_csv",
    "ThresholdEstimate", "mle_threshold", "bayes_threshold",
    "joint_estimate_tou3", "two_stage_estimate", "mom_switching",
    "windowed_mle_switching", "estimate_to_json", "estimate_from_json",
    "UHAT_SECOND_MOMENT", "UTILDE_SECOND_MOMENT", "FUNCTIONAL_TAGS",
    "LimitLawSamples", "QuantileTable", "sample_uhat_utilde",
    "sample_brownian_functional", "quantile_table", "write_table",
    "read_table", "predicted_error_scale",
    "GofReport", "w2_statistic", "d_statistic", "v2_statistic",
    "psi_function", "gof_test", "composite_test", "ks_distance_to_table",
    "table_tag",
    "Contamination", "contamination_from_csv", "mirror_tou",
    "contaminated_model", "contaminated_density", "condition7_check",
    "kl_profile", "kl_derivative", "misspec_experiment",
    "ExperimentConfig", "ExperimentReport", "run_experiment",
    "build_tables", "config_from_json",
]
