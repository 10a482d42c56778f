"""Functional AR(1) simulation, estimation and consistency diagnostics.

The package simulates a first-order autoregressive process in a truncated
spectral basis on [0, 1], estimates the autocorrelation operator with a
truncated componentwise estimator built from empirical covariance
eigenpairs, and reports one-step prediction errors in a wavelet-domain
sup norm together with the quantities that certify estimator consistency.
"""

from .diagnostics import (
    ConsistencyReport,
    ExperimentResult,
    consistency_ratio,
    eigen_decay_report,
    empirical_mse_curve,
    exceedance_bound,
    exceedance_table,
    hilbert_schmidt_distance,
    trace_embedding_report,
)
from .estimation import (
    EigenGapError,
    EstimatorState,
    TruncationRankError,
    TruncationRule,
    eigen_decompose,
    empirical_covariance,
    empirical_cross_covariance,
    fit_estimator,
    gap_coefficients,
    max_inverse_gap,
    plug_in_predict,
    prediction_error_besov,
    sign_align,
    truncation_order,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    StationarityError,
    parse_config,
    read_estimator_csv,
    run_experiment,
    write_estimator_csv,
)
from .model import (
    ModelParams,
    NoiseCovarianceError,
    SpectralOperator,
    Trajectory,
    build_covariance,
    build_noise_covariance,
    build_rho,
    check_stationarity,
    covariance_kernel,
    eigenfunction_on_grid,
    evaluate_on_grid,
    sample_initial_condition,
    simulate_trajectory,
    stationary_covariance,
)
from .wavelet import (
    GelfandWeights,
    WaveletBasisSpec,
    WaveletCoeffs,
    besov_l1_norm,
    besov_sup_norm,
    daubechies_filter,
    dwt_forward,
    dwt_inverse,
    make_gelfand_weights,
    weighted_norm,
)

__version__ = "0.1.0"
