"""Scaling-aware covariance estimation and portfolio construction.

The pipeline: load or simulate a return panel (`timeseries`, `synth`),
measure how fluctuations grow with the observation scale (`scaling`),
estimate covariances at several scales and blend them (`covariance`),
build fully-invested portfolios with verified optimality conditions
(`optimizer`), and evaluate everything walk-forward (`backtest`).
"""

from .backtest import (
    BacktestConfig,
    BacktestReport,
    ComparisonTable,
    PerformanceMetrics,
    compare,
    metrics,
    run_backtest,
    standard_comparison_configs,
)
from .covariance import (
    MultiscaleCovariance,
    ScaledCovarianceSet,
    build_covariance_set,
    cov_at_scale,
    multiscale_cov,
    psd_repair,
)
from .errors import DataError, MultiscaleError, NumericalError
from .optimizer import (
    PortfolioWeights,
    SensitivityReport,
    TargetCurveReport,
    average_weights_across_scales,
    check_target_curve,
    correlation_sensitivity,
    correlation_sensitivity_analytic,
    max_sharpe,
    min_variance_closed_form,
    min_variance_long_only,
    sensitivity_to_hurst,
    sensitivity_to_variance,
)
from .scaling import (
    CorrelationScaling,
    HurstEstimate,
    PowerLawFit,
    ScalingSpectrum,
    estimate_correlation_scaling,
    estimate_hurst,
    fit_scaling_exponent,
    mfdfa,
    structure_function,
    structure_spectrum,
)
from .synth import (
    GeneratorSpec,
    gen_correlated,
    gen_epps,
    gen_fgn,
    gen_gaussian_iid,
    gen_multifractal,
    gen_regime_switch,
    gen_stable_iid,
    generate,
    split_seed,
)
from .timeseries import (
    PriceSeries,
    ReturnPanel,
    aggregate,
    all_phase_aggregates,
    load_prices,
    panel_from_returns,
    to_log_returns,
    to_price_series,
)

__version__ = "0.1.0"

__all__ = [
    "BacktestConfig",
    "BacktestReport",
    "ComparisonTable",
    "CorrelationScaling",
    "DataError",
    "GeneratorSpec",
    "HurstEstimate",
    "MultiscaleCovariance",
    "MultiscaleError",
    "NumericalError",
    "PerformanceMetrics",
    "PortfolioWeights",
    "PowerLawFit",
    "PriceSeries",
    "ReturnPanel",
    "ScaledCovarianceSet",
    "ScalingSpectrum",
    "SensitivityReport",
    "TargetCurveReport",
    "aggregate",
    "all_phase_aggregates",
    "average_weights_across_scales",
    "build_covariance_set",
    "check_target_curve",
    "compare",
    "correlation_sensitivity",
    "correlation_sensitivity_analytic",
    "cov_at_scale",
    "estimate_correlation_scaling",
    "estimate_hurst",
    "fit_scaling_exponent",
    "gen_correlated",
    "gen_epps",
    "gen_fgn",
    "gen_gaussian_iid",
    "gen_multifractal",
    "gen_regime_switch",
    "gen_stable_iid",
    "generate",
    "load_prices",
    "max_sharpe",
    "metrics",
    "mfdfa",
    "min_variance_closed_form",
    "min_variance_long_only",
    "multiscale_cov",
    "panel_from_returns",
    "psd_repair",
    "run_backtest",
    "sensitivity_to_hurst",
    "sensitivity_to_variance",
    "split_seed",
    "standard_comparison_configs",
    "structure_function",
    "structure_spectrum",
    "to_log_returns",
    "to_price_series",
]
