"""Sparse regression with autoregressive and moving-average lags (REGARMA)."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    LagDesign,
    StandardizationTransform,
    StationarityReport,
    TimeSeriesDataset,
    build_lag_design,
    check_stationarity,
    read_csv,
    standardize,
    unstandardize,
)
from .datasets import load_index_returns_surrogate, make_index_returns_surrogate  # noqa: E402
from .diagnostics import (  # noqa: E402
    BoundInputs,
    MetricsReport,
    compute_metrics,
    mspe_hat,
    realized_bound_inputs,
    remark2_bound,
    residual_acf,
    theorem5_bound,
)
from .estimator import RegarmaRegressor  # noqa: E402
from .fit import (  # noqa: E402
    RegarmaFit,
    compute_adaptive_weights,
    fit_adaptive_regarma,
    fit_regar,
    fit_regarma,
    predict_one_step,
)
from .lasso import PenaltyConfig, SolverOptions, SolveResult, kkt_residual, solve_weighted_lasso  # noqa: E402
from .selection import (  # noqa: E402
    Criterion,
    SelectionResult,
    cross_validate,
    information_criterion,
    select_orders_method_a,
    select_orders_method_b,
    select_penalties,
)
from .simulate import SimulationConfig, SimulationTruth, generate_dataset  # noqa: E402

__all__ = [
    "BoundInputs",
    "Criterion",
    "LagDesign",
    "MetricsReport",
    "PenaltyConfig",
    "RegarmaFit",
    "RegarmaRegressor",
    "SelectionResult",
    "SimulationConfig",
    "SimulationTruth",
    "SolveResult",
    "SolverOptions",
    "StandardizationTransform",
    "StationarityReport",
    "TimeSeriesDataset",
    "build_lag_design",
    "check_stationarity",
    "compute_adaptive_weights",
    "compute_metrics",
    "cross_validate",
    "fit_adaptive_regarma",
    "fit_regar",
    "fit_regarma",
    "generate_dataset",
    "information_criterion",
    "kkt_residual",
    "load_index_returns_surrogate",
    "make_index_returns_surrogate",
    "mspe_hat",
    "predict_one_step",
    "read_csv",
    "realized_bound_inputs",
    "remark2_bound",
    "residual_acf",
    "select_orders_method_a",
    "select_orders_method_b",
    "select_penalties",
    "solve_weighted_lasso",
    "standardize",
    "theorem5_bound",
    "unstandardize",
]
