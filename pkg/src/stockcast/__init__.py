"""Stock-depletion distributions and stockout forecasting for a single
sales period without replenishment."""

from .closed_form import cf_p0k, cf_pf, cf_pnk, closed_form_curve
from .demand import (
    BinomialDemand,
    DemandModel,
    DeterministicDemand,
    EmptySeriesError,
    FrequentistDemand,
    MomentEstimates,
    NegativeBinomialDemand,
    PoissonDemand,
    SalesSeries,
    ZeroMeanError,
    estimate_moments,
    fit_frequentist,
    select_bnbp,
)
from .engine import (
    StockDistribution,
    StockoutCurve,
    frustrated_sales_via_pfk,
    monte_carlo_oracle,
    solve_recursive,
)
from .harness import (
    BENCHMARK_RPS,
    EvaluationRecord,
    SummaryReport,
    Window,
    augment,
    evaluate,
    export_report,
    ingest,
    render_summary,
    summarize,
)
from .metrics import (
    ForecastCdf,
    NormalizationError,
    OutcomeStep,
    baseline_uniform,
    baseline_uniform_discrete,
    normalize_curve,
    point_forecast_expected_rps,
    rps_discrete,
    uniform_forecast,
    uniform_forecast_rps_continuous,
)
from .special import ConvergenceError, log_gen_binomial, reg_inc_beta, reg_upper_gamma

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BENCHMARK_RPS",
    "BinomialDemand",
    "ConvergenceError",
    "DemandModel",
    "DeterministicDemand",
    "EmptySeriesError",
    "EvaluationRecord",
    "ForecastCdf",
    "FrequentistDemand",
    "MomentEstimates",
    "NegativeBinomialDemand",
    "NormalizationError",
    "OutcomeStep",
    "PoissonDemand",
    "SalesSeries",
    "StockDistribution",
    "StockoutCurve",
    "SummaryReport",
    "Window",
    "ZeroMeanError",
    "augment",
    "baseline_uniform",
    "baseline_uniform_discrete",
    "cf_p0k",
    "cf_pf",
    "cf_pnk",
    "closed_form_curve",
    "estimate_moments",
    "evaluate",
    "export_report",
    "fit_frequentist",
    "frustrated_sales_via_pfk",
    "ingest",
    "log_gen_binomial",
    "monte_carlo_oracle",
    "normalize_curve",
    "point_forecast_expected_rps",
    "reg_inc_beta",
    "reg_upper_gamma",
    "render_summary",
    "rps_discrete",
    "select_bnbp",
    "solve_recursive",
    "summarize",
    "uniform_forecast",
    "uniform_forecast_rps_continuous",
]
