"""Incremental Monte Carlo portfolio risk: correlated sampling, VaR/CVaR/EVaR,
sensitivity indices, and a pipelined timing model for live sessions."""

from .errors import (
    CapacityError,
    ConflictError,
    DecompositionError,
    DegenerateModelError,
    EmptyLedgerError,
    EmptyPortfolioError,
    InsufficientDataError,
    NotFoundError,
    NumericError,
    OrderingError,
    ParameterError,
    ParseError,
    RiskpipeError,
    ShapeError,
)
from .measures import RiskReport, cvar, evar, horizon_returns, risk_report, var
from .portfolio import (
    Composite,
    EVENT_KINDS,
    Leaf,
    PORTFOLIO_ID,
    Session,
    SessionEvent,
    aggregate,
    classify_divisibility,
    read_script,
    write_script,
)
from .sampling import (
    Constant,
    CorrelationMatrix,
    Empirical,
    LogNormal,
    Marginal,
    Normal,
    PriceHistory,
    SampleTuple,
    Triangular,
    Uniform,
    bootstrap,
    cholesky_factor,
    correlate_tuples,
    derive_key,
    driver_normals,
    historical_returns,
    marginal_from_payload,
    sample_marginal,
)
from .scheduler import (
    COMPLETELY_DIVISIBLE,
    INCOMPLETELY_DIVISIBLE,
    NESTED,
    TimedEvent,
    TimingLedger,
    run_pipelined,
    serial_baseline,
)
from .sensitivity import (
    AnovaTerms,
    SensitivityReport,
    binned_anova,
    check_sum_to_one,
    pick_freeze,
)
from .store import AssetRecord, AssetStore, TupleCache

__version__ = "0.1.0"

__all__ = [
    "AnovaTerms",
    "AssetRecord",
    "AssetStore",
    "CapacityError",
    "Composite",
    "ConflictError",
    "Constant",
    "CorrelationMatrix",
    "COMPLETELY_DIVISIBLE",
    "DecompositionError",
    "DegenerateModelError",
    "Empirical",
    "EmptyLedgerError",
    "EmptyPortfolioError",
    "EVENT_KINDS",
    "INCOMPLETELY_DIVISIBLE",
    "InsufficientDataError",
    "Leaf",
    "LogNormal",
    "Marginal",
    "NESTED",
    "Normal",
    "NotFoundError",
    "NumericError",
    "OrderingError",
    "ParameterError",
    "ParseError",
    "PORTFOLIO_ID",
    "PriceHistory",
    "RiskReport",
    "RiskpipeError",
    "SampleTuple",
    "SensitivityReport",
    "Session",
    "SessionEvent",
    "ShapeError",
    "TimedEvent",
    "TimingLedger",
    "Triangular",
    "TupleCache",
    "Uniform",
    "aggregate",
    "binned_anova",
    "bootstrap",
    "check_sum_to_one",
    "cholesky_factor",
    "classify_divisibility",
    "correlate_tuples",
    "cvar",
    "derive_key",
    "driver_normals",
    "evar",
    "historical_returns",
    "horizon_returns",
    "marginal_from_payload",
    "pick_freeze",
    "read_script",
    "risk_report",
    "run_pipelined",
    "sample_marginal",
    "serial_baseline",
    "var",
    "write_script",
]
