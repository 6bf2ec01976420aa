"""
Error hierarchy for the hedge engine.

Services raise these; only the CLI entry point turns them into exit codes.
"""

from typing import Any, Dict, Optional


class HedgeEngineError(Exception):
    """Base class for every error the engine raises on bad data or infeasible requests."""

    error_code = "engine_error"
    exit_code = 1

    def __init__(self, message: str, *, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


# ---------------- Model ----------------
class ModelError(HedgeEngineError):
    error_code = "model_error"


class NonMeanReverting(ModelError):
    error_code = "non_mean_reverting"


class DegenerateSeries(ModelError):
    error_code = "degenerate_series"


class DomainError(HedgeEngineError, ValueError):
    error_code = "domain_error"


# ---------------- Market data ----------------
class MarketDataError(HedgeEngineError):
    error_code = "market_data_error"


class TenorOutOfRange(MarketDataError):
    error_code = "tenor_out_of_range"


class EmptyHistory(MarketDataError):
    error_code = "empty_history"


class DataGap(MarketDataError):
    error_code = "data_gap"


class CsvFormatError(MarketDataError):
    error_code = "csv_format"

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}", details={"path": path, "line": line})
        self.path = path
        self.line = line


# ---------------- Ledger ----------------
class LedgerError(HedgeEngineError):
    error_code = "ledger_error"


class HedgeRatioViolation(LedgerError):
    error_code = "hedge_ratio_violation"


class LedgerOrderError(LedgerError):
    error_code = "ledger_order"


# ---------------- Allocation ----------------
class InfeasibleHedge(HedgeEngineError):
    """Raised when the ranking is exhausted before the roll amount is placed."""

    error_code = "infeasible_hedge"

    def __init__(self, message: str, *, result: Any, profile: Any = None):
        super().__init__(message, details={"shortfall": getattr(result, "shortfall", None)})
        self.result = result
        self.profile = profile
