from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats


class BucketAction(str, Enum):
    REPAIR = "repair"  # negative hedge pulling a breached bucket back to L
    REPAIR_CLAMPED = "repair_clamped"  # repair stopped at a_lower
    UNREPAIRED = "unrepaired"  # breach left in place
    FILL = "fill"  # capacity filled up to L
    FILL_TRUNCATED = "fill_truncated"  # last bucket, stopped at the roll amount
    FILL_CLAMPED = "fill_clamped"  # stopped at a_upper
    FILL_UNBOUNDED = "fill_unbounded"  # unit CFaR <= 0, a_upper assigned outright
    SHORTFALL = "shortfall"  # residual placed after the ranking was exhausted


class TenorRanking(BaseModel):
    model_config = ConfigDict(frozen=True)

    tenors: Tuple[int, ...]
    carries: Optional[Tuple[float, ...]] = None

    def __len__(self) -> int:
        return len(self.tenors)


class CfarProfile(BaseModel):
    """Per-bucket CFaR for expiries as_of_month + 1 .. as_of_month + max tenor."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    as_of_month: int
    tenors: np.ndarray
    expected_spot: np.ndarray
    sigma: np.ndarray
    forward: np.ndarray
    net_nominal: np.ndarray
    weighted_rate: np.ndarray
    cfar_pre: np.ndarray
    unit_cfar: np.ndarray
    cfar_post: np.ndarray
    new_nominal: np.ndarray

    @property
    def bucket_months(self) -> np.ndarray:
        return self.as_of_month + self.tenors

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "bucket_month": self.bucket_months,
                "cfar_pre": self.cfar_pre,
                "unit_cfar": self.unit_cfar,
                "cfar_post": self.cfar_post,
            }
        )


class AllocationResult(BaseModel):
    """New trades of one roll date, in execution order, with per-bucket diagnostics."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    as_of_month: int
    amount: float
    repair_total: float = 0.0
    required: float = 0.0
    placed: float = 0.0
    shortfall: float = 0.0
    fully_hedged: bool = True
    tenors: np.ndarray = Field(default_factory=lambda: np.zeros(0, dtype=int))
    nominals: np.ndarray = Field(default_factory=lambda: np.zeros(0))
    cfar_pre: np.ndarray = Field(default_factory=lambda: np.zeros(0))
    unit_cfar: np.ndarray = Field(default_factory=lambda: np.zeros(0))
    cfar_post: np.ndarray = Field(default_factory=lambda: np.zeros(0))
    actions: Tuple[BucketAction, ...] = ()
    expected_carry: Optional[float] = None

    @property
    def new_trades(self) -> Dict[int, float]:
        """Signed nominal per expiry month."""
        trades: Dict[int, float] = {}
        for tenor, nominal in zip(self.tenors.tolist(), self.nominals.tolist()):
            if nominal != 0.0:
                expiry = self.as_of_month + tenor
                trades[expiry] = trades.get(expiry, 0.0) + nominal
        return trades

    @property
    def total_nominal(self) -> float:
        return float(self.nominals.sum())

    @property
    def flagged(self) -> List[int]:
        """Tenors whose post-trade CFaR may sit above the budget."""
        flags = {BucketAction.REPAIR_CLAMPED, BucketAction.UNREPAIRED, BucketAction.SHORTFALL}
        return [int(t) for t, a in zip(self.tenors, self.actions) if a in flags]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "tenor_months": self.tenors,
                "expiry_month": self.as_of_month + self.tenors,
                "nominal": self.nominals,
                "cfar_pre": self.cfar_pre,
                "unit_cfar": self.unit_cfar,
                "cfar_post": self.cfar_post,
                "action": [a.value for a in self.actions],
            }
        )


class SensitivityResult(BaseModel):
    parameter: str
    rows: List[Tuple[float, int, float]]  # (sweep_value, tenor_months, nominal)
    max_tenors: Dict[float, int]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["sweep_value", "tenor_months", "nominal"])


class SimulationReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    months: np.ndarray
    mean_cf: np.ndarray
    std_cf: np.ndarray
    quantile_cf: np.ndarray
    tail_p: float
    n_samples: int
    mean_new_nominal: np.ndarray  # (month, tenor)
    path_cumulative_cf: np.ndarray
    infeasible_events: int
    unrepaired_breaches: int
    max_hedge_deviation: float
    steady_state_start: int

    @property
    def steady_state(self) -> np.ndarray:
        return self.months >= self.steady_state_start

    def quantile_standard_error(self) -> np.ndarray:
        """Per-month order-statistic standard error of `quantile_cf`, normal density at the quantile."""
        p = self.tail_p
        density = stats.norm.pdf(stats.norm.ppf(p))
        return np.sqrt(p * (1 - p) / self.n_samples) * self.std_cf / density

    def mean_nominal_by_tenor(self) -> np.ndarray:
        return self.mean_new_nominal[self.steady_state].mean(axis=0)

    def cash_flow_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "month": self.months,
                "mean_cf": self.mean_cf,
                "q01_cf": self.quantile_cf,
                "q01_cf_se": self.quantile_standard_error(),
            }
        )

    def nominal_frame(self) -> pd.DataFrame:
        by_tenor = self.mean_nominal_by_tenor()
        return pd.DataFrame(
            {"tenor_months": np.arange(1, by_tenor.size + 1), "mean_nominal": by_tenor}
        )


class SummaryStats(BaseModel):
    an_cf: float
    volatility: float
    cfar: float
    min: float
    max: float
    n_months: int


class BacktestReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    strategy: str
    months: np.ndarray
    spot: np.ndarray
    cash_flows: np.ndarray
    stats: SummaryStats
    mtm: np.ndarray
    unhedged_pnl: np.ndarray
    hedged_pnl: np.ndarray
    hedged_mtm_pnl: np.ndarray
    long_nominal: np.ndarray
    short_nominal: np.ndarray
    new_long: np.ndarray
    new_short: np.ndarray
    carry_points: Dict[int, np.ndarray]
    infeasible_months: List[int] = []
    unrepaired_breaches: int = 0
    final_book: List[Tuple[int, int, float, float]] = []  # (trade_month, expiry_month, nominal, rate)

    def monthly_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "month": self.months,
                "spot": self.spot,
                "cash_flow": self.cash_flows,
                "mtm": self.mtm,
                "unhedged_pnl": self.unhedged_pnl,
                "hedged_pnl": self.hedged_pnl,
                "hedged_mtm_pnl": self.hedged_mtm_pnl,
                "long_nominal": self.long_nominal,
                "short_nominal": self.short_nominal,
                "new_long": self.new_long,
                "new_short": self.new_short,
            }
        )
        for tenor, series in sorted(self.carry_points.items()):
            frame[f"carry_{tenor}m"] = series
        return frame

    def summary_row(self) -> Dict[str, Any]:
        return {"strategy": self.strategy, **self.stats.model_dump()}

    def book_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.final_book, columns=["trade_month", "expiry_month", "nominal", "rate"])


class RunManifest(BaseModel):
    app_name: str
    app_version: str
    subcommand: str
    inputs: Dict[str, Dict[str, str]]
    parameters: Dict[str, Any]
    seed: Optional[int] = None
    outputs: List[str]
    versions: Dict[str, str]
    # wall clock, so the manifest is the one file that differs between identical reruns
    runtime_seconds: float


class ErrorResponse(BaseModel):
    success: bool = False
    error_code: str
    message: str
    details: Optional[Dict[str, Any]] = None
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
