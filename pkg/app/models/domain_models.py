from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Quotation(str, Enum):
    FOREIGN_PER_DOMESTIC = "foreign-per-domestic"
    DOMESTIC_PER_FOREIGN = "domestic-per-foreign"


class RankingMode(str, Enum):
    ASSUMPTION = "assumption"  # shortest tenor first
    RANKED = "ranked"  # expected net carry, best first


class CurveConvention(str, Enum):
    SPOT = "spot"  # flat forward curve at the current spot
    EXPECTED = "expected"  # forward equals the conditional mean of the spot


class OuParams(BaseModel):
    """Ornstein-Uhlenbeck spot dynamics dS = k(theta - S)dt + nu dB, time in years."""

    model_config = ConfigDict(frozen=True)

    k: float = Field(..., gt=0.0, description="Mean-reversion speed (1/years)")
    theta: float = Field(..., gt=0.0, description="Long-run mean spot (foreign per domestic)")
    nu: float = Field(..., gt=0.0, description="Volatility (per sqrt-year)")

    @property
    def stationary_variance(self) -> float:
        return self.nu**2 / (2.0 * self.k)


class SpotSeries(BaseModel):
    """Consecutive monthly spot observations, foreign per domestic."""

    model_config = ConfigDict(frozen=True)

    start_month: int
    values: Tuple[float, ...] = Field(..., min_length=1)
    step_years: float = Field(1.0 / 12.0, gt=0.0)

    @field_validator("values")
    @classmethod
    def validate_positive(cls, v):
        if not all(np.isfinite(x) and x > 0 for x in v):
            raise ValueError("spot observations must be finite and strictly positive")
        return v

    @property
    def end_month(self) -> int:
        return self.start_month + len(self.values) - 1

    @property
    def months(self) -> np.ndarray:
        return np.arange(self.start_month, self.end_month + 1)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def spot_at(self, month: int) -> float:
        return self.values[month - self.start_month]


def _check_pillars(pillars, *, allow_zero_value: bool):
    if not pillars:
        raise ValueError("at least one pillar is required")
    tenors = [t for t, _ in pillars]
    if any(t <= 0 for t in tenors):
        raise ValueError("pillar tenors must be positive")
    if any(b <= a for a, b in zip(tenors, tenors[1:])):
        raise ValueError("pillar tenors must be strictly increasing")
    for _, value in pillars:
        if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero_value):
            raise ValueError(f"invalid pillar value {value}")
    return pillars


class _PillarCurve(BaseModel):
    model_config = ConfigDict(frozen=True)

    pillars: Tuple[Tuple[int, float], ...]

    @property
    def tenors(self) -> np.ndarray:
        return np.array([t for t, _ in self.pillars], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.pillars], dtype=float)

    @property
    def max_tenor(self) -> int:
        return self.pillars[-1][0]


class ForwardCurve(_PillarCurve):
    """Forward rates F(t, t + tenor) at pillar tenors in months."""

    as_of_month: int
    spot: float = Field(..., gt=0.0)

    @field_validator("pillars")
    @classmethod
    def validate_pillars(cls, v):
        return _check_pillars(v, allow_zero_value=False)


class CostCurve(_PillarCurve):
    """Annualized proportional transaction costs, stored as positive magnitudes."""

    @field_validator("pillars")
    @classmethod
    def validate_pillars(cls, v):
        return _check_pillars(v, allow_zero_value=True)

    @classmethod
    def zero(cls, max_tenor: int = 120) -> "CostCurve":
        return cls(pillars=((max_tenor, 0.0),))


class RatioTable(_PillarCurve):
    """Mean spot-to-forward ratio per pillar tenor."""

    @field_validator("pillars")
    @classmethod
    def validate_pillars(cls, v):
        return _check_pillars(v, allow_zero_value=False)

    @classmethod
    def flat(cls, max_tenor: int = 120, ratio: float = 1.0) -> "RatioTable":
        return cls(pillars=((1, ratio), (max_tenor, ratio)))


class LiquidityConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    budget: float = Field(..., gt=0.0, description="Liquidity budget L, domestic currency per unit hedged")
    tail_p: float = Field(0.01, gt=0.0, lt=0.5, description="CFaR tail probability p")
    a_lower: float = Field(-1.0, le=0.0, description="Lower bound on a single new nominal")
    a_upper: float = Field(1.0, ge=0.0, description="Upper bound on a single new nominal")
    max_tenor_months: int = Field(120, ge=1)

    @model_validator(mode="after")
    def validate_bounds(self):
        if self.a_lower > self.a_upper:
            raise ValueError("a_lower must not exceed a_upper")
        return self


@dataclass(frozen=True, slots=True)
class ForwardContract:
    trade_month: int
    expiry_month: int
    nominal: float  # foreign amount, positive = long domestic
    rate: float

    def __post_init__(self):
        if self.expiry_month <= self.trade_month:
            raise ValueError("expiry_month must be after trade_month")
        if not self.rate > 0:
            raise ValueError("forward rate must be positive")

    @property
    def tenor_months(self) -> int:
        return self.expiry_month - self.trade_month
