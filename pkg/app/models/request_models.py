import time
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.domain_models import (
    CostCurve,
    CurveConvention,
    LiquidityConfig,
    OuParams,
    RankingMode,
    RatioTable,
)


class StrategyKind(str, Enum):
    OPTIMAL = "optimal"
    EQUAL_WEIGHT = "equal_weight"


class SweepParameter(str, Enum):
    BUDGET = "L"
    TAIL_P = "p"
    NU = "nu"
    S0 = "s0"
    K = "k"
    THETA = "theta"


class StaticScenario(BaseModel):
    """One static (empty-book) allocation problem."""

    model_config = ConfigDict(frozen=True)

    params: OuParams
    s0: float = Field(..., gt=0.0, description="Current spot, foreign per domestic")
    config: LiquidityConfig
    amount: float = Field(1.0, ge=0.0, description="Foreign nominal to hedge")
    convention: CurveConvention = CurveConvention.SPOT
    ranking: RankingMode = RankingMode.ASSUMPTION

    @classmethod
    def base(cls) -> "StaticScenario":
        """Base parameter set of the static sensitivity analysis."""
        return cls(
            params=OuParams(k=0.4, theta=1 / 0.75, nu=0.2),
            s0=1 / 0.75,
            config=LiquidityConfig(budget=0.01, tail_p=0.01),
        )


class SensitivitySweep(BaseModel):
    parameter: SweepParameter
    values: List[float] = Field(..., min_length=1)


class SimulationSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: OuParams
    s0: float = Field(..., gt=0.0)
    horizon_months: int = Field(240, ge=1)
    n_paths: int = Field(10_000, ge=1)
    seed: int = Field(0, ge=0)
    config: LiquidityConfig
    ratios: RatioTable
    ranking: RankingMode = RankingMode.ASSUMPTION
    costs: Optional[CostCurve] = None
    target_nominal: float = Field(1.0, gt=0.0)

    @model_validator(mode="after")
    def validate_ratio_span(self):
        if self.ratios.max_tenor < self.config.max_tenor_months:
            raise ValueError(
                f"ratio table reaches {self.ratios.max_tenor} months, "
                f"max tenor is {self.config.max_tenor_months}"
            )
        return self


class StrategySpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: StrategyKind
    name: str = ""
    config: Optional[LiquidityConfig] = None
    ranking: RankingMode = RankingMode.RANKED
    ladder_months: int = Field(12, ge=1)

    @model_validator(mode="after")
    def validate_kind(self):
        if self.kind == StrategyKind.OPTIMAL and self.config is None:
            raise ValueError("an optimal strategy needs a liquidity config")
        return self

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == StrategyKind.EQUAL_WEIGHT:
            return f"Eq {self.ladder_months}M"
        return f"Opt L={self.config.budget:g}"

    @classmethod
    def reference_set(cls, max_tenor_months: int = 120) -> List["StrategySpec"]:
        """Str1-Str6 and the 1Y/3Y/10Y equal-weight benchmarks."""
        grid: List[Tuple[str, float, float, float]] = [
            ("Str1", 0.01, -1.0, 1.0),
            ("Str2", 0.01, -0.01, 0.1),
            ("Str3", 0.02, 0.0, 1.0),
            ("Str4", 0.01, 0.0, 1.0),
            ("Str5", 0.005, 0.0, 1.0),
            ("Str6", 0.002, 0.0, 1.0),
        ]
        specs = [
            cls(
                kind=StrategyKind.OPTIMAL,
                name=name,
                config=LiquidityConfig(
                    budget=budget, a_lower=lower, a_upper=upper, max_tenor_months=max_tenor_months
                ),
            )
            for name, budget, lower, upper in grid
        ]
        specs += [
            cls(kind=StrategyKind.EQUAL_WEIGHT, name=f"Eq {n // 12}Y", ladder_months=n)
            for n in (12, 36, 120)
        ]
        return specs


class RunConfig(BaseModel):
    """Resolved CLI invocation, recorded in the run manifest."""

    subcommand: str
    inputs: Dict[str, Path] = {}
    params: Optional[OuParams] = None
    config: Optional[LiquidityConfig] = None
    seed: Optional[int] = None
    output_dir: Path
    output_format: str = Field("csv", pattern="^(csv|json)$")
    options: Dict[str, object] = {}
    started: float = Field(default_factory=time.perf_counter, exclude=True)

    @model_validator(mode="after")
    def validate_inputs(self):
        missing = [str(p) for p in self.inputs.values() if not p.exists()]
        if missing:
            raise ValueError(f"input files not found: {', '.join(missing)}")
        return self
