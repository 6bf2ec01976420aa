from pathlib import Path

import numpy as np
import pytest

from app.models.domain_models import CostCurve, ForwardCurve, LiquidityConfig, OuParams, RatioTable, SpotSeries
from app.services import ou_model
from app.services.market_data import load_cost_csv, synth_curve
from app.utils.helpers import format_month

DATA_DIR = Path(__file__).resolve().parents[1] / "data"
CURVE_PILLARS = (1, 2, 3, 6, 9, 12, 18, 24, 36, 48, 60, 84, 120)


@pytest.fixture
def base_params() -> OuParams:
    return OuParams(k=0.4, theta=1 / 0.75, nu=0.2)


@pytest.fixture
def base_config() -> LiquidityConfig:
    return LiquidityConfig(budget=0.01, tail_p=0.01)


@pytest.fixture
def reference_costs() -> CostCurve:
    return load_cost_csv(DATA_DIR / "reference_costs.csv")


def write_text(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def carry_ratio_table(max_tenor: int = 120) -> RatioTable:
    """Spot-to-forward ratios rising with tenor, so carry falls with tenor."""
    return RatioTable(
        pillars=tuple((t, 1.0 + 0.001 * (t / 12.0) ** 1.5) for t in CURVE_PILLARS if t <= max_tenor)
    )


def synthetic_history(params: OuParams, n_months: int, seed: int, ratios: RatioTable, start_month: int = 0):
    """OU spot path plus fixed-ratio forward curves for every month."""
    path = ou_model.simulate_paths(params, params.theta, 1, n_months - 1, seed)[0]
    spot = SpotSeries(start_month=start_month, values=tuple(float(v) for v in path))
    curves = {int(m): synth_curve(spot.spot_at(int(m)), ratios, int(m)) for m in spot.months}
    return spot, curves


def flat_curves(spot: SpotSeries, max_tenor: int = 120):
    return {
        int(m): ForwardCurve(as_of_month=int(m), spot=spot.spot_at(int(m)), pillars=((max_tenor, spot.spot_at(int(m))),))
        for m in spot.months
    }


def spot_csv(series: SpotSeries) -> str:
    rows = [f"{format_month(int(m))},{v!r}" for m, v in zip(series.months, series.values)]
    return "month,spot\n" + "\n".join(rows) + "\n"


def forward_csv(curves) -> str:
    rows = []
    for month in sorted(curves):
        for tenor, rate in curves[month].pillars:
            rows.append(f"{format_month(month)},{tenor},{rate!r}")
    return "month,tenor_months,forward\n" + "\n".join(rows) + "\n"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
