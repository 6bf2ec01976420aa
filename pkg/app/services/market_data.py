"""
Market data ingestion and curve utilities.

Spot is held foreign-per-domestic everywhere; files quoted the other way are
inverted once, here, at load time.
"""

import logging
import re
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

import numpy as np
import pandas as pd

from app.core.exceptions import CsvFormatError, DataGap, EmptyHistory, MarketDataError, TenorOutOfRange
from app.models.domain_models import (
    CostCurve,
    CurveConvention,
    ForwardCurve,
    OuParams,
    Quotation,
    RatioTable,
    SpotSeries,
)
from app.services import ou_model
from app.utils.helpers import parse_month

logger = logging.getLogger(__name__)

SPOT_COLUMNS = ["month", "spot"]
FORWARD_COLUMNS = ["month", "tenor_months", "forward"]
COST_COLUMNS = ["tenor_months", "annualized_cost"]
RATIO_COLUMNS = ["tenor_months", "ratio"]

CurveLike = Union[ForwardCurve, np.ndarray]
CostLike = Union[CostCurve, np.ndarray, None]


# ---------------- CSV ingestion ----------------
def _read_table(path: Union[str, Path], columns: List[str]) -> pd.DataFrame:
    name = str(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise CsvFormatError(name, 1, f"missing header, expected {','.join(columns)}")
    except pd.errors.ParserError as e:
        found = re.search(r"line (\d+)", str(e))
        raise CsvFormatError(name, int(found.group(1)) if found else 1, f"malformed row: {e}")
    except UnicodeDecodeError:
        raise CsvFormatError(name, 1, "file is not valid UTF-8")
    header = [c.strip() for c in frame.columns]
    if header != columns:
        raise CsvFormatError(name, 1, f"header must be {','.join(columns)}, got {','.join(header)}")
    frame.columns = columns
    if frame.empty:
        raise CsvFormatError(name, 2, "no data rows")
    return frame


def _rows(frame: pd.DataFrame):
    # header is line 1
    for offset, row in enumerate(frame.itertuples(index=False), start=2):
        yield offset, row


def _number(path, line, text, label, *, positive=True, integer=False):
    try:
        value = int(text) if integer else float(text)
    except (TypeError, ValueError):
        raise CsvFormatError(str(path), line, f"{label} is not a number: {text!r}")
    if not np.isfinite(value):
        raise CsvFormatError(str(path), line, f"{label} is not finite")
    if positive and value <= 0:
        raise CsvFormatError(str(path), line, f"{label} must be positive, got {value}")
    return value


def _month(path, line, text):
    try:
        return parse_month(text)
    except ValueError as e:
        raise CsvFormatError(str(path), line, str(e))


def load_spot_csv(
    path: Union[str, Path], quotation: Quotation = Quotation.FOREIGN_PER_DOMESTIC
) -> SpotSeries:
    """Load `month,spot` rows into a gap-free monthly series."""
    frame = _read_table(path, SPOT_COLUMNS)
    months, values = [], []
    for line, row in _rows(frame):
        month = _month(path, line, row.month)
        spot = _number(path, line, row.spot, "spot")
        if months and month <= months[-1]:
            raise CsvFormatError(str(path), line, "months must be strictly increasing")
        if months and month != months[-1] + 1:
            raise DataGap(
                f"{path}:{line}: spot history has a gap before {row.month.strip()}",
                details={"path": str(path), "line": line},
            )
        months.append(month)
        values.append(spot)
    if quotation == Quotation.DOMESTIC_PER_FOREIGN:
        values = [1.0 / v for v in values]
    logger.info(f"Loaded {len(values)} spot observations from {path}")
    return SpotSeries(start_month=months[0], values=tuple(values))


def load_forward_csv(
    path: Union[str, Path],
    spot: SpotSeries,
    quotation: Quotation = Quotation.FOREIGN_PER_DOMESTIC,
) -> Dict[int, ForwardCurve]:
    """Load long-format `month,tenor_months,forward` rows, one curve per month."""
    frame = _read_table(path, FORWARD_COLUMNS)
    grouped: Dict[int, List] = defaultdict(list)
    last_line: Dict[int, int] = {}
    for line, row in _rows(frame):
        month = _month(path, line, row.month)
        tenor = _number(path, line, row.tenor_months, "tenor_months", integer=True)
        rate = _number(path, line, row.forward, "forward")
        pillars = grouped[month]
        if pillars and tenor <= pillars[-1][0]:
            raise CsvFormatError(str(path), line, "tenors must be strictly increasing within a month")
        if quotation == Quotation.DOMESTIC_PER_FOREIGN:
            rate = 1.0 / rate
        pillars.append((tenor, rate))
        last_line[month] = line

    curves = {}
    for month, pillars in grouped.items():
        if not spot.start_month <= month <= spot.end_month:
            raise CsvFormatError(
                str(path), last_line[month], f"no spot observation for curve month {month}"
            )
        curves[month] = ForwardCurve(as_of_month=month, spot=spot.spot_at(month), pillars=tuple(pillars))
    logger.info(f"Loaded {len(curves)} forward curves from {path}")
    return curves


def load_cost_csv(path: Union[str, Path]) -> CostCurve:
    frame = _read_table(path, COST_COLUMNS)
    pillars = []
    for line, row in _rows(frame):
        tenor = _number(path, line, row.tenor_months, "tenor_months", integer=True)
        # costs are magnitudes; a printed minus sign is accepted and dropped
        cost = abs(_number(path, line, row.annualized_cost, "annualized_cost", positive=False))
        if pillars and tenor <= pillars[-1][0]:
            raise CsvFormatError(str(path), line, "tenors must be strictly increasing")
        pillars.append((tenor, cost))
    return CostCurve(pillars=tuple(pillars))


def load_ratio_csv(path: Union[str, Path]) -> RatioTable:
    frame = _read_table(path, RATIO_COLUMNS)
    pillars = []
    for line, row in _rows(frame):
        tenor = _number(path, line, row.tenor_months, "tenor_months", integer=True)
        ratio = _number(path, line, row.ratio, "ratio")
        if pillars and tenor <= pillars[-1][0]:
            raise CsvFormatError(str(path), line, "tenors must be strictly increasing")
        pillars.append((tenor, ratio))
    return RatioTable(pillars=tuple(pillars))


# ---------------- Interpolation ----------------
def _check_tenors(tenors: np.ndarray, max_tenor: int) -> None:
    if tenors.size and (tenors.min() < 1 or tenors.max() > max_tenor):
        bad = tenors[(tenors < 1) | (tenors > max_tenor)]
        raise TenorOutOfRange(
            f"tenor {bad[0]:g} months outside 1..{max_tenor}",
            details={"tenor": float(bad[0]), "max_tenor": max_tenor},
        )


def interp_forward(curve: ForwardCurve, tenor_months):
    """Linear in tenor between pillars, anchored at (0, spot). Raises beyond the last pillar."""
    tenors = np.asarray(tenor_months, dtype=float)
    _check_tenors(np.atleast_1d(tenors), curve.max_tenor)
    xs = np.concatenate(([0.0], curve.tenors))
    ys = np.concatenate(([curve.spot], curve.values))
    result = np.interp(tenors, xs, ys)
    return float(result) if result.ndim == 0 else result


def forward_strip(curve: CurveLike, max_tenor: int) -> np.ndarray:
    """Forwards for tenors 1..max_tenor. Arrays are taken as already-built strips."""
    if isinstance(curve, np.ndarray):
        if curve.size < max_tenor:
            raise TenorOutOfRange(f"forward strip covers {curve.size} months, need {max_tenor}")
        return curve[:max_tenor]
    return interp_forward(curve, np.arange(1, max_tenor + 1))


def interp_cost(costs: CostCurve, tenor_months):
    """Linear between pillars, flat below the first pillar and beyond the last."""
    tenors = np.asarray(tenor_months, dtype=float)
    if np.any(tenors < 1):
        raise TenorOutOfRange("cost tenors start at 1 month")
    xs = np.concatenate(([0.0], costs.tenors))
    ys = np.concatenate(([costs.values[0]], costs.values))
    result = np.interp(tenors, xs, ys)
    return float(result) if result.ndim == 0 else result


def cost_strip(costs: CostLike, max_tenor: int) -> np.ndarray:
    if costs is None:
        return np.zeros(max_tenor)
    if isinstance(costs, np.ndarray):
        return costs[:max_tenor]
    return interp_cost(costs, np.arange(1, max_tenor + 1))


# ---------------- Ratio tables and synthetic curves ----------------
def ratio_table_from_history(curves: Iterable[ForwardCurve]) -> RatioTable:
    """Mean spot-to-forward ratio per pillar over a curve history."""
    history = list(curves)
    if not history:
        raise EmptyHistory("ratio table needs at least one forward curve")
    tenors = history[0].tenors
    ratios = []
    for curve in history:
        if curve.tenors.shape != tenors.shape or np.any(curve.tenors != tenors):
            raise MarketDataError(
                f"curve for month {curve.as_of_month} does not share the pillar tenors of the history"
            )
        ratios.append(curve.spot / curve.values)
    mean = np.mean(ratios, axis=0)
    return RatioTable(pillars=tuple((int(t), float(r)) for t, r in zip(tenors, mean)))


def synth_curve(spot: float, ratios: RatioTable, as_of: int) -> ForwardCurve:
    return ForwardCurve(
        as_of_month=as_of,
        spot=spot,
        pillars=tuple((int(t), float(spot / r)) for t, r in zip(ratios.tenors, ratios.values)),
    )


def forward_factor_strip(ratios: RatioTable, max_tenor: int) -> np.ndarray:
    """
    Forward per unit spot for tenors 1..max_tenor.

    Linear interpolation is homogeneous in spot, so `spot * factors` equals
    `forward_strip(synth_curve(spot, ratios, m), max_tenor)`.
    """
    unit = synth_curve(1.0, ratios, 0)
    return forward_strip(unit, max_tenor)


def static_curve(
    params: OuParams,
    s0: float,
    max_tenor: int,
    convention: CurveConvention = CurveConvention.SPOT,
    as_of: int = 0,
) -> ForwardCurve:
    """Forward curve for a static allocation: flat at spot, or at the expected spot path."""
    if convention == CurveConvention.SPOT:
        pillars = ((max_tenor, float(s0)),)
    else:
        tenors = np.arange(1, max_tenor + 1)
        expected = ou_model.conditional_mean(params, s0, tenors / 12.0)
        pillars = tuple((int(t), float(f)) for t, f in zip(tenors, expected))
    return ForwardCurve(as_of_month=as_of, spot=s0, pillars=pillars)


def forward_points_carry(curve: ForwardCurve, tenors: Sequence[int] = (3, 12, 60)) -> Dict[int, float]:
    """Annualized carry on forward points, (F - S) / (tenor in years)."""
    carry = {}
    for tenor in tenors:
        if tenor <= curve.max_tenor:
            carry[tenor] = (interp_forward(curve, tenor) - curve.spot) / (tenor / 12.0)
        else:
            carry[tenor] = float("nan")
    return carry
