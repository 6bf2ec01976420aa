import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from app.core.exceptions import DataGap, DomainError
from app.models.domain_models import CostCurve, ForwardCurve, OuParams, SpotSeries
from app.models.request_models import StrategyKind, StrategySpec
from app.models.response_models import AllocationResult, BacktestReport, BucketAction, SummaryStats
from app.services import allocator
from app.services.hedge_book import HedgeBook, mtm, settle_cash_flow
from app.services.market_data import cost_strip, forward_points_carry, forward_strip
from app.services.roll import roll_month

logger = logging.getLogger(__name__)

CARRY_TENORS = (3, 12, 60)


def equal_weight_refill(book: HedgeBook, month: int, ladder_months: int, curve: ForwardCurve) -> AllocationResult:
    """
    N-month ladder: seed 1/N at tenors 1..N, then replace each expiry with an N-month forward.

    Call after the month's expiries have been removed from `book`.
    """
    if ladder_months < 1:
        raise DomainError("ladder length must be at least 1 month")
    if len(book) == 0:
        tenors = np.arange(1, ladder_months + 1)
        nominals = np.full(ladder_months, book.target_nominal / ladder_months)
    else:
        amount = book.target_nominal - book.live_nominal
        tenors = np.array([ladder_months]) if amount != 0.0 else np.zeros(0, dtype=int)
        nominals = np.array([amount]) if amount != 0.0 else np.zeros(0)
    return AllocationResult(
        as_of_month=month,
        amount=float(nominals.sum()),
        required=float(nominals.sum()),
        placed=float(nominals.sum()),
        tenors=tenors,
        nominals=nominals,
        cfar_pre=np.full(tenors.size, np.nan),
        unit_cfar=np.full(tenors.size, np.nan),
        cfar_post=np.full(tenors.size, np.nan),
        actions=(BucketAction.FILL,) * tenors.size,
    )


def report_stats(cash_flows: Sequence[float], scale: float = 1.0, tail: float = 0.01) -> SummaryStats:
    """Annualized mean (x12), volatility (x sqrt 12), tail CFaR and extremes, times `scale`."""
    values = np.asarray(cash_flows, dtype=float) * scale
    if values.size == 0:
        raise DomainError("cannot summarize an empty cash-flow series")
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return SummaryStats(
        an_cf=float(12.0 * values.mean()),
        volatility=float(np.sqrt(12.0) * std),
        cfar=float(-np.quantile(values, tail)),
        min=float(values.min()),
        max=float(values.max()),
        n_months=int(values.size),
    )


def cumulative_pnl(
    cash_flows: Sequence[float], spot: Sequence[float], mtm_values: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unhedged (S_t - S_0), hedged (+ cumulative cash) and hedged + MtM P&L, zero discounting."""
    spot = np.asarray(spot, dtype=float)
    unhedged = spot - spot[0]
    hedged = unhedged + np.cumsum(np.asarray(cash_flows, dtype=float))
    return unhedged, hedged, hedged + np.asarray(mtm_values, dtype=float)


def run_backtest(
    spot: SpotSeries,
    curves: Mapping[int, ForwardCurve],
    costs: CostCurve,
    params: OuParams,
    strategy: StrategySpec,
    *,
    cash_scale: float = 100.0,
    tail: float = 0.01,
    tolerance: float = 1e-9,
) -> BacktestReport:
    """Replay `strategy` month by month over the spot history."""
    months = spot.months
    missing = [int(m) for m in months if int(m) not in curves]
    if missing:
        raise DataGap(
            f"no forward curve for {len(missing)} month(s), first {missing[0]}",
            details={"months": missing[:12]},
        )

    config = strategy.config
    n = config.max_tenor_months if config is not None else strategy.ladder_months
    cost_values = cost_strip(costs, n)
    book = HedgeBook(tolerance=tolerance)

    size = months.size
    cash = np.zeros(size)
    marks = np.zeros(size)
    longs, shorts = np.zeros(size), np.zeros(size)
    new_long, new_short = np.zeros(size), np.zeros(size)
    carry = {tenor: np.zeros(size) for tenor in CARRY_TENORS}
    infeasible: List[int] = []
    unrepaired = 0

    for i, month in enumerate(months.tolist()):
        curve = curves[month]
        s_t = spot.spot_at(month)
        if strategy.kind == StrategyKind.EQUAL_WEIGHT:
            _, matured = book.expire(month)
            cash[i] = settle_cash_flow(matured, s_t)
            allocation = equal_weight_refill(book, month, strategy.ladder_months, curve)
            book.add_allocation(month, allocation, curve)
        else:
            forwards = forward_strip(curve, n)
            ranking = allocator.rank_tenors(params, s_t, forwards, cost_values, strategy.ranking, n)
            outcome = roll_month(book, month, s_t, forwards, params, config, cost_values, ranking)
            cash[i] = outcome.cash_flow
            allocation = outcome.allocation
            unrepaired += outcome.unrepaired
            if outcome.infeasible:
                infeasible.append(month)

        marks[i] = mtm(book, curve)
        longs[i], shorts[i] = book.long_nominal, book.short_nominal
        new_long[i] = allocation.nominals[allocation.nominals > 0].sum()
        new_short[i] = allocation.nominals[allocation.nominals < 0].sum()
        for tenor, value in forward_points_carry(curve, CARRY_TENORS).items():
            carry[tenor][i] = value

    unhedged, hedged, hedged_mtm = cumulative_pnl(cash, spot.as_array(), marks)
    # nothing can expire on the first roll date
    stats = report_stats(cash[1:] if size > 1 else cash, scale=cash_scale, tail=tail)
    if infeasible:
        logger.warning(f"{strategy.label}: {len(infeasible)} infeasible roll dates")
    logger.info(
        f"{strategy.label}: An.CF {stats.an_cf:.2f}, vol {stats.volatility:.2f}, "
        f"CFaR {stats.cfar:.2f} per {cash_scale:g} units"
    )
    return BacktestReport(
        strategy=strategy.label,
        months=months,
        spot=spot.as_array(),
        cash_flows=cash,
        stats=stats,
        mtm=marks,
        unhedged_pnl=unhedged,
        hedged_pnl=hedged,
        hedged_mtm_pnl=hedged_mtm,
        long_nominal=longs,
        short_nominal=shorts,
        new_long=new_long,
        new_short=new_short,
        carry_points=carry,
        infeasible_months=infeasible,
        unrepaired_breaches=unrepaired,
        final_book=[(c.trade_month, c.expiry_month, c.nominal, c.rate) for c in book.contracts()],
    )


def _run_one(args) -> BacktestReport:
    spot, curves, costs, params, strategy, kwargs = args
    return run_backtest(spot, curves, costs, params, strategy, **kwargs)


def run_backtests(
    spot: SpotSeries,
    curves: Mapping[int, ForwardCurve],
    costs: CostCurve,
    params: OuParams,
    strategies: Sequence[StrategySpec],
    *,
    max_workers: int = 1,
    **kwargs,
) -> Dict[str, BacktestReport]:
    """Independent strategies, optionally one process each; results keep the input order."""
    jobs = [(spot, dict(curves), costs, params, s, kwargs) for s in strategies]
    if max_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            reports = list(pool.map(_run_one, jobs))
    else:
        reports = [_run_one(job) for job in jobs]
    return {report.strategy: report for report in reports}
