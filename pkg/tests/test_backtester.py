import numpy as np
import pytest

from app.core.exceptions import DataGap, DomainError
from app.models.domain_models import CostCurve, ForwardCurve, LiquidityConfig, OuParams, RankingMode, SpotSeries
from app.models.request_models import StrategyKind, StrategySpec
from app.services import backtester, ou_model
from app.services.hedge_book import HedgeBook
from tests.conftest import carry_ratio_table, flat_curves, synthetic_history

THETA = 4 / 3


def _optimal(budget=0.01, ranking=RankingMode.RANKED, **config) -> StrategySpec:
    return StrategySpec(
        kind=StrategyKind.OPTIMAL, config=LiquidityConfig(budget=budget, **config), ranking=ranking
    )


# ---------------- Equal-weight ladder ----------------
@pytest.mark.parametrize("ladder", [1, 12, 36, 120])
def test_equal_weight_steady_state(ladder):
    book = HedgeBook()
    for month in range(ladder + 30):
        curve = ForwardCurve(as_of_month=month, spot=1.3, pillars=((120, 1.3),))
        book.expire(month)
        allocation = backtester.equal_weight_refill(book, month, ladder, curve)
        book.add_allocation(month, allocation, curve)
        if month >= ladder:
            net, _ = book.bucket_aggregates(month + 1, ladder)
            np.testing.assert_allclose(net, 1.0 / ladder, atol=1e-9)
            assert len(book.live_expiries) == ladder
            assert allocation.tenors.tolist() == [ladder]


def test_equal_weight_seeds_the_ladder():
    curve = ForwardCurve(as_of_month=0, spot=1.3, pillars=((120, 1.3),))
    allocation = backtester.equal_weight_refill(HedgeBook(), 0, 12, curve)
    assert allocation.tenors.tolist() == list(range(1, 13))
    np.testing.assert_allclose(allocation.nominals, 1 / 12)


def test_equal_weight_rejects_empty_ladder():
    curve = ForwardCurve(as_of_month=0, spot=1.3, pillars=((120, 1.3),))
    with pytest.raises(DomainError):
        backtester.equal_weight_refill(HedgeBook(), 0, 0, curve)


# ---------------- Statistics ----------------
def test_report_stats_constant_series():
    stats = backtester.report_stats([0.002] * 24, scale=100)
    assert stats.an_cf == pytest.approx(2.4)
    assert stats.volatility == pytest.approx(0.0)
    assert stats.cfar == pytest.approx(-0.2)
    assert stats.min == stats.max == pytest.approx(0.2)
    assert stats.n_months == 24


def test_report_stats_is_order_free(rng):
    values = rng.normal(size=500)
    shuffled = backtester.report_stats(rng.permutation(values)).model_dump()
    for key, value in backtester.report_stats(values).model_dump().items():
        assert shuffled[key] == pytest.approx(value, rel=1e-12, abs=1e-12)


def test_report_stats_normal_tail(rng):
    n = 10_000
    stats = backtester.report_stats(rng.standard_normal(n))
    se = np.sqrt(0.01 * 0.99 / n) / 0.026652
    assert stats.cfar == pytest.approx(2.326348, abs=4 * se)
    assert stats.volatility == pytest.approx(np.sqrt(12.0), rel=0.05)


def test_report_stats_needs_data():
    with pytest.raises(DomainError):
        backtester.report_stats([])


def test_cumulative_pnl():
    unhedged, hedged, with_mtm = backtester.cumulative_pnl([0.0, 0.1, -0.05], [1.0, 1.2, 1.1], [0.0, 0.3, 0.2])
    assert unhedged == pytest.approx([0.0, 0.2, 0.1])
    assert hedged == pytest.approx([0.0, 0.3, 0.15])
    assert with_mtm == pytest.approx([0.0, 0.6, 0.35])


# ---------------- Replays ----------------
def test_flat_market_has_no_cash_flow(base_params):
    spot = SpotSeries(start_month=0, values=(1.25,) * 48)
    report = backtester.run_backtest(spot, flat_curves(spot), CostCurve.zero(), base_params, _optimal())
    np.testing.assert_allclose(report.cash_flows, 0.0, atol=1e-12)
    assert report.stats.an_cf == pytest.approx(0.0, abs=1e-9)
    assert report.stats.cfar == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(report.mtm, 0.0, atol=1e-12)
    np.testing.assert_allclose(report.long_nominal + report.short_nominal, 1.0, atol=1e-9)


def test_hedge_gains_when_domestic_appreciates(base_params):
    # foreign per domestic falls: forwards struck earlier settle above spot
    spot = SpotSeries(start_month=0, values=tuple(np.linspace(1.5, 1.0, 61)))
    report = backtester.run_backtest(
        spot, flat_curves(spot), CostCurve.zero(), base_params, _optimal(ranking=RankingMode.ASSUMPTION)
    )
    assert np.all(report.cash_flows >= 0.0)
    assert report.hedged_pnl[-1] > report.unhedged_pnl[-1]
    assert report.unhedged_pnl[-1] == pytest.approx(-0.5)


def test_backtest_report_frames(base_params, reference_costs):
    spot, curves = synthetic_history(base_params, 60, seed=1, ratios=carry_ratio_table())
    report = backtester.run_backtest(spot, curves, reference_costs, base_params, _optimal())
    frame = report.monthly_frame()
    assert len(frame) == 60
    assert {"carry_3m", "carry_12m", "carry_60m", "hedged_mtm_pnl"} <= set(frame.columns)
    assert report.stats.n_months == 59
    book = report.book_frame()
    assert book["nominal"].sum() == pytest.approx(1.0, abs=1e-9)
    assert (book["expiry_month"] > spot.end_month).all()


def test_equal_weight_backtest_book(base_params):
    spot = SpotSeries(start_month=0, values=(1.25,) * 40)
    strategy = StrategySpec(kind=StrategyKind.EQUAL_WEIGHT, ladder_months=12)
    report = backtester.run_backtest(spot, flat_curves(spot), CostCurve.zero(), base_params, strategy)
    book = report.book_frame()
    assert len(book) == 12
    np.testing.assert_allclose(book["nominal"], 1 / 12, atol=1e-12)
    assert report.new_long[0] == pytest.approx(1.0)
    np.testing.assert_allclose(report.new_long[1:], 1 / 12, atol=1e-12)


def test_missing_curve_is_a_data_gap(base_params):
    spot = SpotSeries(start_month=0, values=(1.25,) * 12)
    curves = flat_curves(spot)
    del curves[5]
    with pytest.raises(DataGap):
        backtester.run_backtest(spot, curves, CostCurve.zero(), base_params, _optimal())


def test_run_backtests_keeps_strategy_order(base_params):
    spot = SpotSeries(start_month=0, values=(1.25,) * 24)
    strategies = StrategySpec.reference_set()
    reports = backtester.run_backtests(spot, flat_curves(spot), CostCurve.zero(), base_params, strategies)
    assert list(reports) == ["Str1", "Str2", "Str3", "Str4", "Str5", "Str6", "Eq 1Y", "Eq 3Y", "Eq 10Y"]


# ---------------- Synthetic strategy table ----------------
@pytest.mark.slow
def test_long_only_strategies_scale_with_budget(reference_costs):
    truth = OuParams(k=0.4, theta=THETA, nu=0.05)
    spot, curves = synthetic_history(truth, 1200, seed=2018, ratios=carry_ratio_table())
    params = ou_model.calibrate(spot)
    budgets = [0.02, 0.01, 0.005, 0.002]
    strategies = [
        StrategySpec(kind=StrategyKind.OPTIMAL, name=f"L={b}", config=LiquidityConfig(budget=b, a_lower=0.0))
        for b in budgets
    ]
    reports = backtester.run_backtests(spot, curves, reference_costs, params, strategies, max_workers=4)
    realized = [reports[s.label].stats.cfar / 100.0 for s in strategies]
    assert all(b < a for a, b in zip(realized, realized[1:]))
    for cfar, budget in zip(realized, budgets):
        assert cfar <= 1.3 * budget
