import logging

import pandas as pd

from app.commands.common import (
    add_liquidity_flags,
    add_model_flags,
    add_output_flags,
    add_ranking_flag,
    existing_file,
    finish,
    positive_int,
    read_config,
    read_costs,
    read_params,
    render_table,
    run_config,
)
from app.core.config import settings
from app.models.domain_models import Quotation, RankingMode
from app.models.request_models import StrategyKind, StrategySpec
from app.services import backtester, market_data, ou_model
from app.utils.helpers import slug

logger = logging.getLogger(__name__)

STRATEGY_TABLE = "table"


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "backtest",
        help="replay a strategy on historical data",
        description="Replay the optimal strategy or an equal-weight ladder month by month on spot and "
        "forward history, with in-sample OU calibration unless k, theta and nu are given.",
    )
    parser.add_argument("--spot", type=existing_file, required=True, help="spot CSV (month,spot)")
    parser.add_argument("--forwards", type=existing_file, required=True,
                        help="forward CSV (month,tenor_months,forward)")
    parser.add_argument("--costs", type=existing_file, default=None,
                        help="cost CSV (tenor_months,annualized_cost); default: no costs")
    parser.add_argument("--quotation", choices=[q.value for q in Quotation],
                        default=Quotation.FOREIGN_PER_DOMESTIC.value, help="quotation of spot and forward files")
    parser.add_argument(
        "--strategy",
        choices=[k.value for k in StrategyKind] + [STRATEGY_TABLE],
        default=StrategyKind.OPTIMAL.value,
        help="optimal, equal_weight, or 'table' for Str1-Str6 plus the 1Y/3Y/10Y ladders",
    )
    parser.add_argument("--ladder", type=positive_int, default=12,
                        help="equal-weight ladder length N in months (default: 12)")
    add_model_flags(parser, defaults=False)
    add_liquidity_flags(parser)
    add_ranking_flag(parser, RankingMode.RANKED)
    parser.add_argument("--workers", type=positive_int, default=None,
                        help=f"worker processes for independent strategies (default: {settings.max_workers})")
    add_output_flags(parser)
    parser.set_defaults(handler=handle)


def _strategies(args):
    if args.strategy == STRATEGY_TABLE:
        specs = StrategySpec.reference_set(args.max_tenor)
        return [s.model_copy(update={"ranking": RankingMode(args.ranking)}) for s in specs]
    if args.strategy == StrategyKind.EQUAL_WEIGHT.value:
        return [StrategySpec(kind=StrategyKind.EQUAL_WEIGHT, ladder_months=args.ladder)]
    return [StrategySpec(kind=StrategyKind.OPTIMAL, config=read_config(args), ranking=RankingMode(args.ranking))]


def handle(args) -> int:
    quotation = Quotation(args.quotation)
    spot = market_data.load_spot_csv(args.spot, quotation)
    curves = market_data.load_forward_csv(args.forwards, spot, quotation)
    costs = read_costs(args.costs, args.max_tenor)
    params = read_params(args) or ou_model.calibrate(spot)
    strategies = _strategies(args)
    run = run_config(
        args,
        inputs={"spot": args.spot, "forwards": args.forwards, "costs": args.costs},
        params=params,
        config=read_config(args),
        quotation=args.quotation,
        strategies=[s.label for s in strategies],
        ranking=args.ranking,
    )
    reports = backtester.run_backtests(
        spot,
        curves,
        costs,
        params,
        strategies,
        max_workers=args.workers or settings.max_workers,
        cash_scale=settings.cash_scale,
        tolerance=settings.hedge_tolerance,
    )
    files = [render_table(pd.DataFrame([r.summary_row() for r in reports.values()]), "summary", args.format)]
    for label, report in reports.items():
        files.append(render_table(report.monthly_frame(), f"monthly_{slug(label)}", args.format))
        files.append(render_table(report.book_frame(), f"book_{slug(label)}", args.format))
    return finish(run, files)
