import logging

import numpy as np

from app.commands.common import (
    BASE,
    add_liquidity_flags,
    add_model_flags,
    add_output_flags,
    add_ranking_flag,
    existing_file,
    finish,
    positive_float,
    read_config,
    read_costs,
    read_params,
    render_table,
    run_config,
)
from app.models.domain_models import CurveConvention, RankingMode
from app.services import allocator, cfar_engine
from app.services.hedge_book import HedgeBook
from app.services.market_data import static_curve

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "allocate",
        help="one-shot allocation from an empty book",
        description="Spread a hedge amount over tenors from an empty book under the CFaR budget.",
    )
    add_model_flags(parser)
    add_liquidity_flags(parser)
    parser.add_argument("--s0", type=positive_float, default=BASE.s0,
                        help=f"current spot, foreign per domestic (default: {BASE.s0:.6g})")
    parser.add_argument("--amount", type=float, default=1.0,
                        help="foreign nominal to hedge (default: 1)")
    parser.add_argument(
        "--convention",
        choices=[c.value for c in CurveConvention],
        default=CurveConvention.SPOT.value,
        help="forward curve: 'spot' = flat at s0, 'expected' = expected spot path (default: spot)",
    )
    parser.add_argument("--costs", type=existing_file, default=None,
                        help="cost CSV (tenor_months,annualized_cost) used by --ranking ranked")
    add_ranking_flag(parser, RankingMode.ASSUMPTION)
    add_output_flags(parser)
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    params, config = read_params(args), read_config(args)
    run = run_config(
        args,
        inputs={"costs": args.costs},
        params=params,
        config=config,
        s0=args.s0,
        amount=args.amount,
        convention=args.convention,
        ranking=args.ranking,
    )
    n = config.max_tenor_months
    costs = read_costs(args.costs, n)
    curve = static_curve(params, args.s0, n, CurveConvention(args.convention))
    ranking = allocator.rank_tenors(params, args.s0, curve, costs, RankingMode(args.ranking), n)
    book = HedgeBook(target_nominal=args.amount)
    result = allocator.allocate(book, params, config, curve, costs, 0, args.s0, args.amount, ranking)

    new = np.zeros(n)
    np.add.at(new, result.tenors - 1, result.nominals)
    prof = cfar_engine.profile(book, params, config, 0, args.s0, curve, new_nominal=new)
    book.add_allocation(0, result, curve)
    logger.info(
        f"Placed {result.placed:.6g} over {len(result.new_trades)} tenors, "
        f"longest {int(result.tenors.max()) if result.tenors.size else 0} months"
    )
    return finish(
        run,
        [
            render_table(result.to_frame(), "allocation", args.format),
            render_table(prof.to_frame(), "profile", args.format),
            render_table(book.to_frame(), "book", args.format),
        ],
    )
