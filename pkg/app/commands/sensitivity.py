from app.commands.common import (
    BASE,
    add_liquidity_flags,
    add_model_flags,
    add_output_flags,
    add_ranking_flag,
    finish,
    float_list,
    positive_float,
    read_config,
    read_params,
    render_table,
    run_config,
)
from app.models.domain_models import CurveConvention, RankingMode
from app.models.request_models import SensitivitySweep, StaticScenario, SweepParameter
from app.services import allocator


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "sensitivity",
        help="static allocation swept over one parameter",
        description="Repeat the empty-book allocation for each value of one parameter, others fixed.",
    )
    parser.add_argument("--sweep", choices=[p.value for p in SweepParameter], required=True,
                        help="parameter to vary: L (budget), p (tail probability), nu, s0, k or theta")
    parser.add_argument("--values", type=float_list, required=True,
                        help="comma-separated sweep values, e.g. 0.05,0.02,0.01")
    add_model_flags(parser)
    add_liquidity_flags(parser)
    parser.add_argument("--s0", type=positive_float, default=BASE.s0,
                        help=f"current spot, foreign per domestic (default: {BASE.s0:.6g})")
    parser.add_argument("--convention", choices=[c.value for c in CurveConvention],
                        default=CurveConvention.SPOT.value,
                        help="forward curve: 'spot' = flat at s0, 'expected' = expected spot path (default: spot)")
    add_ranking_flag(parser, RankingMode.ASSUMPTION)
    add_output_flags(parser)
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    params, config = read_params(args), read_config(args)
    run = run_config(
        args,
        inputs={},
        params=params,
        config=config,
        sweep=args.sweep,
        values=args.values,
        s0=args.s0,
        convention=args.convention,
        ranking=args.ranking,
    )
    base = StaticScenario(
        params=params,
        s0=args.s0,
        config=config,
        convention=CurveConvention(args.convention),
        ranking=RankingMode(args.ranking),
    )
    result = allocator.static_sensitivity(
        base, SensitivitySweep(parameter=SweepParameter(args.sweep), values=args.values)
    )
    return finish(run, [render_table(result.to_frame(), "sensitivity", args.format)])
