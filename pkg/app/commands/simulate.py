import logging

from app.commands.common import (
    BASE,
    add_liquidity_flags,
    add_model_flags,
    add_output_flags,
    add_ranking_flag,
    existing_file,
    finish,
    positive_float,
    positive_int,
    read_config,
    read_params,
    render_table,
    run_config,
)
from app.core.config import settings
from app.models.domain_models import Quotation, RankingMode, RatioTable
from app.models.request_models import SimulationSpec
from app.services import market_data, simulator
from app.utils.helpers import to_json

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "simulate",
        help="Monte Carlo dynamic hedging",
        description="Roll the hedge book monthly along simulated OU spot paths and report cash-flow statistics.",
    )
    parser.add_argument("--paths", type=positive_int, default=10_000, help="number of paths (default: 10000)")
    parser.add_argument("--months", type=positive_int, default=240, help="horizon in months (default: 240)")
    parser.add_argument("--seed", type=int, default=None,
                        help=f"random seed (default: $HEDGE_DEFAULT_SEED or {settings.default_seed})")
    parser.add_argument("--s0", type=positive_float, default=BASE.s0,
                        help=f"initial spot, foreign per domestic (default: {BASE.s0:.6g})")
    add_model_flags(parser)
    add_liquidity_flags(parser)
    add_ranking_flag(parser, RankingMode.ASSUMPTION)

    curves = parser.add_argument_group("forward curve model (forward = spot / ratio)")
    curves.add_argument("--ratios", type=existing_file, default=None,
                        help="ratio CSV (tenor_months,ratio); default: ratio 1 at every tenor")
    curves.add_argument("--spot", type=existing_file, default=None,
                        help="spot history CSV; with --forwards, derives the ratio table")
    curves.add_argument("--forwards", type=existing_file, default=None,
                        help="forward history CSV (month,tenor_months,forward)")
    curves.add_argument("--quotation", choices=[q.value for q in Quotation],
                        default=Quotation.FOREIGN_PER_DOMESTIC.value, help="quotation of the history files")
    curves.add_argument("--costs", type=existing_file, default=None,
                        help="cost CSV used by --ranking ranked")
    parser.add_argument("--workers", type=positive_int, default=None,
                        help=f"worker processes (default: $HEDGE_MAX_WORKERS or {settings.max_workers})")
    add_output_flags(parser)
    parser.set_defaults(handler=handle, subparser=parser)


def _ratio_table(args, max_tenor: int) -> RatioTable:
    if args.ratios is not None:
        return market_data.load_ratio_csv(args.ratios)
    if args.spot is not None and args.forwards is not None:
        quotation = Quotation(args.quotation)
        spot = market_data.load_spot_csv(args.spot, quotation)
        curves = market_data.load_forward_csv(args.forwards, spot, quotation)
        return market_data.ratio_table_from_history(curves[m] for m in sorted(curves))
    return RatioTable.flat(max_tenor)


def handle(args) -> int:
    if (args.spot is None) != (args.forwards is None):
        args.subparser.error("--spot and --forwards must be given together")
    params, config = read_params(args), read_config(args)
    seed = settings.default_seed if args.seed is None else args.seed
    run = run_config(
        args,
        inputs={"ratios": args.ratios, "spot": args.spot, "forwards": args.forwards, "costs": args.costs},
        params=params,
        config=config,
        seed=seed,
        paths=args.paths,
        months=args.months,
        s0=args.s0,
        ranking=args.ranking,
    )
    spec = SimulationSpec(
        params=params,
        s0=args.s0,
        horizon_months=args.months,
        n_paths=args.paths,
        seed=seed,
        config=config,
        ratios=_ratio_table(args, config.max_tenor_months),
        ranking=RankingMode(args.ranking),
        costs=market_data.load_cost_csv(args.costs) if args.costs is not None else None,
    )
    report = simulator.run_simulation(
        spec,
        max_workers=args.workers or settings.max_workers,
        chunk_size=settings.path_chunk_size,
        steady_state_start=settings.steady_state_start,
    )
    summary = {
        "paths": spec.n_paths,
        "months": spec.horizon_months,
        "steady_state_start": report.steady_state_start,
        "infeasible_events": report.infeasible_events,
        "unrepaired_breaches": report.unrepaired_breaches,
        "max_hedge_deviation": report.max_hedge_deviation,
        "mean_path_cumulative_cf": float(report.path_cumulative_cf.mean()),
    }
    if report.steady_state.any():
        steady = report.steady_state
        summary["steady_state_quantile_cf"] = float(report.quantile_cf[steady].mean())
        summary["max_quantile_standard_error"] = float(report.quantile_standard_error()[steady].max())
    return finish(
        run,
        [
            render_table(report.cash_flow_frame(), "cash_flows", args.format),
            render_table(report.nominal_frame(), "nominals", args.format),
            ("summary.json", to_json(summary)),
        ],
    )
