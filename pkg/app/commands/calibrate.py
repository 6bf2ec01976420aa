import logging

from app.commands.common import add_output_flags, existing_file, finish, run_config
from app.models.domain_models import Quotation
from app.services import market_data, ou_model
from app.utils.helpers import format_month, to_json

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "calibrate",
        help="fit OU parameters to a monthly spot history",
        description="Fit k, theta, nu by AR(1) least squares on a monthly spot CSV (header month,spot).",
    )
    parser.add_argument("--spot", type=existing_file, required=True, help="spot CSV, months as YYYY-MM")
    parser.add_argument(
        "--quotation",
        choices=[q.value for q in Quotation],
        default=Quotation.FOREIGN_PER_DOMESTIC.value,
        help="quotation of the file; domestic-per-foreign files are inverted before fitting",
    )
    add_output_flags(parser)
    parser.set_defaults(handler=handle)


def handle(args) -> int:
    run = run_config(args, inputs={"spot": args.spot}, quotation=args.quotation)
    series = market_data.load_spot_csv(args.spot, Quotation(args.quotation))
    params = ou_model.calibrate(series)
    payload = {
        **params.model_dump(),
        "observations": len(series.values),
        "start": format_month(series.start_month),
        "end": format_month(series.end_month),
    }
    run = run.model_copy(update={"params": params})
    return finish(run, [("params.json", to_json(payload))])
