import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.commands import COMMANDS
from app.core.config import settings
from app.core.exceptions import HedgeEngineError
from app.core.logging import console, setup_logging
from app.models.response_models import ErrorResponse

logger = logging.getLogger(__name__)

USAGE_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hedge-tenor",
        description=f"{settings.app_name}: FX forward tenor allocation under a Cash-Flow-at-Risk budget.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def _report(error: Exception, code: str, details, fmt: str) -> None:
    message = str(error) if not isinstance(error, HedgeEngineError) else error.message
    logger.error(message)
    if fmt == "json":
        payload = ErrorResponse(error_code=code, message=message, details=details)
        console.print_json(payload.model_dump_json())


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(args.log_level or ("DEBUG" if settings.debug else settings.log_level))
    try:
        return args.handler(args)
    except SystemExit as e:
        # usage errors raised by a handler through its sub-parser
        return int(e.code or 0)
    except HedgeEngineError as e:
        _report(e, e.error_code, e.details, args.format)
        return e.exit_code
    except ValidationError as e:
        errors = e.errors(include_url=False, include_context=False, include_input=False)
        _report(e, "validation_error", {"errors": errors}, args.format)
        return 1


if __name__ == "__main__":
    sys.exit(main())
