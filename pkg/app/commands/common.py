"""Flags and output handling shared by every subcommand."""

import argparse
import logging
import platform
import time
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
import pydantic
import scipy

from app.core.config import settings
from app.models.domain_models import CostCurve, LiquidityConfig, OuParams, RankingMode
from app.models.request_models import RunConfig, StaticScenario
from app.models.response_models import RunManifest
from app.services.market_data import load_cost_csv
from app.utils.helpers import file_digest, frame_to_csv, frame_to_json, parse_float_list, to_json, write_outputs

logger = logging.getLogger(__name__)

BASE = StaticScenario.base()


# ---------------- Argument types ----------------
def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not np.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return value


def float_list(text: str) -> List[float]:
    try:
        values = parse_float_list(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("at least one value is required")
    return values


def existing_file(text: str) -> Path:
    path = Path(text)
    if not path.is_file():
        raise argparse.ArgumentTypeError(f"file not found: {text}")
    return path


# ---------------- Flag groups ----------------
def add_output_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("output")
    group.add_argument(
        "--output-dir",
        type=Path,
        default=None,
        help=f"directory for result files (default: $HEDGE_OUTPUT_DIR or {settings.output_dir})",
    )
    group.add_argument("--format", choices=["csv", "json"], default="csv", help="table format (default: csv)")
    group.add_argument("--log-level", default=None, help=f"logging level (default: {settings.log_level})")


def add_model_flags(parser: argparse.ArgumentParser, *, defaults: bool = True) -> None:
    group = parser.add_argument_group("spot model (Ornstein-Uhlenbeck, time in years)")
    p = BASE.params
    group.add_argument("--k", type=positive_float, default=p.k if defaults else None,
                       help=f"mean-reversion speed, 1/years (default: {p.k if defaults else 'calibrated'})")
    group.add_argument("--theta", type=positive_float, default=p.theta if defaults else None,
                       help="long-run mean spot, foreign per domestic"
                       + (f" (default: {p.theta:.6g})" if defaults else " (default: calibrated)"))
    group.add_argument("--nu", type=positive_float, default=p.nu if defaults else None,
                       help="spot volatility per sqrt-year"
                       + (f" (default: {p.nu})" if defaults else " (default: calibrated)"))


def add_liquidity_flags(parser: argparse.ArgumentParser, *, a_lower: float = -1.0) -> None:
    group = parser.add_argument_group("liquidity constraint")
    group.add_argument("-L", "--budget", type=positive_float, default=BASE.config.budget,
                       help=f"liquidity budget L, domestic currency per unit hedged (default: {BASE.config.budget})")
    group.add_argument("-p", "--tail-p", type=positive_float, default=BASE.config.tail_p,
                       help=f"CFaR tail probability, in (0, 0.5) (default: {BASE.config.tail_p})")
    group.add_argument("--a-lower", type=float, default=a_lower,
                       help=f"lower bound on one new nominal, foreign units <= 0 (default: {a_lower})")
    group.add_argument("--a-upper", type=float, default=1.0,
                       help="upper bound on one new nominal, foreign units >= 0 (default: 1)")
    group.add_argument("--max-tenor", type=positive_int, default=120,
                       help="longest hedge tenor in months (default: 120)")


def add_ranking_flag(parser: argparse.ArgumentParser, default: RankingMode) -> None:
    parser.add_argument(
        "--ranking",
        choices=[m.value for m in RankingMode],
        default=default.value,
        help="tenor order: 'assumption' = shortest first, 'ranked' = expected carry net of costs "
        f"(default: {default.value})",
    )


# ---------------- Flag readers ----------------
def read_params(args) -> Optional[OuParams]:
    if args.k is None and args.theta is None and args.nu is None:
        return None
    return OuParams(k=args.k, theta=args.theta, nu=args.nu)


def read_config(args) -> LiquidityConfig:
    return LiquidityConfig(
        budget=args.budget,
        tail_p=args.tail_p,
        a_lower=args.a_lower,
        a_upper=args.a_upper,
        max_tenor_months=args.max_tenor,
    )


def read_costs(path: Optional[Path], max_tenor: int) -> CostCurve:
    return load_cost_csv(path) if path is not None else CostCurve.zero(max_tenor)


def run_config(args, *, inputs: Dict[str, Optional[Path]], params=None, config=None, seed=None, **options) -> RunConfig:
    return RunConfig(
        subcommand=args.command,
        inputs={name: path for name, path in inputs.items() if path is not None},
        params=params,
        config=config,
        seed=seed,
        output_dir=args.output_dir or settings.output_dir,
        output_format=args.format,
        options=options,
    )


# ---------------- Output ----------------
def render_table(frame: pd.DataFrame, stem: str, fmt: str) -> Tuple[str, str]:
    if fmt == "json":
        return f"{stem}.json", frame_to_json(frame)
    return f"{stem}.csv", frame_to_csv(frame)


def package_versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
    }


def finish(run: RunConfig, files: Iterable[Tuple[str, str]]) -> int:
    """Render the manifest, then write the outputs as one set with the manifest last."""
    files = list(files)
    manifest = RunManifest(
        app_name=settings.app_name,
        app_version=settings.app_version,
        subcommand=run.subcommand,
        inputs={
            name: {"path": str(path), "sha256": file_digest(path)} for name, path in sorted(run.inputs.items())
        },
        parameters={
            "params": run.params.model_dump() if run.params else None,
            "config": run.config.model_dump() if run.config else None,
            "options": run.options,
        },
        seed=run.seed,
        outputs=[name for name, _ in files],
        versions=package_versions(),
        runtime_seconds=round(time.perf_counter() - run.started, 3),
    )
    files.append(("manifest.json", to_json(manifest.model_dump(mode="json"))))
    written = write_outputs(run.output_dir, files)
    logger.info(f"Wrote {len(written)} files to {run.output_dir}")
    return 0
