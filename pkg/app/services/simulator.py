import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, NamedTuple, Tuple

import numpy as np

from app.models.domain_models import RankingMode
from app.models.request_models import SimulationSpec
from app.models.response_models import SimulationReport
from app.services import allocator, ou_model
from app.services.hedge_book import HedgeBook
from app.services.market_data import cost_strip, forward_factor_strip
from app.services.roll import roll_month

logger = logging.getLogger(__name__)


class ChunkResult(NamedTuple):
    cash_flows: np.ndarray  # (paths, months)
    new_nominal_sum: np.ndarray  # (months, tenors), summed over the chunk's paths
    infeasible_events: int
    unrepaired_breaches: int
    max_hedge_deviation: float


def run_chunk(spec: SimulationSpec, first_path: int, n_paths: int) -> ChunkResult:
    """Simulate paths first_path .. first_path + n_paths - 1, each with its own book."""
    n = spec.config.max_tenor_months
    n_months = spec.horizon_months + 1
    spots = ou_model.simulate_paths(
        spec.params, spec.s0, n_paths, spec.horizon_months, spec.seed, first_path=first_path
    )
    factors = forward_factor_strip(spec.ratios, n)
    costs = cost_strip(spec.costs, n)
    fixed_ranking = (
        allocator.rank_tenors(None, None, None, None, RankingMode.ASSUMPTION, n)
        if spec.ranking == RankingMode.ASSUMPTION
        else None
    )

    cash_flows = np.zeros((n_paths, n_months))
    nominal_sum = np.zeros((n_months, n))
    infeasible = unrepaired = 0
    deviation = 0.0
    for row in range(n_paths):
        book = HedgeBook(target_nominal=spec.target_nominal)
        for month in range(n_months):
            spot = float(spots[row, month])
            forwards = spot * factors
            ranking = fixed_ranking if fixed_ranking is not None else allocator.rank_tenors(
                spec.params, spot, forwards, costs, spec.ranking, n
            )
            outcome = roll_month(book, month, spot, forwards, spec.params, spec.config, costs, ranking)
            cash_flows[row, month] = outcome.cash_flow
            np.add.at(nominal_sum[month], outcome.allocation.tenors - 1, outcome.allocation.nominals)
            infeasible += outcome.infeasible
            unrepaired += outcome.unrepaired
            deviation = max(deviation, abs(book.live_nominal - book.target_nominal))
    return ChunkResult(cash_flows, nominal_sum, infeasible, unrepaired, deviation)


def _chunks(n_paths: int, size: int) -> List[Tuple[int, int]]:
    return [(first, min(size, n_paths - first)) for first in range(0, n_paths, size)]


def run_simulation(
    spec: SimulationSpec,
    *,
    max_workers: int = 1,
    chunk_size: int = 250,
    steady_state_start: int = 36,
) -> SimulationReport:
    """
    Monte Carlo dynamic hedging run.

    Paths are split into fixed-size chunks and reduced in chunk order, so the
    report is identical for any worker count.
    """
    started = time.perf_counter()
    chunks = _chunks(spec.n_paths, chunk_size)
    logger.info(
        f"Simulating {spec.n_paths} paths x {spec.horizon_months} months "
        f"in {len(chunks)} chunks on {max_workers} worker(s)"
    )
    if max_workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(
                pool.map(run_chunk, [spec] * len(chunks), *zip(*chunks))
            )
    else:
        results = []
        for i, (first, count) in enumerate(chunks, start=1):
            results.append(run_chunk(spec, first, count))
            logger.info(f"chunk {i}/{len(chunks)} done")

    cash_flows = np.concatenate([r.cash_flows for r in results], axis=0)
    nominal_sum = np.zeros_like(results[0].new_nominal_sum)
    for r in results:
        nominal_sum += r.new_nominal_sum

    report = SimulationReport(
        months=np.arange(spec.horizon_months + 1),
        mean_cf=cash_flows.mean(axis=0),
        std_cf=cash_flows.std(axis=0, ddof=1) if spec.n_paths > 1 else np.zeros(spec.horizon_months + 1),
        quantile_cf=np.quantile(cash_flows, spec.config.tail_p, axis=0),
        tail_p=spec.config.tail_p,
        n_samples=spec.n_paths,
        mean_new_nominal=nominal_sum / spec.n_paths,
        path_cumulative_cf=cash_flows.sum(axis=1),
        infeasible_events=sum(r.infeasible_events for r in results),
        unrepaired_breaches=sum(r.unrepaired_breaches for r in results),
        max_hedge_deviation=max(r.max_hedge_deviation for r in results),
        steady_state_start=steady_state_start,
    )
    if report.infeasible_events:
        logger.warning(f"{report.infeasible_events} infeasible roll dates completed with a shortfall trade")
    logger.info(f"Simulation finished in {time.perf_counter() - started:.1f}s")
    if report.steady_state.any():
        logger.info(
            f"steady-state {spec.config.tail_p:.0%} quantile of monthly cash flow: "
            f"{report.quantile_cf[report.steady_state].mean():.5f}"
        )
    return report
