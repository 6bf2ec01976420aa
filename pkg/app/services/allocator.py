"""
Greedy liquidity-constrained tenor allocation.

For a bucket with net pre-trade nominal n, a new trade a changes the bucket's
CFaR to

    g(a) = C0 - a*m + |n + a|*s,    m = F - E,  s = sigma*|z_p|

which is convex and piecewise linear with slope u = s - m (the unit CFaR) where
n + a > 0 and d = -m - s where n + a < 0. Fill capacities and repairs below are
the exact end points of {a : g(a) <= L}; when the net sign is unchanged they
reduce to (L - pre) / unit.
"""

import logging
from typing import Optional

import numpy as np

from app.core.exceptions import DomainError, InfeasibleHedge
from app.models.domain_models import LiquidityConfig, OuParams, RankingMode
from app.models.request_models import SensitivitySweep, StaticScenario, SweepParameter
from app.models.response_models import AllocationResult, BucketAction, CfarProfile, SensitivityResult, TenorRanking
from app.services import cfar_engine, ou_model
from app.services.hedge_book import HedgeBook
from app.services.market_data import CostLike, CurveLike, cost_strip, forward_strip, static_curve

logger = logging.getLogger(__name__)

BREACH_TOLERANCE = 1e-12
PLACEMENT_TOLERANCE = 1e-12


# ---------------- Ranking ----------------
def net_carry_strip(params: OuParams, s_t: float, curve: CurveLike, costs: CostLike, max_tenor: int) -> np.ndarray:
    """Annualized expected carry net of costs for tenors 1..max_tenor."""
    years = np.arange(1, max_tenor + 1) / 12.0
    forwards = forward_strip(curve, max_tenor)
    expected = ou_model.conditional_mean(params, s_t, years)
    return (forwards - expected) / years - cost_strip(costs, max_tenor)


def expected_net_carry(params: OuParams, s_t: float, curve: CurveLike, costs: CostLike, tenor_months: int) -> float:
    return float(net_carry_strip(params, s_t, curve, costs, tenor_months)[tenor_months - 1])


def rank_tenors(
    params: Optional[OuParams],
    s_t: Optional[float],
    curve: Optional[CurveLike],
    costs: CostLike,
    mode: RankingMode,
    max_tenor: int,
) -> TenorRanking:
    """Shortest-first (assumption) or by expected net carry, best first, ties to the shorter tenor."""
    if mode == RankingMode.ASSUMPTION:
        return TenorRanking(tenors=tuple(range(1, max_tenor + 1)))
    carry = net_carry_strip(params, s_t, curve, costs, max_tenor)
    order = np.argsort(-carry, kind="stable")
    return TenorRanking(
        tenors=tuple(int(t) for t in order + 1), carries=tuple(float(c) for c in carry[order])
    )


# ---------------- Bucket solver ----------------
def _slopes(prof: CfarProfile, tail_p: float):
    s = prof.sigma * abs(cfar_engine.inv_norm_cdf(tail_p))
    m = prof.forward - prof.expected_spot
    return s - m, -m - s


def _fill_capacity(pre, net, u, d, budget):
    """Largest a >= 0 with g(a) <= budget, for buckets with pre <= budget; inf when unbounded."""
    with np.errstate(divide="ignore", invalid="ignore"):
        slack = budget - pre
        at_zero = pre - net * d  # CFaR once a short bucket is netted to zero
        long_side = np.where(u > 0, slack / u, np.inf)
        crossing = -net + np.where(u > 0, (budget - at_zero) / u, np.inf)
        before_zero = slack / d
        cap = np.where(net >= 0, long_side, np.where(at_zero <= budget, crossing, before_zero))
    return np.maximum(cap, 0.0)


def _repair(pre, net, u, d, budget):
    """Closest-to-zero a <= 0 bringing a breached bucket to budget; (a, repaired flag)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        first = (budget - pre) / u
        at_zero = pre - net * u
        kinked = -net + (budget - at_zero) / d
        long_side = np.where(
            u <= 0,
            0.0,
            np.where(first >= -net, first, np.where(d > 0, kinked, -net)),
        )
        long_ok = (u > 0) & ((first >= -net) | (d > 0))
        short_side = np.where(d > 0, (budget - pre) / d, 0.0)
        short_ok = d > 0
    a = np.where(net > 0, long_side, short_side)
    ok = np.where(net > 0, long_ok, short_ok)
    return np.minimum(a, 0.0), ok


def _place(order, capacity, amount):
    """Greedy walk of `order` over `capacity`; returns placed nominals aligned with `order`."""
    caps = capacity[order]
    cumulative = np.cumsum(caps)
    placed = np.zeros_like(caps)
    if amount <= 0.0 or caps.size == 0:
        return placed
    stop = int(np.searchsorted(cumulative, amount, side="left"))
    if stop >= caps.size:
        return caps.copy()
    placed[:stop] = caps[:stop]
    placed[stop] = amount - (cumulative[stop - 1] if stop > 0 else 0.0)
    return placed


def allocate(
    book: HedgeBook,
    params: OuParams,
    config: LiquidityConfig,
    curve: CurveLike,
    costs: CostLike,
    now: int,
    s_t: float,
    amount: float,
    ranking: Optional[TenorRanking] = None,
) -> AllocationResult:
    """
    New trades for one roll date.

    Breached buckets are repaired first with trades at their own tenor; the roll
    amount plus the repaired nominal is then placed greedily along the ranking,
    each bucket filled to the budget and the last one truncated. Raises
    InfeasibleHedge, carrying the partial result, when the ranking runs out.
    """
    n = config.max_tenor_months
    budget = config.budget
    if ranking is None:
        ranking = TenorRanking(tenors=tuple(range(1, n + 1)))
    order = np.asarray(ranking.tenors, dtype=int) - 1
    if order.size != n or not np.array_equal(np.sort(order), np.arange(n)):
        raise DomainError(f"ranking must be a permutation of tenors 1..{n}")

    prof = cfar_engine.profile(book, params, config, now, s_t, curve)
    pre, net = prof.cfar_pre, prof.net_nominal
    u, d = _slopes(prof, config.tail_p)

    breached = pre > budget + BREACH_TOLERANCE
    new = np.zeros(n)
    action = np.full(n, None, dtype=object)

    # breached buckets: trade at the bucket's own tenor, bounded below by a_lower
    repair, repaired = _repair(pre, net, u, d, budget)
    repair = np.where(breached, repair, 0.0)
    clamped = breached & (repair < config.a_lower)
    new[breached] = np.maximum(repair[breached], config.a_lower)
    action[breached & repaired] = BucketAction.REPAIR
    action[clamped] = BucketAction.REPAIR_CLAMPED
    action[breached & ~repaired] = BucketAction.UNREPAIRED
    repair_total = float(-new[breached].sum())
    required = amount + repair_total

    open_order = order[~breached[order]]
    if required >= 0.0:
        capacity = _fill_capacity(pre, net, u, d, budget)
        unbounded = np.isinf(capacity)
        over = capacity > config.a_upper
        capacity = np.minimum(capacity, config.a_upper)
        placed = _place(open_order, capacity, required)
        walk = open_order
    else:
        # more nominal matured short than long: unwind from the worst-ranked bucket up
        capacity = _fill_capacity(pre, -net, -d, -u, budget)
        unbounded = np.isinf(capacity)
        over = capacity > -config.a_lower
        capacity = np.minimum(capacity, -config.a_lower)
        walk = open_order[::-1]
        placed = -_place(walk, capacity, -required)

    new[walk] = placed
    touched = walk[placed != 0.0]
    total = float(placed.sum())
    for idx in touched:
        if abs(new[idx]) < capacity[idx]:
            action[idx] = BucketAction.FILL_TRUNCATED
        elif unbounded[idx]:
            action[idx] = BucketAction.FILL_UNBOUNDED
        elif over[idx]:
            action[idx] = BucketAction.FILL_CLAMPED
        else:
            action[idx] = BucketAction.FILL
    shortfall = required - total
    fully_hedged = abs(shortfall) <= PLACEMENT_TOLERANCE * max(1.0, abs(required))

    repair_idx = np.flatnonzero(breached)
    sequence = np.concatenate((repair_idx, touched)).astype(int)
    post = cfar_engine.bucket_cfar(
        net + new, prof.weighted_rate + new * prof.forward, prof.expected_spot, prof.sigma,
        cfar_engine.inv_norm_cdf(config.tail_p),
    )
    carry = (
        np.array(ranking.carries)[np.argsort(order)]
        if ranking.carries is not None
        else net_carry_strip(params, s_t, prof.forward, costs, n)
    )

    result = AllocationResult(
        as_of_month=now,
        amount=amount,
        repair_total=repair_total,
        required=required,
        placed=total,
        shortfall=0.0 if fully_hedged else shortfall,
        fully_hedged=fully_hedged,
        tenors=sequence + 1,
        nominals=new[sequence],
        cfar_pre=pre[sequence],
        unit_cfar=prof.unit_cfar[sequence],
        cfar_post=post[sequence],
        actions=tuple(action[sequence]),
        expected_carry=float(new @ carry),
    )
    if result.flagged:
        logger.debug(f"month {now}: flagged buckets {result.flagged}")
    if not fully_hedged:
        raise InfeasibleHedge(
            f"month {now}: ranking exhausted with {shortfall:.6g} nominal unplaced",
            result=result,
            profile=cfar_engine.with_trades(prof, new, config.tail_p),
        )
    return result


def complete_shortfall(error: InfeasibleHedge, ranking: TenorRanking, tail_p: float) -> AllocationResult:
    """Place an infeasible allocation's residual in the last-ranked bucket, flagged `shortfall`."""
    result, prof = error.result, error.profile
    idx = ranking.tenors[-1] - 1
    new = prof.new_nominal.copy()
    new[idx] += result.shortfall
    post = cfar_engine.with_trades(prof, new, tail_p).cfar_post
    logger.warning(
        f"month {result.as_of_month}: {result.shortfall:.6g} nominal placed beyond budget "
        f"at tenor {idx + 1}"
    )
    return result.model_copy(
        update={
            "tenors": np.append(result.tenors, idx + 1),
            "nominals": np.append(result.nominals, result.shortfall),
            "cfar_pre": np.append(result.cfar_pre, prof.cfar_pre[idx]),
            "unit_cfar": np.append(result.unit_cfar, prof.unit_cfar[idx]),
            "cfar_post": np.append(result.cfar_post, post[idx]),
            "actions": result.actions + (BucketAction.SHORTFALL,),
            "placed": result.placed + result.shortfall,
        }
    )


# ---------------- Static sensitivity ----------------
def _scenario_with(base: StaticScenario, parameter: SweepParameter, value: float) -> StaticScenario:
    params = base.params.model_dump()
    config = base.config.model_dump()
    s0 = base.s0
    if parameter == SweepParameter.BUDGET:
        config["budget"] = value
    elif parameter == SweepParameter.TAIL_P:
        config["tail_p"] = value
    elif parameter == SweepParameter.S0:
        s0 = value
    else:
        params[parameter.value] = value
    return StaticScenario(
        params=OuParams(**params),
        s0=s0,
        config=LiquidityConfig(**config),
        amount=base.amount,
        convention=base.convention,
        ranking=base.ranking,
    )


def static_allocation(scenario: StaticScenario) -> AllocationResult:
    """Allocate `scenario.amount` from an empty book at month 0."""
    n = scenario.config.max_tenor_months
    curve = static_curve(scenario.params, scenario.s0, n, scenario.convention)
    ranking = rank_tenors(scenario.params, scenario.s0, curve, None, scenario.ranking, n)
    book = HedgeBook(target_nominal=scenario.amount)
    return allocate(book, scenario.params, scenario.config, curve, None, 0, scenario.s0, scenario.amount, ranking)


def static_sensitivity(base: StaticScenario, sweep: SensitivitySweep) -> SensitivityResult:
    """One empty-book allocation per sweep value, other parameters held at `base`."""
    rows, max_tenors = [], {}
    for value in sweep.values:
        scenario = _scenario_with(base, sweep.parameter, value)
        result = static_allocation(scenario)
        nominals = np.zeros(scenario.config.max_tenor_months)
        np.add.at(nominals, result.tenors - 1, result.nominals)
        occupied = np.flatnonzero(np.abs(nominals) > PLACEMENT_TOLERANCE)
        max_tenors[value] = int(occupied[-1] + 1) if occupied.size else 0
        rows += [(value, tenor, float(a)) for tenor, a in enumerate(nominals, start=1)]
        logger.info(f"{sweep.parameter.value}={value:g}: max occupied tenor {max_tenors[value]} months")
    return SensitivityResult(parameter=sweep.parameter.value, rows=rows, max_tenors=max_tenors)
