import logging
from typing import NamedTuple, Optional

import numpy as np

from app.core.exceptions import InfeasibleHedge
from app.models.domain_models import LiquidityConfig, OuParams
from app.models.response_models import AllocationResult, BucketAction, TenorRanking
from app.services import allocator
from app.services.hedge_book import HedgeBook, settle_cash_flow

logger = logging.getLogger(__name__)

UNREPAIRED_ACTIONS = (BucketAction.UNREPAIRED, BucketAction.REPAIR_CLAMPED)


class RollOutcome(NamedTuple):
    cash_flow: float
    matured_nominal: float
    allocation: AllocationResult
    infeasible: bool
    unrepaired: int


def roll_month(
    book: HedgeBook,
    month: int,
    spot: float,
    forwards: np.ndarray,
    params: OuParams,
    config: LiquidityConfig,
    costs: Optional[np.ndarray],
    ranking: TenorRanking,
) -> RollOutcome:
    """
    Expire, settle and re-hedge one month.

    An infeasible allocation is completed by placing the residual in the
    last-ranked bucket so the book stays fully hedged.
    """
    matured_nominal, matured = book.expire(month)
    cash_flow = settle_cash_flow(matured, spot)
    amount = book.target_nominal - book.live_nominal
    infeasible = False
    try:
        allocation = allocator.allocate(
            book, params, config, forwards, costs, month, spot, amount, ranking
        )
    except InfeasibleHedge as e:
        allocation = allocator.complete_shortfall(e, ranking, config.tail_p)
        infeasible = True
    book.add_allocation(month, allocation, forwards)
    unrepaired = sum(1 for a in allocation.actions if a in UNREPAIRED_ACTIONS)
    return RollOutcome(cash_flow, matured_nominal, allocation, infeasible, unrepaired)
