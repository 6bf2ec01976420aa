import copy
import logging
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.core.exceptions import HedgeRatioViolation, LedgerError, LedgerOrderError
from app.models.domain_models import ForwardContract, ForwardCurve
from app.models.response_models import AllocationResult
from app.services.market_data import CurveLike, forward_strip, interp_forward

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-9


class HedgeBook:
    """
    Ledger of live FX forwards, netted per (trade_month, expiry_month).

    Besides the contracts it keeps two arrays indexed by expiry month: the net
    nominal and the nominal-weighted rate sum of each bucket, which is all the
    CFaR engine needs.
    """

    def __init__(self, target_nominal: float = 1.0, tolerance: float = DEFAULT_TOLERANCE):
        self.target_nominal = float(target_nominal)
        self.tolerance = tolerance
        self._contracts: Dict[Tuple[int, int], ForwardContract] = {}
        self._by_expiry: Dict[int, List[Tuple[int, int]]] = {}
        self._origin: Optional[int] = None
        self._net = np.zeros(0)
        self._weighted = np.zeros(0)
        self._latest_trade: Optional[int] = None
        self.last_month: Optional[int] = None

    # ---------------- aggregates ----------------
    def _ensure(self, month: int) -> None:
        if month < self._origin:
            raise LedgerOrderError(f"month {month} precedes the ledger origin {self._origin}")
        needed = month - self._origin + 1
        if needed > self._net.size:
            size = max(needed, 2 * self._net.size, 256)
            self._net = np.concatenate((self._net, np.zeros(size - self._net.size)))
            self._weighted = np.concatenate((self._weighted, np.zeros(size - self._weighted.size)))

    def bucket_aggregates(
        self, first_expiry: int, n_buckets: int, *, traded_before: Optional[int] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        (net nominal, sum of nominal * rate) for expiries first_expiry .. first_expiry + n - 1.

        With `traded_before`, contracts traded in or after that month are left out.
        """
        net = np.zeros(n_buckets)
        weighted = np.zeros(n_buckets)
        if self._origin is None:
            return net, weighted
        lo = first_expiry - self._origin
        hi = lo + n_buckets
        src_lo, src_hi = max(lo, 0), min(hi, self._net.size)
        if src_hi > src_lo:
            net[src_lo - lo : src_hi - lo] = self._net[src_lo:src_hi]
            weighted[src_lo - lo : src_hi - lo] = self._weighted[src_lo:src_hi]
        if traded_before is not None and self._latest_trade is not None and self._latest_trade >= traded_before:
            for c in self._contracts.values():
                if c.trade_month >= traded_before and 0 <= c.expiry_month - first_expiry < n_buckets:
                    net[c.expiry_month - first_expiry] -= c.nominal
                    weighted[c.expiry_month - first_expiry] -= c.nominal * c.rate
        return net, weighted

    def net_nominal(self, expiry_month: int) -> float:
        net, _ = self.bucket_aggregates(expiry_month, 1)
        return float(net[0])

    @property
    def live_nominal(self) -> float:
        return float(self._net.sum())

    @property
    def long_nominal(self) -> float:
        return float(sum(c.nominal for c in self._contracts.values() if c.nominal > 0))

    @property
    def short_nominal(self) -> float:
        return float(sum(c.nominal for c in self._contracts.values() if c.nominal < 0))

    @property
    def live_expiries(self) -> List[int]:
        return sorted(self._by_expiry)

    def __len__(self) -> int:
        return len(self._contracts)

    def contracts(self) -> List[ForwardContract]:
        return sorted(self._contracts.values(), key=lambda c: (c.expiry_month, c.trade_month))

    # ---------------- events ----------------
    def expire(self, month: int) -> Tuple[float, List[ForwardContract]]:
        """Remove contracts expiring at `month`; returns (matured nominal A_t, matured contracts)."""
        if self.last_month is not None and month < self.last_month:
            raise LedgerOrderError(
                f"month {month} is before the last processed month {self.last_month}"
            )
        if self._by_expiry and min(self._by_expiry) < month:
            raise LedgerOrderError(
                f"contracts expiring at {min(self._by_expiry)} were never expired before month {month}"
            )
        self.last_month = month
        keys = self._by_expiry.pop(month, [])
        matured = [self._contracts.pop(key) for key in keys]
        if not matured:
            return 0.0, []
        idx = month - self._origin
        amount = float(self._net[idx])
        self._net[idx] = 0.0
        self._weighted[idx] = 0.0
        return amount, matured

    def add_contract(self, contract: ForwardContract) -> None:
        if self.last_month is not None and contract.trade_month < self.last_month:
            raise LedgerOrderError(
                f"trade month {contract.trade_month} is before the last processed month {self.last_month}"
            )
        if self._origin is None:
            self._origin = contract.trade_month
        self._ensure(contract.expiry_month)
        if contract.nominal == 0.0:
            return
        if self._latest_trade is None or contract.trade_month > self._latest_trade:
            self._latest_trade = contract.trade_month
        key = (contract.trade_month, contract.expiry_month)
        existing = self._contracts.get(key)
        if existing is not None:
            if existing.rate != contract.rate:
                raise LedgerError(
                    f"cannot net contracts {key} struck at different rates",
                    details={"rates": [existing.rate, contract.rate]},
                )
            nominal = existing.nominal + contract.nominal
            if nominal == 0.0:
                del self._contracts[key]
                self._by_expiry[key[1]].remove(key)
                if not self._by_expiry[key[1]]:
                    del self._by_expiry[key[1]]
            else:
                self._contracts[key] = ForwardContract(key[0], key[1], nominal, contract.rate)
        else:
            self._contracts[key] = contract
            self._by_expiry.setdefault(key[1], []).append(key)

        idx = contract.expiry_month - self._origin
        self._net[idx] += contract.nominal
        self._weighted[idx] += contract.nominal * contract.rate

    def add_allocation(
        self, month: int, allocation: AllocationResult, curve: CurveLike, *, check: bool = True
    ) -> "HedgeBook":
        """Book the allocation's trades at the month's forward rates."""
        tenors = np.asarray(allocation.tenors, dtype=int)
        nominals = np.asarray(allocation.nominals, dtype=float)
        if tenors.size:
            if tenors.min() < 1:
                raise LedgerError("allocation expiries must be after the trade month")
            rates = forward_strip(curve, int(tenors.max()))[tenors - 1]
            for tenor, nominal, rate in zip(tenors.tolist(), nominals.tolist(), rates.tolist()):
                if nominal != 0.0:
                    self.add_contract(ForwardContract(month, month + tenor, nominal, rate))
        if check:
            self.check_hedge_ratio(month)
        return self

    def check_hedge_ratio(self, month: int) -> float:
        deviation = abs(self.live_nominal - self.target_nominal)
        if deviation > self.tolerance:
            raise HedgeRatioViolation(
                f"live nominal {self.live_nominal:.12f} != target {self.target_nominal} at month {month}",
                details={"month": month, "deviation": deviation},
            )
        return deviation

    # ---------------- export ----------------
    def snapshot(self) -> "HedgeBook":
        return copy.deepcopy(self)

    def to_frame(self) -> pd.DataFrame:
        rows = [(c.trade_month, c.expiry_month, c.nominal, c.rate) for c in self.contracts()]
        return pd.DataFrame(rows, columns=["trade_month", "expiry_month", "nominal", "rate"])


def settle_cash_flow(matured: Iterable[ForwardContract], spot):
    """Domestic cash of the contracts expiring now: sum of a * (F - S); `spot` may be an array of outcomes."""
    outcome = np.asarray(spot, dtype=float)
    total = np.zeros(outcome.shape)
    for c in matured:
        total = total + c.nominal * (c.rate - outcome)
    return float(total) if total.ndim == 0 else total


def mtm(book: HedgeBook, curve: ForwardCurve) -> float:
    """Zero-discount revaluation of the live book against `curve`."""
    now = curve.as_of_month
    expiries = np.array(book.live_expiries, dtype=int)
    if expiries.size == 0:
        return 0.0
    if expiries.min() <= now:
        raise LedgerOrderError(f"book holds expiries at or before the valuation month {now}")
    net, weighted = book.bucket_aggregates(now + 1, int(expiries.max() - now))
    current = interp_forward(curve, expiries - now)
    idx = expiries - now - 1
    return float(np.sum(weighted[idx] - net[idx] * current))
