import logging
from typing import Optional, Tuple

import numpy as np
from scipy import special

from app.core.exceptions import DomainError
from app.models.domain_models import LiquidityConfig, OuParams
from app.models.response_models import CfarProfile
from app.services import ou_model
from app.services.hedge_book import HedgeBook
from app.services.market_data import CurveLike, forward_strip

logger = logging.getLogger(__name__)


def inv_norm_cdf(p):
    """Standard normal quantile."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    result = special.ndtri(arr)
    return float(result) if result.ndim == 0 else result


def bucket_cfar(net, weighted, expected, sigma, z):
    """
    CFaR of buckets holding net nominal `net` and sum of nominal * rate `weighted`.

    The cash flow at expiry is normal with mean weighted - net * E and standard
    deviation |net| * sigma; signed nominals net before sigma is applied.
    """
    mean = weighted - net * expected
    return -mean - np.abs(net) * sigma * z


def _horizon(now: int, target: int) -> float:
    if target <= now:
        raise DomainError(f"target month {target} must be after {now}")
    return (target - now) / 12.0


def cf_moments(book: HedgeBook, params: OuParams, now: int, target: int, s_t: float) -> Tuple[float, float]:
    """Mean and standard deviation at `now` of the cash flow settling at `target`, from trades up to now - 1."""
    dt = _horizon(now, target)
    net, weighted = book.bucket_aggregates(target, 1, traded_before=now)
    expected = ou_model.conditional_mean(params, s_t, dt)
    sigma = ou_model.conditional_std(params, dt)
    return float(weighted[0] - net[0] * expected), float(abs(net[0]) * sigma)


def cfar_pre(book: HedgeBook, params: OuParams, now: int, target: int, s_t: float, p: float) -> float:
    """CFaR of bucket `target` just before this month's trades."""
    mean, std = cf_moments(book, params, now, target, s_t)
    return -mean - std * inv_norm_cdf(p)


def unit_cfar(params: OuParams, now: int, target: int, s_t: float, f_tT: float, p: float) -> float:
    dt = _horizon(now, target)
    expected = ou_model.conditional_mean(params, s_t, dt)
    sigma = ou_model.conditional_std(params, dt)
    return float(-(f_tT - expected) - sigma * inv_norm_cdf(p))


def profile(
    book: HedgeBook,
    params: OuParams,
    config: LiquidityConfig,
    now: int,
    s_t: float,
    curve: CurveLike,
    new_nominal: Optional[np.ndarray] = None,
) -> CfarProfile:
    """Pre-trade, unit and post-trade CFaR for expiries now + 1 .. now + max tenor."""
    n = config.max_tenor_months
    tenors = np.arange(1, n + 1)
    dt = tenors / 12.0
    expected = ou_model.conditional_mean(params, s_t, dt)
    sigma = ou_model.conditional_std(params, dt)
    forward = forward_strip(curve, n)
    z = inv_norm_cdf(config.tail_p)
    net, weighted = book.bucket_aggregates(now + 1, n, traded_before=now)

    pre = bucket_cfar(net, weighted, expected, sigma, z)
    unit = -(forward - expected) - sigma * z
    new = np.zeros(n) if new_nominal is None else np.asarray(new_nominal, dtype=float)
    post = bucket_cfar(net + new, weighted + new * forward, expected, sigma, z)
    return CfarProfile(
        as_of_month=now,
        tenors=tenors,
        expected_spot=expected,
        sigma=sigma,
        forward=forward,
        net_nominal=net,
        weighted_rate=weighted,
        cfar_pre=pre,
        unit_cfar=unit,
        cfar_post=post,
        new_nominal=new,
    )


def with_trades(prof: CfarProfile, new_nominal: np.ndarray, tail_p: float) -> CfarProfile:
    """The same profile with `new_nominal` booked at the profile's forwards."""
    new = np.asarray(new_nominal, dtype=float)
    post = bucket_cfar(
        prof.net_nominal + new,
        prof.weighted_rate + new * prof.forward,
        prof.expected_spot,
        prof.sigma,
        inv_norm_cdf(tail_p),
    )
    return prof.model_copy(update={"cfar_post": post, "new_nominal": new})
