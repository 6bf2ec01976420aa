import logging

import numpy as np
from scipy import signal, stats

from app.core.exceptions import DegenerateSeries, DomainError, NonMeanReverting
from app.models.domain_models import OuParams, SpotSeries

logger = logging.getLogger(__name__)

MONTH = 1.0 / 12.0


def conditional_mean(params: OuParams, s_t, dt):
    """E_t[S_{t+dt}]. Accepts scalars or numpy arrays for s_t and dt."""
    if np.any(np.asarray(dt) < 0):
        raise DomainError("horizon must be non-negative")
    decay = np.exp(-params.k * np.asarray(dt, dtype=float))
    return s_t * decay + params.theta * (1.0 - decay)


def conditional_var(params: OuParams, dt):
    if np.any(np.asarray(dt) < 0):
        raise DomainError("horizon must be non-negative")
    return params.stationary_variance * -np.expm1(-2.0 * params.k * np.asarray(dt, dtype=float))


def conditional_std(params: OuParams, dt):
    return np.sqrt(conditional_var(params, dt))


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Independent generator for one path, derived from (seed, path index) only."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(path_index,)))


def simulate_paths(
    params: OuParams,
    s0: float,
    n_paths: int,
    n_months: int,
    seed: int,
    *,
    first_path: int = 0,
    step_years: float = MONTH,
) -> np.ndarray:
    """
    Exact-discretization OU paths, shape (n_paths, n_months + 1), column 0 = s0.

    Row i is driven by its own stream `path_rng(seed, first_path + i)`, so a path
    never depends on how many other paths are drawn or on how they are chunked.
    """
    if n_paths < 1 or n_months < 1:
        raise DomainError("n_paths and n_months must be at least 1")

    shocks = np.empty((n_paths, n_months))
    for row in range(n_paths):
        shocks[row] = path_rng(seed, first_path + row).standard_normal(n_months)

    # deviation from theta follows y[j+1] = b*y[j] + sd*z[j]
    b = float(np.exp(-params.k * step_years))
    sd = float(conditional_std(params, step_years))
    y0 = s0 - params.theta
    zi = np.full((n_paths, 1), b * y0)
    y, _ = signal.lfilter([sd], [1.0, -b], shocks, axis=1, zi=zi)

    paths = np.empty((n_paths, n_months + 1))
    paths[:, 0] = s0
    paths[:, 1:] = params.theta + y
    return paths


def calibrate(series: SpotSeries) -> OuParams:
    """
    Fit OU parameters by AR(1) least squares on consecutive observations.

    The series must already be quoted foreign-per-domestic.
    """
    values = series.as_array()
    if values.size < 3:
        raise DegenerateSeries(
            "calibration needs at least 3 observations", details={"observations": int(values.size)}
        )
    x, y = values[:-1], values[1:]
    if np.ptp(x) == 0.0:
        raise DegenerateSeries("spot series is constant")

    fit = stats.linregress(x, y)
    b, c = float(fit.slope), float(fit.intercept)
    residuals = y - (c + b * x)
    dof = max(residuals.size - 2, 1)
    s = float(np.sqrt(residuals @ residuals / dof))
    if s == 0.0:
        raise DegenerateSeries("regression residual variance is zero")
    if not 0.0 < b < 1.0:
        raise NonMeanReverting(
            f"fitted AR(1) slope {b:.6f} is not in (0, 1)", details={"slope": b, "intercept": c}
        )

    dt = series.step_years
    k = -np.log(b) / dt
    theta = c / (1.0 - b)
    nu = s * np.sqrt(2.0 * k / (1.0 - b * b))
    params = OuParams(k=float(k), theta=float(theta), nu=float(nu))
    logger.info(
        f"Calibrated OU on {values.size} observations: "
        f"k={params.k:.4f} theta={params.theta:.4f} nu={params.nu:.4f}"
    )
    return params
