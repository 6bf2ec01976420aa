import numpy as np
import pytest

from app.core.exceptions import DegenerateSeries, DomainError, NonMeanReverting
from app.models.domain_models import OuParams, SpotSeries
from app.services import ou_model


def test_conditional_mean_known_value(base_params):
    expected = 2.0 * np.exp(-0.4) + (4 / 3) * (1 - np.exp(-0.4))
    assert ou_model.conditional_mean(base_params, 2.0, 1.0) == pytest.approx(expected, abs=1e-12)
    assert ou_model.conditional_mean(base_params, 2.0, 1.0) == pytest.approx(1.780213, abs=1e-6)


def test_conditional_mean_at_zero_horizon_is_spot(base_params):
    assert ou_model.conditional_mean(base_params, 1.7, 0.0) == pytest.approx(1.7)


def test_conditional_var_known_value(base_params):
    assert ou_model.conditional_var(base_params, 1.0) == pytest.approx(0.02753355, rel=1e-6)
    assert ou_model.conditional_var(base_params, 0.0) == 0.0


def test_conditional_var_tends_to_stationary(base_params):
    assert ou_model.conditional_var(base_params, 200.0) == pytest.approx(base_params.stationary_variance)


def test_moments_accept_arrays(base_params):
    dt = np.arange(1, 13) / 12.0
    means = ou_model.conditional_mean(base_params, 2.0, dt)
    variances = ou_model.conditional_var(base_params, dt)
    assert means.shape == variances.shape == (12,)
    # mean decays toward theta, variance grows
    assert np.all(np.diff(means) < 0)
    assert np.all(np.diff(variances) > 0)


def test_negative_horizon_rejected(base_params):
    with pytest.raises(DomainError):
        ou_model.conditional_mean(base_params, 1.0, -0.1)
    with pytest.raises(DomainError):
        ou_model.conditional_var(base_params, np.array([0.1, -0.1]))


def test_paths_match_conditional_moments(base_params):
    n = 100_000
    paths = ou_model.simulate_paths(base_params, 4 / 3, n, 12, seed=7)
    assert paths.shape == (n, 13)
    assert np.all(paths[:, 0] == 4 / 3)
    final = paths[:, 12]
    mean = ou_model.conditional_mean(base_params, 4 / 3, 1.0)
    var = ou_model.conditional_var(base_params, 1.0)
    assert abs(final.mean() - mean) < 3 * np.sqrt(var / n)
    # variance of the sample variance of a normal sample is 2 var^2 / (n - 1)
    assert abs(final.var(ddof=1) - var) < 3 * var * np.sqrt(2.0 / (n - 1))


def test_paths_do_not_depend_on_batch(base_params):
    full = ou_model.simulate_paths(base_params, 1.2, 10, 24, seed=3)
    tail = ou_model.simulate_paths(base_params, 1.2, 4, 24, seed=3, first_path=6)
    head = ou_model.simulate_paths(base_params, 1.2, 5, 24, seed=3)
    np.testing.assert_array_equal(full[6:], tail)
    np.testing.assert_array_equal(full[:5], head)


def test_paths_depend_on_seed(base_params):
    a = ou_model.simulate_paths(base_params, 1.2, 2, 12, seed=1)
    b = ou_model.simulate_paths(base_params, 1.2, 2, 12, seed=2)
    assert not np.array_equal(a, b)


def test_simulate_rejects_empty_request(base_params):
    with pytest.raises(DomainError):
        ou_model.simulate_paths(base_params, 1.0, 0, 12, seed=0)


def test_calibration_round_trip(base_params):
    path = ou_model.simulate_paths(base_params, base_params.theta, 1, 120_000, seed=2018)[0]
    fitted = ou_model.calibrate(SpotSeries(start_month=0, values=tuple(path)))
    assert fitted.k == pytest.approx(base_params.k, rel=0.1)
    assert fitted.theta == pytest.approx(base_params.theta, rel=0.1)
    assert fitted.nu == pytest.approx(base_params.nu, rel=0.1)


def test_calibrate_constant_series():
    with pytest.raises(DegenerateSeries):
        ou_model.calibrate(SpotSeries(start_month=0, values=(1.0,) * 10))


def test_calibrate_too_short():
    with pytest.raises(DegenerateSeries):
        ou_model.calibrate(SpotSeries(start_month=0, values=(1.0, 1.1)))


def test_calibrate_trending_series():
    rng = np.random.default_rng(5)
    walk = 1.01 ** np.arange(300) * (1.0 + 0.001 * rng.standard_normal(300))
    with pytest.raises(NonMeanReverting) as info:
        ou_model.calibrate(SpotSeries(start_month=0, values=tuple(walk)))
    assert info.value.details["slope"] >= 1.0


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        OuParams(k=0.0, theta=1.0, nu=0.1)
