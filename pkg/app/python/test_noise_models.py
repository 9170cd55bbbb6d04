"""
Tests for the quasi-static and Ornstein-Uhlenbeck noise generators.
"""

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from noise_models import (
    NoiseParameterError,
    OUParams,
    QuasiStaticGaussian,
    ensemble_autocorrelation,
    ou_trajectory,
    ou_trajectory_batch,
    realization_rng,
    sample_quasi_static_batch,
    write_trajectory_csv,
)

SIGMA = 0.13 * np.pi


def test_quasi_static_draws_depend_only_on_index():
    model = QuasiStaticGaussian(std_dev=SIGMA)
    full = sample_quasi_static_batch(model, seed=11, indices=range(10))
    tail = sample_quasi_static_batch(model, seed=11, indices=range(5, 10))
    assert np.array_equal(full[5:], tail)
    other = sample_quasi_static_batch(model, seed=12, indices=range(10))
    assert not np.array_equal(full, other)


def test_quasi_static_moments():
    model = QuasiStaticGaussian(std_dev=SIGMA, mean=0.2)
    draws = sample_quasi_static_batch(model, seed=1, indices=range(20000))
    assert draws.mean() == pytest.approx(0.2, abs=4 * SIGMA / np.sqrt(20000))
    assert draws.std() == pytest.approx(SIGMA, rel=0.03)


def test_zero_std_dev_gives_constant_field():
    model = QuasiStaticGaussian(std_dev=0.0, mean=1.5)
    assert np.all(sample_quasi_static_batch(model, seed=0, indices=range(5)) == 1.5)


def test_negative_std_dev_rejected():
    with pytest.raises(ValidationError):
        QuasiStaticGaussian(std_dev=-1.0)
    with pytest.raises(ValidationError):
        OUParams(std_dev=1.0, correlation_time=0.0, dt=1e-3)


def test_ou_step_must_resolve_correlation_time():
    params = OUParams(std_dev=1.5, correlation_time=0.25, dt=0.05)
    with pytest.raises(NoiseParameterError):
        ou_trajectory(params, 1.0)


def test_ou_rows_match_single_trajectories():
    params = OUParams(std_dev=1.5, correlation_time=0.25, dt=0.01, seed=4)
    batch = ou_trajectory_batch(params, 0.5, [3, 7])
    assert np.array_equal(batch[1], ou_trajectory(params, 0.5, index=7).values)
    assert batch.shape == (2, 51)


def test_ou_zero_std_dev_relaxes_to_mean():
    params = OUParams(mean=0.5, std_dev=0.0, correlation_time=0.25, dt=0.001, initial_value=2.0)
    trajectory = ou_trajectory(params, 5.0)
    assert trajectory.values[0] == 2.0
    assert trajectory.values[-1] == pytest.approx(0.5, abs=1e-6)


def test_ou_stationary_statistics():
    params = OUParams(std_dev=1.5, correlation_time=0.25, dt=0.0025, seed=9)
    values = ou_trajectory_batch(params, 1.0, range(3000))
    variance = ensemble_autocorrelation(values, 0, mean=0.0)
    assert variance == pytest.approx(1.5**2, rel=0.06)
    lag = int(round(0.25 / params.dt))
    expected = 1.5**2 * np.exp(-1.0)
    assert ensemble_autocorrelation(values, lag, mean=0.0) == pytest.approx(expected, rel=0.08)


def _chunked_ou_statistics(params: OUParams, total_time: float, realizations: int, chunk: int = 1000):
    lag = int(round(params.correlation_time / params.dt))
    variances, correlations = [], []
    for start in range(0, realizations, chunk):
        values = ou_trajectory_batch(params, total_time, range(start, start + chunk))
        variance = ensemble_autocorrelation(values, 0, mean=0.0)
        variances.append(variance)
        correlations.append(ensemble_autocorrelation(values, lag, mean=0.0) / variance)
    return np.mean(variances), np.mean(correlations)


@pytest.mark.slow
def test_ou_statistics_stable_under_step_halving():
    coarse = OUParams(std_dev=1.5, correlation_time=0.25, dt=0.0025, seed=4)
    fine = coarse.model_copy(update={"dt": 0.00125})
    coarse_variance, coarse_correlation = _chunked_ou_statistics(coarse, 20.0, 20_000)
    fine_variance, fine_correlation = _chunked_ou_statistics(fine, 20.0, 20_000)
    assert fine_variance == pytest.approx(coarse_variance, rel=0.01)
    assert fine_correlation == pytest.approx(coarse_correlation, rel=0.01)


def test_trajectory_value_at_holds_previous_sample():
    params = OUParams(std_dev=1.0, correlation_time=0.25, dt=0.01)
    trajectory = ou_trajectory(params, 0.1)
    assert trajectory.value_at(0.015) == trajectory.values[1]
    assert trajectory.value_at(0.02) == trajectory.values[2]


def test_realization_rng_streams_are_independent():
    a = realization_rng(5, 0, 0).standard_normal(4)
    b = realization_rng(5, 1, 0).standard_normal(4)
    assert not np.array_equal(a, b)


def test_write_trajectory_csv(tmp_path):
    params = OUParams(std_dev=1.0, correlation_time=0.25, dt=0.01)
    trajectory = ou_trajectory(params, 0.05)
    path = tmp_path / "ou.csv"
    write_trajectory_csv(trajectory, path)
    frame = pd.read_csv(path, float_precision="round_trip")
    assert list(frame.columns) == ["t_us", "delta0_rad_per_us"]
    assert np.array_equal(frame["delta0_rad_per_us"].to_numpy(), trajectory.values)
