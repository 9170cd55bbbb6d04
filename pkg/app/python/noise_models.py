"""
Noise models for the Overhauser dephasing field.
Provides the quasi-static Gaussian offset δ₀ ~ N(mean, σ²) and finite-correlation
Ornstein-Uhlenbeck trajectories δ₀(t), both seeded per realization so serial and
parallel Monte-Carlo runs draw bit-identical numbers.
"""

import logging
from typing import Iterable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from results_store import write_csv

logger = logging.getLogger(__name__)

# substream labels of SeedSequence.spawn_key
QUASI_STATIC_STREAM = 0
OU_STREAM = 1
PATH_STREAM = 2

MAX_SEED = 2**64 - 1


class NoiseParameterError(ValueError):
    """Raised when noise parameters violate their invariants."""


class QuasiStaticGaussian(BaseModel):
    """Quasi-static Gaussian field δ₀ ~ N(mean, std_dev²), rad/μs."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    std_dev: float = Field(ge=0.0)
    mean: float = 0.0


class OUParams(BaseModel):
    """
    Ornstein-Uhlenbeck field dδ₀ = −(δ₀−μ)/τ_e dt + σ√(2/τ_e) dW.

    initial_value overrides the stationary draw for δ₀(0) (used to inspect the
    relaxation toward the mean).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    mean: float = 0.0
    std_dev: float = Field(ge=0.0)
    correlation_time: float = Field(gt=0.0)
    dt: float = Field(gt=0.0)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    initial_value: Optional[float] = None

    def check_step(self) -> None:
        if self.dt > self.correlation_time / 10.0:
            raise NoiseParameterError(
                f"OU step dt={self.dt} μs exceeds correlation_time/10={self.correlation_time / 10.0} μs"
            )


class NoiseTrajectory(BaseModel):
    """δ₀(t) on a uniform grid starting at t=0; zero-order hold between samples."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    values: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def value_at(self, t) -> np.ndarray:
        index = np.clip(np.floor(np.asarray(t) / self.dt + 1e-9).astype(int), 0, len(self.values) - 1)
        return self.values[index]


def realization_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent generator for one realization, derived from (seed, stream, index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(index))))


def sample_quasi_static(model: QuasiStaticGaussian, rng: np.random.Generator) -> float:
    return float(rng.normal(model.mean, model.std_dev))


def sample_quasi_static_batch(model: QuasiStaticGaussian, seed: int, indices: Iterable[int]) -> np.ndarray:
    """One δ₀ per realization index; element i depends only on (seed, index)."""
    return np.array(
        [sample_quasi_static(model, realization_rng(seed, QUASI_STATIC_STREAM, i)) for i in indices],
        dtype=float,
    )


def _grid_steps(total_time: float, dt: float) -> int:
    if total_time <= 0:
        raise NoiseParameterError(f"trajectory length must be positive, got T={total_time}")
    return int(np.ceil(total_time / dt - 1e-9))


def ou_trajectory_batch(params: OUParams, total_time: float, indices: Iterable[int]) -> np.ndarray:
    """
    Euler-Maruyama OU trajectories, one row per realization index.

    Row i is identical to ou_trajectory(params, total_time, index=i).values.

    Returns:
        array of shape (len(indices), steps + 1) in rad/μs
    """
    params.check_step()
    steps = _grid_steps(total_time, params.dt)
    indices = list(indices)
    initial = np.empty(len(indices))
    kicks = np.empty((len(indices), steps))
    for row, index in enumerate(indices):
        rng = realization_rng(params.seed, OU_STREAM, index)
        stationary = rng.normal(params.mean, params.std_dev)
        initial[row] = stationary if params.initial_value is None else params.initial_value
        kicks[row] = rng.standard_normal(steps)

    drift = params.dt / params.correlation_time
    diffusion = params.std_dev * np.sqrt(2.0 / params.correlation_time) * np.sqrt(params.dt)
    values = np.empty((len(indices), steps + 1))
    values[:, 0] = initial
    for k in range(steps):
        current = values[:, k]
        values[:, k + 1] = current - (current - params.mean) * drift + diffusion * kicks[:, k]
    return values


def ou_trajectory(params: OUParams, total_time: float, index: int = 0) -> NoiseTrajectory:
    values = ou_trajectory_batch(params, total_time, [index])[0]
    times = np.arange(len(values)) * params.dt
    return NoiseTrajectory(times=times, values=values)


def ensemble_autocorrelation(values: np.ndarray, lag_steps: int, mean: Optional[float] = None) -> float:
    """
    Covariance ⟨(δ(t)−μ)(δ(t+lag)−μ)⟩ averaged over realizations and start times.

    Args:
        values: (realizations, samples) array
        lag_steps: lag in grid steps
        mean: known mean; the ensemble mean is used when None
    """
    values = np.asarray(values, dtype=float)
    centre = float(values.mean()) if mean is None else mean
    centred = values - centre
    if lag_steps == 0:
        return float(np.mean(centred * centred))
    return float(np.mean(centred[:, :-lag_steps] * centred[:, lag_steps:]))


def write_trajectory_csv(trajectory: NoiseTrajectory, path) -> None:
    write_csv(path, {"t_us": trajectory.times, "delta0_rad_per_us": trajectory.values})
    logger.info(f"[OK] Wrote noise trajectory ({len(trajectory.values)} samples) to {path}")
