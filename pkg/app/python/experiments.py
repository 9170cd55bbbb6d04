"""
Numerical studies: free induction decay with and without the dressing, gate
fidelity under quasi-static and Ornstein-Uhlenbeck Overhauser noise, and the
noise-free two-qubit block check.

Realizations are processed in fixed-size chunks whose randomness depends only on
(seed, realization index), so curves are identical for any worker count.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from dynamics import (
    HamiltonianSchedule,
    LindbladSpec,
    NoiseSeries,
    PropagationGrid,
    apply_superoperator,
    exact_step_map,
    lindblad_evolve,
    path_schedule,
    period_map,
    propagate_state,
    propagate_unitary,
    toy_bath_factorization,
)
from gate_design import (
    BathCoupling,
    Choreography,
    DressingSpec,
    LoopPath,
    axis_gate,
    dressed_from_bare,
    dressing_operator,
    geometric_phase,
    ideal_gate,
    synthesize_path,
)
from linalg_core import (
    KET_0,
    KET_1,
    KET_PLUS,
    SIGMA_Z,
    density_from_state,
    operator_distance,
    state_fidelity,
)
from noise_models import (
    MAX_SEED,
    OUParams,
    QuasiStaticGaussian,
    ou_trajectory_batch,
    sample_quasi_static_batch,
)

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 250
OVERHAUSER_SIGMA = 0.13 * np.pi
# 1.5 MHz, converted as πΔ like the FID detuning
OU_SIGMA = 1.5 * np.pi
OU_G_VALUES = (0.02, 0.1, 0.5)


class ExperimentConfigError(ValueError):
    """Raised when an experiment configuration is inconsistent."""


class FidConfig(BaseModel):
    """Free induction decay of |+⟩ under (πΔ + δ₀)σ_z, optionally dressed."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    detuning: float = 1.0
    noise: QuasiStaticGaussian = QuasiStaticGaussian(std_dev=OVERHAUSER_SIGMA)
    gamma: float = Field(default=1e-3, ge=0.0)
    protected: bool = False
    tau: float = Field(default=0.01, gt=0.0)
    t_max: float = Field(default=6.0, gt=0.0)
    samples: int = Field(default=10_000, ge=100)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    output_points: int = Field(default=300, ge=2)
    steps_per_period: int = Field(default=40, ge=20)


class GateExpConfig(BaseModel):
    """Gate fidelity run; the path is synthesized from (axis, angle, Ω, τ, choreography) unless given."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    axis: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    angle: float = np.pi / 4
    omega: float = Field(default=2 * np.pi, gt=0.0)
    total_time: float = Field(default=0.5, gt=0.0)
    tau: float = Field(default=0.0125, gt=0.0)
    n: int = Field(default=1, ge=1)
    qubits: Literal[1, 2] = 1
    choreography: Choreography = "lune"
    path: Optional[LoopPath] = None
    noise_kind: Literal["quasi-static", "ou", "none"] = "quasi-static"
    quasi_static: QuasiStaticGaussian = QuasiStaticGaussian(std_dev=OVERHAUSER_SIGMA)
    ou_mean: float = 0.0
    ou_std_dev: float = Field(default=OU_SIGMA, ge=0.0)
    ou_correlation_time: float = Field(default=0.25, gt=0.0)
    gamma: float = Field(default=1e-3, ge=0.0)
    protected: bool = False
    initial_state: Literal["plus", "zero", "one"] = "plus"
    samples: int = Field(default=2000, ge=1)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    output_points: int = Field(default=100, ge=1)
    dt: Optional[float] = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def _check_periods(self):
        if self.protected:
            periods = self.total_time / self.tau
            if abs(periods - round(periods)) > 1e-9 * max(1.0, periods):
                raise ExperimentConfigError(
                    f"tau={self.tau} μs does not divide total_time={self.total_time} μs"
                )
        return self

    @property
    def g(self) -> float:
        return self.tau / self.ou_correlation_time


class ExperimentResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    axis_name: str
    axis: np.ndarray
    columns: Dict[str, np.ndarray]
    summary: Dict[str, Any]
    config: Dict[str, Any]
    seed: int

    def table(self) -> Dict[str, np.ndarray]:
        return {self.axis_name: self.axis, **self.columns}


def run_monte_carlo(chunk_fn: Callable[[np.ndarray], np.ndarray], samples: int, workers: int = 1,
                    chunk_size: int = DEFAULT_CHUNK, show_progress: bool = True,
                    desc: str = "realizations") -> np.ndarray:
    """
    Evaluate chunk_fn over realization indices 0..samples−1 in fixed chunks.

    chunk_fn must be picklable when workers > 1. Results are concatenated by
    realization index, so the output does not depend on workers.

    Returns:
        array with one leading row per realization
    """
    chunks = [np.arange(start, min(start + chunk_size, samples)) for start in range(0, samples, chunk_size)]
    if workers <= 1:
        results = [chunk_fn(chunk) for chunk in tqdm(chunks, desc=desc, disable=not show_progress)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(tqdm(pool.map(chunk_fn, chunks), total=len(chunks), desc=desc,
                                disable=not show_progress))
    return np.concatenate(results, axis=0)


def mean_and_stderr(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values)
    count = values.shape[0]
    spread = np.std(values, axis=0, ddof=1) if count > 1 else np.zeros(values.shape[1:])
    return np.mean(values, axis=0), spread / np.sqrt(count)


def stderr_scaling(sample_sizes: Sequence[int], stderrs: Sequence[float]) -> float:
    """Log-log slope of standard error against N (−0.5 for independent samples)."""
    slope, _ = np.polyfit(np.log(np.asarray(sample_sizes, dtype=float)), np.log(np.asarray(stderrs)), 1)
    return float(slope)


def extract_t2(times: np.ndarray, envelope: np.ndarray) -> Tuple[float, bool]:
    """
    First 1/e crossing of the envelope relative to its initial value.

    Returns:
        (T₂, is_lower_bound); the bound is the last time when there is no crossing
    """
    times = np.asarray(times, dtype=float)
    envelope = np.asarray(envelope, dtype=float)
    threshold = envelope[0] / np.e
    below = np.nonzero(envelope < threshold)[0]
    if len(below) == 0:
        return float(times[-1]), True
    i = int(below[0])
    if i == 0:
        return float(times[0]), False
    t0, t1 = times[i - 1], times[i]
    e0, e1 = envelope[i - 1], envelope[i]
    return float(t0 + (e0 - threshold) * (t1 - t0) / (e0 - e1)), False


# --- free induction decay ---------------------------------------------------

def fid_hamiltonian(cfg: FidConfig) -> HamiltonianSchedule:
    """H_fid = πΔσ_z with σ_z as the noise operator."""
    return HamiltonianSchedule.constant(np.pi * cfg.detuning * np.array(SIGMA_Z), cfg.t_max,
                                        noise_operator=np.array(SIGMA_Z), label="fid")


def protected_fid_hamiltonian(cfg: FidConfig) -> HamiltonianSchedule:
    """H′_fid = πΔ(cos2ωt σ_z − sin2ωt σ_y) + ωσ_x, noise δ₀σ_z in the lab frame."""
    dressing = DressingSpec(n=1, tau=cfg.tau)
    h_fid = np.pi * cfg.detuning * np.array(SIGMA_Z)
    return HamiltonianSchedule(lambda t: dressed_from_bare(h_fid, dressing, t), cfg.t_max, 2,
                               noise_operator=np.array(SIGMA_Z), tau=cfg.tau, label="fid-dressed")


def fid_output_times(cfg: FidConfig) -> Tuple[np.ndarray, int]:
    """Output grid and the number of τ periods (or unprotected steps) between points."""
    if not cfg.protected:
        return np.linspace(0.0, cfg.t_max, cfg.output_points + 1), 1
    periods = int(round(cfg.t_max / cfg.tau))
    stride = max(1, -(-periods // cfg.output_points))
    while periods % stride:
        stride += 1
    count = periods // stride
    return np.arange(count + 1) * stride * cfg.tau, stride


def _fid_chunk(cfg: FidConfig, indices: np.ndarray) -> np.ndarray:
    """Coherence ρ₀₁(t) for each realization, shape (len(indices), points)."""
    deltas = sample_quasi_static_batch(cfg.noise, cfg.seed, indices)
    lindblad = LindbladSpec(gamma=cfg.gamma)
    times, stride = fid_output_times(cfg)
    if cfg.protected:
        schedule = protected_fid_hamiltonian(cfg)
        grid = PropagationGrid(dt=cfg.tau / cfg.steps_per_period)
        one_period = period_map(schedule, lindblad, grid, 0.0, cfg.tau, noise=NoiseSeries(deltas))
        step_map = np.linalg.matrix_power(one_period, stride)
    else:
        h = fid_hamiltonian(cfg).sample(np.zeros(1), deltas[:, None])[:, 0]
        step_map = exact_step_map(h, lindblad, times[1] - times[0])

    rho = np.broadcast_to(density_from_state(KET_PLUS), (len(indices), 2, 2)).copy()
    coherence = np.empty((len(indices), len(times)), dtype=np.complex128)
    coherence[:, 0] = rho[:, 0, 1]
    for k in range(1, len(times)):
        rho = apply_superoperator(step_map, rho)
        coherence[:, k] = rho[:, 0, 1]
    return coherence


def run_fid(cfg: FidConfig, workers: int = 1, show_progress: bool = True) -> ExperimentResult:
    """
    Free induction decay averaged over quasi-static δ₀ draws.

    The protected run builds one period superoperator per realization and reuses its
    powers, so millisecond runs cost a handful of period maps.
    """
    times, stride = fid_output_times(cfg)
    logger.info(f"FID ({'protected' if cfg.protected else 'unprotected'}): N={cfg.samples}, "
                f"T_max={cfg.t_max} μs, {len(times)} points")
    coherence = run_monte_carlo(partial(_fid_chunk, cfg), cfg.samples, workers=workers,
                                show_progress=show_progress, desc="fid")

    mean = coherence.mean(axis=0)
    envelope = 2.0 * np.abs(mean)
    # per-realization values projected on the mean's phase
    projected = 2.0 * np.real(coherence * np.exp(-1j * np.angle(mean))[None, :])
    _, envelope_stderr = mean_and_stderr(projected)
    signal_mean, signal_stderr = mean_and_stderr(2.0 * np.real(coherence))
    t2, lower_bound = extract_t2(times, envelope)
    if lower_bound:
        logger.warning(f"[WARN] envelope stays above 1/e up to {times[-1]} μs; T2 reported as lower bound")
    logger.info(f"[OK] FID done: T2={t2:.6g} μs, envelope(T_max)={envelope[-1]:.6f}")

    return ExperimentResult(
        name="fid",
        axis_name="t_us",
        axis=times,
        columns={"envelope_mean": envelope, "envelope_stderr": envelope_stderr,
                 "signal_mean": signal_mean, "signal_stderr": signal_stderr},
        summary={"t2_us": t2, "t2_is_lower_bound": lower_bound, "envelope_final": float(envelope[-1]),
                 "periods_per_point": stride if cfg.protected else None},
        config=cfg.model_dump(mode="json"),
        seed=cfg.seed,
    )


# --- gate fidelity -----------------------------------------------------------

def resolve_path(cfg: GateExpConfig) -> LoopPath:
    """The configured path, or the synthesized one; checked against T and τ."""
    path = cfg.path or synthesize_path(cfg.axis, cfg.angle, cfg.omega, cfg.tau, qubits=cfg.qubits,
                                       choreography=cfg.choreography)
    if abs(path.total_time - cfg.total_time) > 1e-9:
        raise ExperimentConfigError(
            f"path lasts {path.total_time} μs but total_time={cfg.total_time} μs "
            f"(Ω={cfg.omega}, τ={cfg.tau}); adjust omega or tau"
        )
    if cfg.protected and abs(path.tau - cfg.tau) > 1e-15:
        raise ExperimentConfigError(f"path period {path.tau} μs differs from tau={cfg.tau} μs")
    if path.qubits != cfg.qubits:
        raise ExperimentConfigError(f"path acts on {path.qubits} qubit(s), config on {cfg.qubits}")
    return path


def initial_state(cfg: GateExpConfig) -> np.ndarray:
    electron = {"plus": KET_PLUS, "zero": KET_0, "one": KET_1}[cfg.initial_state]
    return np.array(electron) if cfg.qubits == 1 else np.kron(electron, KET_PLUS)


def gate_grid(cfg: GateExpConfig) -> PropagationGrid:
    if cfg.dt is not None:
        return PropagationGrid(dt=cfg.dt)
    return PropagationGrid(dt=cfg.tau / 40.0 if cfg.protected else cfg.total_time / 4000.0)


def ou_params(cfg: GateExpConfig) -> OUParams:
    return OUParams(mean=cfg.ou_mean, std_dev=cfg.ou_std_dev, correlation_time=cfg.ou_correlation_time,
                    dt=gate_grid(cfg).dt, seed=cfg.seed)


class GateJob:
    """Everything a worker needs to propagate one chunk of realizations."""

    def __init__(self, cfg: GateExpConfig, path: LoopPath, record_times: np.ndarray, reference: np.ndarray):
        self.cfg = cfg
        self.path = path
        self.record_times = record_times
        self.reference = reference

    def noise(self, indices: np.ndarray) -> Optional[NoiseSeries]:
        if self.cfg.noise_kind == "quasi-static":
            return NoiseSeries(sample_quasi_static_batch(self.cfg.quasi_static, self.cfg.seed, indices))
        if self.cfg.noise_kind == "ou":
            params = ou_params(self.cfg)
            return NoiseSeries(ou_trajectory_batch(params, self.path.total_time, indices), params.dt)
        return NoiseSeries(np.zeros(len(indices)))

    def __call__(self, indices: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        dressing = DressingSpec(n=cfg.n, tau=cfg.tau, target="one-qubit" if cfg.qubits == 1 else "electron-of-pair")
        schedule = path_schedule(self.path, dressing if cfg.protected else None)
        rho0 = density_from_state(initial_state(cfg))
        _, rhos = lindblad_evolve(schedule, LindbladSpec(gamma=cfg.gamma), gate_grid(cfg), rho0,
                                  noise=self.noise(indices), record_times=self.record_times, method="split")
        return state_fidelity(self.reference[:, None, :], rhos).T


def ideal_trajectory(cfg: GateExpConfig, path: LoopPath, record_times: np.ndarray) -> np.ndarray:
    """
    Noise-free reference ψ_ideal(t) of the bare path; V(t)ψ_ideal(t) for dressed runs.
    """
    bare = path_schedule(path)
    fine = PropagationGrid(dt=path.total_time / 20_000.0)
    _, states = propagate_state(bare, fine, initial_state(cfg), record_times=record_times)
    if not cfg.protected:
        return states
    dressing = DressingSpec(n=cfg.n, tau=cfg.tau, target="one-qubit" if cfg.qubits == 1 else "electron-of-pair")
    return np.einsum("kij,kj->ki", dressing_operator(dressing, record_times), states)


def run_gate_fidelity(cfg: GateExpConfig, workers: int = 1, show_progress: bool = True) -> ExperimentResult:
    """
    Mean fidelity F(t/T) = ⟨ψ_ideal(t)|ρ(t)|ψ_ideal(t)⟩ over noise realizations.

    Raises:
        ExperimentConfigError: path and total_time (or τ) disagree
    """
    path = resolve_path(cfg)
    total = path.total_time
    record_times = np.linspace(0.0, total, cfg.output_points + 1)
    reference = ideal_trajectory(cfg, path, record_times)
    job = GateJob(cfg, path, record_times, reference)
    label = "protected" if cfg.protected else "unprotected"
    logger.info(f"Gate fidelity ({label}, {cfg.noise_kind}): N={cfg.samples}, T={total} μs, "
                f"τ={cfg.tau} μs, dt={gate_grid(cfg).dt:.3e} μs")
    fidelities = run_monte_carlo(job, cfg.samples, workers=workers, show_progress=show_progress,
                                 desc=f"gate {label}")
    mean, stderr = mean_and_stderr(fidelities)
    logger.info(f"[OK] Gate fidelity ({label}): F(T)={mean[-1]:.6f} ± {stderr[-1]:.1e}")

    gamma, chi = geometric_phase(path)
    return ExperimentResult(
        name="gate",
        axis_name="t_over_T",
        axis=record_times / total,
        columns={"mean": mean, "stderr": stderr},
        summary={"final_fidelity": float(mean[-1]), "final_fidelity_stderr": float(stderr[-1]),
                 "min_fidelity": float(mean.min()), "gate_time_us": total, "periods": path.total_periods,
                 "dt_us": gate_grid(cfg).dt, "geometric_phase": gamma, "closure_phase": chi,
                 "g": cfg.g if cfg.noise_kind == "ou" else None},
        config=cfg.model_dump(mode="json"),
        seed=cfg.seed,
    )


def run_ou_study(cfg: GateExpConfig, g_values: Sequence[float] = OU_G_VALUES, workers: int = 1,
                 show_progress: bool = True) -> List[ExperimentResult]:
    """
    Protected gate under OU noise with τ = g·τ_e for each g.

    All g share one step dt = min(τ)/40 so the same seed gives the same OU
    trajectories at every g.
    """
    taus = [g * cfg.ou_correlation_time for g in g_values]
    dt = cfg.dt or min(taus) / 40.0
    results = []
    for g, tau in zip(g_values, taus):
        run = cfg.model_copy(update={"tau": tau, "protected": True, "noise_kind": "ou", "dt": dt})
        run = GateExpConfig.model_validate(run.model_dump())
        results.append(run_gate_fidelity(run, workers=workers, show_progress=show_progress))
    finals = [r.summary["final_fidelity"] for r in results]
    if any(b >= a for a, b in zip(finals, finals[1:])):
        logger.warning(f"[WARN] fidelity not strictly decreasing in g: {finals}")
    return results


# --- two-qubit gate -----------------------------------------------------------

def run_two_qubit_check(path: LoopPath, dressing: Optional[DressingSpec] = None,
                        grid: Optional[PropagationGrid] = None,
                        coupling: Optional[BathCoupling] = None, tol: float = 1e-6) -> Dict[str, Any]:
    """
    Noise-free propagation of the two-qubit schedule and its block structure.

    The |↓⟩ block must be I and the |↑⟩ block e^{iχ}e^{−iγn·σ}; with a toy-bath
    coupling on the electron the protected and bare purities are compared too.

    Returns:
        result dict with "success", the block errors and, when coupling is given,
        the purities
    """
    if path.qubits != 2:
        return {"success": False, "error": f"path acts on {path.qubits} qubit(s), expected 2"}
    grid = grid or PropagationGrid.for_check(path.tau)
    schedule = path_schedule(path, dressing)
    u = propagate_unitary(schedule, grid)
    blocks = u.reshape(2, 2, 2, 2)
    up, down = blocks[:, 0, :, 0], blocks[:, 1, :, 1]
    leakage = float(np.linalg.norm(blocks[:, 0, :, 1]) + np.linalg.norm(blocks[:, 1, :, 0]))
    gamma, chi = geometric_phase(path)
    theta0, phi0 = path.theta0, path.phi0
    target_up = np.exp(1j * chi) * axis_gate(theta0, phi0, gamma)

    report = {
        "distance_to_ideal": operator_distance(u, ideal_gate(path)).phase_insensitive,
        "down_block_error": operator_distance(down, np.eye(2)).phase_sensitive,
        "up_block_error": operator_distance(up, target_up).phase_sensitive,
        "leakage": leakage,
        "geometric_phase": gamma,
        "closure_phase": chi,
        "dressed": dressing is not None,
    }
    errors = [name for name in ("down_block_error", "up_block_error", "leakage", "distance_to_ideal")
              if report[name] >= tol]
    if coupling is not None:
        protected = toy_bath_factorization(path, dressing, coupling) if dressing else None
        bare = toy_bath_factorization(path, None, coupling)
        report["purity_bare"] = bare.purity
        if protected is not None:
            report["purity_protected"] = protected.purity
            report["purity_ordering_ok"] = protected.purity >= bare.purity
    report["success"] = not errors
    report["error"] = None if not errors else "block structure violated: " + ", ".join(
        f"{name}={report[name]:.3e}" for name in errors)
    if errors:
        logger.error(f"[FAIL] two-qubit check: {report['error']}")
    else:
        logger.info(f"[OK] two-qubit check: distance {report['distance_to_ideal']:.2e}")
    return report

