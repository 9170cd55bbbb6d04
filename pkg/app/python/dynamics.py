"""
Time evolution engines.
Piecewise time-ordered propagation of pure states and unitaries with midpoint
exponentials, the relaxation master equation (jumps σ₊ and σ₋ at rate Γ), one-period
superoperator maps for long runs, rotating-frame and first-order Magnus diagnostics,
and the toy-bath factorization check.

All propagators accept an optional batch of additive noise amplitudes so that many
Monte-Carlo realizations step together along a leading axis.
"""

import logging
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import expm

from gate_design import (
    BathCoupling,
    DressingSpec,
    LoopPath,
    bare_hamiltonian,
    dressed_hamiltonian,
    dressing_operator,
    ideal_gate,
)
from linalg_core import (
    IDENTITY_2,
    KET_1,
    KET_PLUS,
    SIGMA_MINUS,
    SIGMA_PLUS,
    as_operator,
    dagger,
    density_from_state,
    hermitian_exp,
    is_normalized,
    operator_distance,
    partial_trace,
    purity,
    tensor,
)
from results_store import write_csv

logger = logging.getLogger(__name__)

TRACE_ABORT = 1e-6
EDGE_TOL = 1e-12
STEP_BLOCK = 512
LEFT_LIMIT_NUDGE = 1e-9
# midpoint error is second order; 10000 steps per period keeps noise-free gates below 1e-6
CHECK_STEPS_PER_PERIOD = 10_000

OperatorFn = Callable[[np.ndarray], np.ndarray]


class GridAlignmentError(ValueError):
    """Raised when a propagation grid violates its step or alignment rules."""


class TraceDriftError(RuntimeError):
    """Raised when explicit master-equation stepping loses trace."""

    def __init__(self, time: float, drift: float):
        self.time = time
        self.drift = drift
        super().__init__(
            f"trace drift {drift:.3e} at t={time:.6f} μs exceeds {TRACE_ABORT:.0e}; reduce dt or use method='split'"
        )


class NoiseSeries:
    """
    Additive noise amplitudes δ(t) for a batch of realizations.

    values of shape (R,) are constant offsets (quasi-static); shape (R, S) are samples
    on a uniform grid of spacing dt read with a zero-order hold.
    """

    def __init__(self, values: np.ndarray, dt: Optional[float] = None):
        self.values = np.atleast_1d(np.asarray(values, dtype=float))
        if self.values.ndim == 2 and dt is None:
            raise ValueError("sampled noise needs its grid spacing dt")
        self.dt = dt

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def at(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.values.ndim == 1:
            return np.repeat(self.values[:, None], len(times), axis=1)
        index = np.clip(np.floor(times / self.dt + 1e-9).astype(int), 0, self.values.shape[1] - 1)
        return self.values[:, index]


class HamiltonianSchedule:
    def __init__(self, hamiltonian: OperatorFn, total_time: float, dim: int,
                 discontinuities: Sequence[float] = (),
                 noise_operator: Union[np.ndarray, OperatorFn, None] = None,
                 tau: Optional[float] = None, label: str = ""):
        """
        Time-dependent Hamiltonian H(t) + δ(t)·S(t) on [0, T].

        Args:
            hamiltonian: vectorized map from a (K,) time array to (K, d, d) operators
            total_time: T in μs
            dim: Hilbert-space dimension
            discontinuities: times where H jumps (segment boundaries)
            noise_operator: S, constant or a vectorized function of time
            tau: dressing period when the schedule is dressed
            label: name used in logs
        """
        if total_time <= 0:
            raise ValueError(f"schedule length must be positive, got T={total_time}")
        self.hamiltonian = hamiltonian
        self.total_time = float(total_time)
        self.dim = int(dim)
        self.discontinuities = sorted(float(t) for t in discontinuities if 0.0 < t < total_time)
        self.noise_operator = noise_operator
        self.tau = tau
        self.label = label

    def noise_operators(self, times: np.ndarray) -> np.ndarray:
        if callable(self.noise_operator):
            return self.noise_operator(times)
        return np.broadcast_to(as_operator(self.noise_operator), (len(times), self.dim, self.dim))

    def sample(self, times, noise: Optional[np.ndarray] = None) -> np.ndarray:
        """
        H at the given times.

        Args:
            times: (K,) array in μs
            noise: optional (R, K) amplitudes multiplying the noise operator

        Returns:
            (K, d, d), or (R, K, d, d) when noise is given
        """
        times = np.atleast_1d(np.asarray(times, dtype=float))
        h = np.asarray(self.hamiltonian(times), dtype=np.complex128)
        if noise is None or self.noise_operator is None:
            return h if noise is None else np.broadcast_to(h, (noise.shape[0],) + h.shape)
        return h[None] + noise[..., None, None] * self.noise_operators(times)[None]

    def __call__(self, t: float) -> np.ndarray:
        return self.sample(np.array([t]))[0]

    @classmethod
    def constant(cls, h, total_time: float, noise_operator=None, label: str = "constant") -> "HamiltonianSchedule":
        h = as_operator(h)
        dim = h.shape[0]
        return cls(lambda t: np.broadcast_to(h, (len(t), dim, dim)), total_time, dim,
                   noise_operator=noise_operator, label=label)

    @classmethod
    def piecewise_constant(cls, operators: Sequence[np.ndarray], durations: Sequence[float],
                           label: str = "piecewise") -> "HamiltonianSchedule":
        ops = np.stack([as_operator(op) for op in operators])
        edges = np.concatenate([[0.0], np.cumsum(durations)])

        def hamiltonian(t):
            index = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, len(ops) - 1)
            return ops[index]

        return cls(hamiltonian, float(edges[-1]), ops.shape[-1], discontinuities=edges[1:-1], label=label)


class LindbladSpec(BaseModel):
    """Relaxation with jumps σ₊ and σ₋ on the driven qubit, both at rate Γ (μs⁻¹)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: float = Field(default=0.0, ge=0.0)

    def jump_operators(self, dim: int) -> List[np.ndarray]:
        if dim == 2:
            return [np.array(SIGMA_PLUS), np.array(SIGMA_MINUS)]
        if dim == 4:
            return [tensor(SIGMA_PLUS, IDENTITY_2), tensor(SIGMA_MINUS, IDENTITY_2)]
        raise ValueError(f"relaxation is defined for dim 2 or 4, got {dim}")


class PropagationGrid(BaseModel):
    """Step size for the propagators; steps never straddle a schedule discontinuity."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = Field(gt=0.0)

    @classmethod
    def default_for(cls, schedule: HamiltonianSchedule) -> "PropagationGrid":
        if schedule.tau is not None:
            return cls(dt=schedule.tau / 40.0)
        return cls(dt=schedule.total_time / 4000.0)

    @classmethod
    def for_check(cls, tau: float) -> "PropagationGrid":
        """Fine grid for noise-free comparisons against closed-form gates."""
        return cls(dt=tau / CHECK_STEPS_PER_PERIOD)

    def edges(self, schedule: HamiltonianSchedule, window: Optional[Tuple[float, float]] = None,
              record_times: Optional[Sequence[float]] = None) -> np.ndarray:
        """
        Step edges covering the window, aligned to every discontinuity and record time.

        Raises:
            GridAlignmentError: dt > τ/20 on a dressed schedule, or a window/record time
                outside [0, T]
        """
        if schedule.tau is not None and self.dt > schedule.tau / 20.0 * (1 + 1e-9):
            raise GridAlignmentError(f"dt={self.dt} μs exceeds τ/20={schedule.tau / 20.0} μs")
        start, end = (0.0, schedule.total_time) if window is None else window
        if start < -EDGE_TOL or end > schedule.total_time + EDGE_TOL or end <= start:
            raise GridAlignmentError(f"window [{start}, {end}] not inside [0, {schedule.total_time}]")
        points = [start, end]
        points += [t for t in schedule.discontinuities if start < t < end]
        if record_times is not None:
            for t in record_times:
                if t < start - EDGE_TOL or t > end + EDGE_TOL:
                    raise GridAlignmentError(f"record time {t} outside window [{start}, {end}]")
                points.append(min(max(float(t), start), end))
        points = np.unique(np.asarray(points))
        breaks = [points[0]]
        for p in points[1:]:
            if p - breaks[-1] > EDGE_TOL:
                breaks.append(p)
        pieces = []
        for a, b in zip(breaks[:-1], breaks[1:]):
            steps = max(1, int(np.ceil((b - a) / self.dt - 1e-9)))
            pieces.append(np.linspace(a, b, steps + 1)[:-1])
        pieces.append(np.array([breaks[-1]]))
        return np.concatenate(pieces)


def record_indices(edges: np.ndarray, record_times: Optional[Sequence[float]]) -> np.ndarray:
    if record_times is None:
        return np.array([len(edges) - 1])
    index = np.searchsorted(edges, np.asarray(record_times, dtype=float) - 1e-9)
    return np.clip(index, 0, len(edges) - 1)


def _step_unitaries(schedule: HamiltonianSchedule, edges: np.ndarray, noise: Optional[NoiseSeries]):
    """Midpoint exponentials exp(−iH(t_mid)Δt), yielded in blocks along the time axis."""
    mids = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    for start in range(0, len(mids), STEP_BLOCK):
        block = slice(start, start + STEP_BLOCK)
        amplitudes = None if noise is None else noise.at(mids[block])
        h = schedule.sample(mids[block], amplitudes)
        yield start, hermitian_exp(h, widths[block])


def _step_end(schedule: HamiltonianSchedule, end: float, width: float) -> float:
    """Sample time for the end of a step: its left limit when `end` is a discontinuity."""
    breaks = schedule.discontinuities
    index = int(np.searchsorted(breaks, end - EDGE_TOL))
    if index < len(breaks) and abs(breaks[index] - end) <= EDGE_TOL:
        return end - LEFT_LIMIT_NUDGE * width
    return end


def ordered_product(steps: np.ndarray) -> np.ndarray:
    """steps[..., K, d, d] -> steps[K-1] ⋯ steps[1] steps[0], by pairwise reduction."""
    while steps.shape[-3] > 1:
        count = steps.shape[-3]
        paired = steps[..., 1:count:2, :, :] @ steps[..., 0:count - 1:2, :, :]
        if count % 2:
            paired = np.concatenate([paired, steps[..., -1:, :, :]], axis=-3)
        steps = paired
    return steps[..., 0, :, :]


def propagate_unitary(schedule: HamiltonianSchedule, grid: PropagationGrid,
                      noise: Optional[NoiseSeries] = None,
                      window: Optional[Tuple[float, float]] = None) -> np.ndarray:
    """
    Time-ordered product of midpoint exponentials.

    Returns:
        U over the window, shape (d, d) or (R, d, d) with noise
    """
    edges = grid.edges(schedule, window)
    batch = () if noise is None else (noise.size,)
    u = np.broadcast_to(np.eye(schedule.dim, dtype=np.complex128), batch + (schedule.dim,) * 2).copy()
    for _, steps in _step_unitaries(schedule, edges, noise):
        u = ordered_product(steps) @ u
    return u


def propagate_state(schedule: HamiltonianSchedule, grid: PropagationGrid, psi0,
                    noise: Optional[NoiseSeries] = None,
                    record_times: Optional[Sequence[float]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Propagate a pure state.

    Args:
        schedule: Hamiltonian schedule
        grid: step size
        psi0: (d,) initial state
        noise: optional noise batch
        record_times: output times (default: only T)

    Returns:
        (times, states) with states of shape (len(times), d) or (len(times), R, d)

    Raises:
        ValueError: psi0 has the wrong dimension or is not normalized
    """
    psi = np.asarray(psi0, dtype=np.complex128)
    if psi.shape != (schedule.dim,):
        raise ValueError(f"initial state has shape {psi.shape}, expected ({schedule.dim},)")
    if not is_normalized(psi, tol=1e-9):
        raise ValueError(f"initial state norm {np.linalg.norm(psi):.12f} is not 1")
    edges = grid.edges(schedule, record_times=record_times)
    wanted = record_indices(edges, record_times)
    keep = set(wanted.tolist())
    if noise is not None:
        psi = np.broadcast_to(psi, (noise.size, schedule.dim)).copy()
    states = {}
    if 0 in keep:
        states[0] = psi.copy()
    for start, steps in _step_unitaries(schedule, edges, noise):
        for k in range(steps.shape[-3]):
            psi = np.einsum("...ij,...j->...i", steps[..., k, :, :], psi)
            if start + k + 1 in keep:
                states[start + k + 1] = psi.copy()
    return edges[wanted], np.stack([states[i] for i in wanted])


def lindblad_rhs(h: np.ndarray, rho: np.ndarray, gamma: float) -> np.ndarray:
    """
    −i[H, ρ] + (Γ/2) Σ_{a=σ₊,σ₋} (2a†ρa − ρaa† − aa†ρ), batched over leading axes.
    """
    out = -1j * (h @ rho - rho @ h)
    if gamma > 0:
        for a in LindbladSpec(gamma=gamma).jump_operators(rho.shape[-1]):
            ad = dagger(a)
            aad = a @ ad
            out = out + 0.5 * gamma * (2.0 * ad @ rho @ a - rho @ aad - aad @ rho)
    return out


def dissipator_superoperator(gamma: float, dim: int) -> np.ndarray:
    """Row-major superoperator of the relaxation term: vec(AρB) = (A ⊗ Bᵀ) vec(ρ)."""
    eye = np.eye(dim)
    total = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    for a in LindbladSpec(gamma=gamma).jump_operators(dim):
        ad = dagger(a)
        aad = a @ ad
        total += 0.5 * gamma * (2.0 * np.kron(ad, a.T) - np.kron(eye, aad.T) - np.kron(aad, eye))
    return total


def liouvillian(h: np.ndarray, lindblad: LindbladSpec) -> np.ndarray:
    """Full generator for (a batch of) constant Hamiltonians."""
    h = as_operator(h)
    dim = h.shape[-1]
    eye = np.eye(dim)
    coherent = -1j * (np.einsum("...ij,kl->...ikjl", h, eye)
                      - np.einsum("ij,...lk->...ikjl", eye, h)).reshape(h.shape[:-2] + (dim * dim,) * 2)
    return coherent + dissipator_superoperator(lindblad.gamma, dim)


def exact_step_map(h: np.ndarray, lindblad: LindbladSpec, dt: float) -> np.ndarray:
    """exp(L dt) for constant Hamiltonians, batched."""
    return expm(liouvillian(h, lindblad) * dt)


def apply_superoperator(superop: np.ndarray, rho: np.ndarray) -> np.ndarray:
    dim = rho.shape[-1]
    vec = rho.reshape(rho.shape[:-2] + (dim * dim,))
    return np.einsum("...ij,...j->...i", superop, vec).reshape(rho.shape)


class _HalfChannels:
    """exp(D Δt/2) per distinct step width."""

    def __init__(self, gamma: float, dim: int):
        self.generator = dissipator_superoperator(gamma, dim)
        self.active = gamma > 0
        self.cache = {}

    def __call__(self, width: float) -> np.ndarray:
        key = round(float(width), 15)
        if key not in self.cache:
            self.cache[key] = expm(self.generator * width / 2.0)
        return self.cache[key]


def _unitary_superoperator(u: np.ndarray) -> np.ndarray:
    dim = u.shape[-1]
    return np.einsum("...ij,...kl->...ikjl", u, np.conj(u)).reshape(u.shape[:-2] + (dim * dim,) * 2)


def lindblad_evolve(schedule: HamiltonianSchedule, lindblad: LindbladSpec, grid: PropagationGrid,
                    rho0, noise: Optional[NoiseSeries] = None,
                    record_times: Optional[Sequence[float]] = None,
                    method: str = "rk4") -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrate the master equation.

    method="rk4" is the classical explicit fourth-order scheme (Hermiticity restored
    every step, trace drift checked); method="split" applies half a relaxation channel,
    the midpoint unitary and another half channel per step (trace exact).

    Args:
        schedule: Hamiltonian schedule
        lindblad: relaxation rate
        grid: step size
        rho0: (d, d) initial density matrix
        noise: optional noise batch
        record_times: output times (default: only T)
        method: "rk4" or "split"

    Returns:
        (times, densities) with densities of shape (len(times), [R,] d, d)

    Raises:
        TraceDriftError: rk4 trace drift above 1e-6
    """
    if method not in ("rk4", "split"):
        raise ValueError(f"unknown method {method!r}, expected 'rk4' or 'split'")
    edges = grid.edges(schedule, record_times=record_times)
    wanted = record_indices(edges, record_times)
    keep = set(wanted.tolist())
    rho = as_operator(rho0).copy()
    if noise is not None:
        rho = np.broadcast_to(rho, (noise.size,) + rho.shape).copy()
    states = {0: rho.copy()} if 0 in keep else {}

    if method == "split":
        channels = _HalfChannels(lindblad.gamma, schedule.dim)
        for start, steps in _step_unitaries(schedule, edges, noise):
            widths = np.diff(edges)[start:start + steps.shape[-3]]
            for k in range(steps.shape[-3]):
                if channels.active:
                    half = channels(widths[k])
                    rho = apply_superoperator(half, rho)
                u = steps[..., k, :, :]
                rho = u @ rho @ dagger(u)
                if channels.active:
                    rho = apply_superoperator(half, rho)
                if start + k + 1 in keep:
                    states[start + k + 1] = rho.copy()
        return edges[wanted], np.stack([states[i] for i in wanted])

    for k in range(len(edges) - 1):
        t, h = edges[k], edges[k + 1] - edges[k]
        times = np.array([t, t + h / 2.0, _step_end(schedule, t + h, h)])
        amplitudes = None if noise is None else noise.at(np.full(3, t + h / 2.0))
        hs = schedule.sample(times, amplitudes)
        h0, hm, h1 = hs[..., 0, :, :], hs[..., 1, :, :], hs[..., 2, :, :]
        k1 = lindblad_rhs(h0, rho, lindblad.gamma)
        k2 = lindblad_rhs(hm, rho + 0.5 * h * k1, lindblad.gamma)
        k3 = lindblad_rhs(hm, rho + 0.5 * h * k2, lindblad.gamma)
        k4 = lindblad_rhs(h1, rho + h * k3, lindblad.gamma)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + dagger(rho))
        drift = float(np.max(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0)))
        if drift > TRACE_ABORT:
            raise TraceDriftError(t + h, drift)
        if k + 1 in keep:
            states[k + 1] = rho.copy()
    return edges[wanted], np.stack([states[i] for i in wanted])


def period_map(schedule: HamiltonianSchedule, lindblad: LindbladSpec, grid: PropagationGrid,
               start: float, period: float, noise: Optional[NoiseSeries] = None) -> np.ndarray:
    """
    Superoperator of one period [start, start + period] built from split steps.

    Reused as Φᵏ wherever the schedule repeats exactly with period `period`.

    Returns:
        (d², d²) or (R, d², d²)
    """
    edges = grid.edges(schedule, window=(start, start + period))
    dim = schedule.dim
    batch = () if noise is None else (noise.size,)
    total = np.broadcast_to(np.eye(dim * dim, dtype=np.complex128), batch + (dim * dim,) * 2).copy()
    widths = np.diff(edges)
    channels = _HalfChannels(lindblad.gamma, dim)
    for first, steps in _step_unitaries(schedule, edges, noise):
        step = _unitary_superoperator(steps)
        if channels.active:
            halves = np.stack([channels(w) for w in widths[first:first + steps.shape[-3]]])
            step = halves @ step @ halves
        total = ordered_product(step) @ total
    return total


def rotating_frame(schedule: HamiltonianSchedule, dressing: DressingSpec,
                   coupling: Optional[BathCoupling] = None) -> HamiltonianSchedule:
    """
    H_r(t) = H_S(t) + H_E + V†(t) H_SE V(t) for a bare system schedule.

    classical-field couplings keep the δ(t) amplitude as the schedule's noise with the
    rotated operator V†SV; a toy spin bath enlarges the space to system ⊗ bath.
    """
    if coupling is None or (coupling.bath == "toy-spin" and coupling.coupling_strength == 0.0
                            and coupling.bath_frequency == 0.0):
        return HamiltonianSchedule(schedule.hamiltonian, schedule.total_time, schedule.dim,
                                   schedule.discontinuities, tau=dressing.tau, label=f"{schedule.label}:rotating")
    s = coupling.operator

    def rotated_coupling(times):
        v = dressing_operator(dressing, times)
        return dagger(v) @ s @ v

    if coupling.bath == "classical-field":
        return HamiltonianSchedule(schedule.hamiltonian, schedule.total_time, schedule.dim,
                                   schedule.discontinuities, noise_operator=rotated_coupling,
                                   tau=dressing.tau, label=f"{schedule.label}:rotating")

    bath_eye = np.eye(2)
    h_env = tensor(np.eye(schedule.dim), coupling.environment_hamiltonian())
    b = coupling.bath_operator()

    def total(times):
        h_sys = np.einsum("kij,ab->kiajb", schedule.hamiltonian(times), bath_eye)
        h_int = np.einsum("kij,ab->kiajb", rotated_coupling(times), b)
        dim = schedule.dim * 2
        return (h_sys + h_int).reshape(len(times), dim, dim) + h_env

    return HamiltonianSchedule(total, schedule.total_time, schedule.dim * 2, schedule.discontinuities,
                               tau=dressing.tau, label=f"{schedule.label}:rotating+bath")


def _check_window(window: Tuple[float, float], tau: float) -> None:
    start, end = window
    if abs((end - start) - tau) > 1e-9 * max(1.0, tau):
        raise GridAlignmentError(f"Magnus window [{start}, {end}] has length {end - start}, expected τ={tau}")


def magnus_first_order(schedule: HamiltonianSchedule, window: Tuple[float, float], tau: float,
                       points: int = 4000, noise_value: Optional[float] = None) -> np.ndarray:
    """
    H̄⁽⁰⁾ = (1/τ)∫ H_r dt over one period by midpoint quadrature.

    Args:
        schedule: rotating-frame schedule
        window: (t_j, t_j + τ)
        tau: dressing period
        points: quadrature points
        noise_value: δ₀ multiplying the schedule's noise operator, if any
    """
    _check_window(window, tau)
    start, end = window
    times = start + (np.arange(points) + 0.5) * (end - start) / points
    noise = None if noise_value is None else np.full((1, points), noise_value)
    h = schedule.sample(times, noise)
    if noise is not None:
        h = h[0]
    return np.mean(h, axis=0)


def magnus_residual(schedule: HamiltonianSchedule, window: Tuple[float, float], tau: float,
                    grid: PropagationGrid, noise_value: Optional[float] = None) -> float:
    """‖T-exp over the window − exp(−iH̄⁽⁰⁾τ)‖, the neglected higher-order part."""
    average = magnus_first_order(schedule, window, tau, noise_value=noise_value)
    noise = None if noise_value is None else NoiseSeries(np.array([noise_value]))
    u = propagate_unitary(schedule, grid, noise=noise, window=window)
    if noise is not None:
        u = u[0]
    return float(np.linalg.norm(u - hermitian_exp(average, tau)))


def path_schedule(path: LoopPath, dressing: Optional[DressingSpec] = None,
                  coupling: Optional[BathCoupling] = None) -> HamiltonianSchedule:
    """
    Bare (dressing=None) or dressed schedule of a path with the classical noise
    operator S (σ_z, or σ_z ⊗ I for pairs) in the lab frame.
    """
    if dressing is None:
        hamiltonian = lambda t: bare_hamiltonian(path, t)  # noqa: E731
        tau, label = None, "bare"
    else:
        hamiltonian = lambda t: dressed_hamiltonian(path, dressing, t)  # noqa: E731
        tau, label = dressing.tau, "dressed"
    coupling = coupling or BathCoupling(pair=path.qubits == 2)
    return HamiltonianSchedule(hamiltonian, path.total_time, path.dim, path.boundaries,
                               noise_operator=coupling.operator, tau=tau, label=label)


class ToyBathReport(NamedTuple):
    purity: float
    factorization_error: float


def toy_bath_factorization(path: LoopPath, dressing: Optional[DressingSpec], coupling: BathCoupling,
                           grid: Optional[PropagationGrid] = None) -> ToyBathReport:
    """
    Propagate system ⊗ one bath spin exactly under
    H_S′ ⊗ I + I ⊗ ω_e σ_z + λ S ⊗ σ_x (H_S′ bare when dressing is None).

    Returns:
        purity of the reduced system state for |+⟩ ⊗ bath ground, and the
        phase-insensitive distance of ⟨b₀|U|b₀⟩ from the ideal gate
    """
    system = path_schedule(path, dressing)
    dim = path.dim
    h_env = tensor(np.eye(dim), coupling.environment_hamiltonian())
    h_int = tensor(coupling.operator, coupling.bath_operator())

    def total(times):
        h_sys = np.einsum("kij,ab->kiajb", system.hamiltonian(times), np.eye(2)).reshape(len(times), 2 * dim, 2 * dim)
        return h_sys + h_env + h_int

    schedule = HamiltonianSchedule(total, path.total_time, 2 * dim, path.boundaries,
                                   tau=system.tau, label=f"{system.label}+toy-bath")
    grid = grid or PropagationGrid.default_for(schedule)
    u = propagate_unitary(schedule, grid)

    # bath ground state of ω_e σ_z is |1⟩ for ω_e > 0
    ground = np.array(KET_1) if coupling.bath_frequency >= 0 else np.array([1.0, 0.0])
    system_plus = KET_PLUS if dim == 2 else np.kron(KET_PLUS, KET_PLUS)
    psi = u @ np.kron(system_plus, ground)
    reduced = partial_trace(density_from_state(psi), [dim, 2], keep=[0])

    blocks = u.reshape(dim, 2, dim, 2)
    projected = np.einsum("a,iajb,b->ij", np.conj(ground), blocks, ground)
    distance = operator_distance(projected, ideal_gate(path)).phase_insensitive
    report = ToyBathReport(purity(reduced), distance)
    logger.debug(f"toy bath ({system.label}): purity={report.purity:.8f}, error={report.factorization_error:.3e}")
    return report


def write_trajectory_csv(times: np.ndarray, states: np.ndarray, path) -> None:
    """t_us followed by re/im columns of the flattened state or density entries."""
    flat = np.asarray(states).reshape(len(times), -1)
    columns = {"t_us": np.asarray(times, dtype=float)}
    for i in range(flat.shape[1]):
        columns[f"re_{i}"] = flat[:, i].real
        columns[f"im_{i}"] = flat[:, i].imag
    write_csv(path, columns)
    logger.info(f"[OK] Wrote trajectory ({len(times)} rows, {flat.shape[1]} entries) to {path}")


__all__ = [
    "GridAlignmentError",
    "HamiltonianSchedule",
    "LindbladSpec",
    "NoiseSeries",
    "PropagationGrid",
    "ToyBathReport",
    "TraceDriftError",
    "apply_superoperator",
    "dissipator_superoperator",
    "exact_step_map",
    "lindblad_evolve",
    "lindblad_rhs",
    "liouvillian",
    "magnus_first_order",
    "magnus_residual",
    "path_schedule",
    "period_map",
    "propagate_state",
    "propagate_unitary",
    "rotating_frame",
    "toy_bath_factorization",
    "write_trajectory_csv",
]
