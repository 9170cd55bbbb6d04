"""
Gate design module for nonadiabatic geometric gates.
Builds the bare Hamiltonian H_S from the frame states |ν_k(t)⟩, dresses it with the
periodic decoupling operator V(t) = exp(−2πinσ_x t/τ), checks both decoupling
conditions, evaluates geometric and dynamical phases, and synthesizes orange-slice
or lune loop paths that realize a target gate e^{−iγ n·σ} (one qubit) or the controlled
gate |↓⟩⟨↓|⊗I + |↑⟩⟨↑|⊗e^{−iγ n·σ} (electron ⊗ nuclear).
"""

import logging
from enum import Enum
from functools import cached_property
from typing import Callable, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from linalg_core import (
    IDENTITY_2,
    KET_0,
    KET_1,
    KET_DOWN,
    KET_UP,
    PROJ_DOWN,
    PROJ_UP,
    SIGMA_X,
    SIGMA_Z,
    as_operator,
    axis_angles,
    bloch_state,
    dagger,
    is_hermitian,
    pauli_components,
    pauli_vector,
    tensor,
    unit_axis,
)

logger = logging.getLogger(__name__)

POLE_TOL = 1e-9
CLOSURE_TOL = 1e-9
TIME_TOL = 1e-12


class PathError(ValueError):
    """Raised for malformed paths or evaluation outside [0, T]."""


class PathClosureError(PathError):
    """Raised when the frame states do not return to ±themselves."""


class GateSynthesisError(ValueError):
    """Raised when a target gate cannot be turned into a loop path."""


class SegmentKind(str, Enum):
    THETA_RAMP = "theta-ramp"
    PHI_SWEEP = "phi-sweep"
    POLE_JUMP = "pole-jump"


class PathSegment(BaseModel):
    """
    One piece of a loop path.

    theta-ramp: θ changes by theta_change over periods·τ at the current azimuth,
                Ω_j = theta_change / (2·periods·τ)
    phi-sweep:  φ changes by phi_change over periods·τ at fixed θ
    pole-jump:  φ changes by phi_change instantly at a pole, θ ≡ 0 or π (zero duration)
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: SegmentKind
    periods: int = Field(default=0, ge=0)
    theta_change: float = 0.0
    phi_change: float = 0.0

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == SegmentKind.POLE_JUMP:
            if self.periods != 0:
                raise PathError(f"pole-jump must have zero duration, got periods={self.periods}")
            if self.theta_change != 0.0:
                raise PathError("pole-jump cannot change θ")
        else:
            if self.periods < 1:
                raise PathError(f"{self.kind.value} needs periods >= 1, got {self.periods}")
            if self.kind == SegmentKind.THETA_RAMP and self.phi_change != 0.0:
                raise PathError("theta-ramp keeps φ constant; use a phi-sweep or pole-jump")
            if self.kind == SegmentKind.PHI_SWEEP and self.theta_change != 0.0:
                raise PathError("phi-sweep keeps θ constant")
        return self


class Span(NamedTuple):
    kind: SegmentKind
    start: float
    end: float
    theta_start: float
    phi_start: float
    theta_rate: float
    phi_rate: float


class LoopPath(BaseModel):
    """
    Piecewise loop on the Bloch sphere starting at (θ₀, φ₀).

    For two-qubit paths θ, φ play the roles of α, β and the loop lives in the
    |↑⟩ block of the nuclear spin.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    theta0: float
    phi0: float
    tau: float = Field(gt=0.0)
    segments: List[PathSegment]
    qubits: Literal[1, 2] = 1
    target_axis: Optional[Tuple[float, float, float]] = None
    target_angle: Optional[float] = None

    @model_validator(mode="after")
    def _check_path(self):
        if not any(seg.kind != SegmentKind.POLE_JUMP for seg in self.segments):
            raise PathError("path has no timed segment (T would be 0)")
        theta = self.theta0
        for index, seg in enumerate(self.segments):
            if seg.kind == SegmentKind.POLE_JUMP and not at_pole(theta):
                raise PathError(f"segment {index}: pole-jump at θ={theta:.12f}, allowed only at θ ≡ 0 or π")
            theta += seg.theta_change
        return self

    @property
    def total_periods(self) -> int:
        return int(sum(seg.periods for seg in self.segments))

    @property
    def total_time(self) -> float:
        return self.total_periods * self.tau

    @property
    def dim(self) -> int:
        return 2 if self.qubits == 1 else 4

    @cached_property
    def spans(self) -> List[Span]:
        spans = []
        t, theta, phi = 0.0, self.theta0, self.phi0
        for seg in self.segments:
            duration = seg.periods * self.tau
            if seg.kind == SegmentKind.POLE_JUMP:
                spans.append(Span(seg.kind, t, t, theta, phi, 0.0, 0.0))
            else:
                spans.append(Span(seg.kind, t, t + duration, theta, phi,
                                  seg.theta_change / duration, seg.phi_change / duration))
            theta += seg.theta_change
            phi += seg.phi_change
            t += duration
        return spans

    @cached_property
    def final_angles(self) -> Tuple[float, float]:
        theta = self.theta0 + sum(seg.theta_change for seg in self.segments)
        phi = self.phi0 + sum(seg.phi_change for seg in self.segments)
        return theta, phi

    @cached_property
    def _timed(self) -> Tuple[np.ndarray, ...]:
        timed = [s for s in self.spans if s.kind != SegmentKind.POLE_JUMP]
        return tuple(np.array([getattr(s, name) for s in timed], dtype=float)
                     for name in ("start", "theta_start", "phi_start", "theta_rate", "phi_rate"))

    @property
    def boundaries(self) -> List[float]:
        """Segment boundary times (the schedule discontinuities)."""
        points = sorted({round(s.start, 15) for s in self.spans} | {self.total_time})
        return [float(p) for p in points]

    def angles(self, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        θ(t), φ(t), θ̇(t), φ̇(t), vectorized; right limit at segment boundaries.

        Args:
            t: time(s) in μs inside [0, T]

        Returns:
            four arrays with the shape of t
        """
        t = np.asarray(t, dtype=float)
        total = self.total_time
        if np.any(t < -TIME_TOL) or np.any(t > total + TIME_TOL):
            raise PathError(f"time outside [0, {total}] μs")
        starts, theta_start, phi_start, theta_rate, phi_rate = self._timed
        index = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(starts) - 1)
        elapsed = t - starts[index]
        theta = theta_start[index] + theta_rate[index] * elapsed
        phi = phi_start[index] + phi_rate[index] * elapsed
        # trailing pole-jumps only show up at t = T
        at_end = t >= total - TIME_TOL
        if np.any(at_end):
            final_theta, final_phi = self.final_angles
            theta = np.where(at_end, final_theta, theta)
            phi = np.where(at_end, final_phi, phi)
        return theta, phi, theta_rate[index], phi_rate[index]

    def segment_table(self) -> List[dict]:
        """Per-segment Ω_j, φ_j and timing, for reports."""
        rows = []
        for seg, span in zip(self.segments, self.spans):
            row = {"kind": seg.kind.value, "periods": seg.periods, "start_us": span.start,
                   "end_us": span.end, "theta_start": span.theta_start, "phi_start": span.phi_start}
            if seg.kind == SegmentKind.THETA_RAMP:
                row["omega"] = span.theta_rate / 2.0
            elif seg.kind == SegmentKind.PHI_SWEEP:
                row["phi_rate"] = span.phi_rate
            else:
                row["phi_change"] = seg.phi_change
            rows.append(row)
        return rows


class DressingSpec(BaseModel):
    """V(t) = exp(−2πinσ_x t/τ), tensored with I on the nuclear spin for pairs."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(default=1, ge=1)
    tau: float = Field(gt=0.0)
    target: Literal["one-qubit", "electron-of-pair"] = "one-qubit"

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.tau

    @property
    def dim(self) -> int:
        return 2 if self.target == "one-qubit" else 4


class BathCoupling(BaseModel):
    """
    System-bath coupling H_SE = S ⊗ B_z.

    classical-field: B_z is the scalar δ₀(t) supplied by a noise model, H_E = 0.
    toy-spin:        B_z = λσ_x on one bath spin with H_E = ω_e σ_z.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    bath: Literal["classical-field", "toy-spin"] = "classical-field"
    pair: bool = False
    coupling_strength: float = 0.0
    bath_frequency: float = 0.0
    system_operator: Optional[np.ndarray] = None

    @field_validator("system_operator")
    @classmethod
    def _hermitian(cls, value):
        if value is not None and not is_hermitian(value):
            raise ValueError("system operator must be Hermitian")
        return value

    @property
    def operator(self) -> np.ndarray:
        if self.system_operator is not None:
            return as_operator(self.system_operator)
        return tensor(SIGMA_Z, IDENTITY_2) if self.pair else np.array(SIGMA_Z)

    @property
    def system_dim(self) -> int:
        return self.operator.shape[0]

    def environment_hamiltonian(self) -> np.ndarray:
        return self.bath_frequency * np.array(SIGMA_Z)

    def bath_operator(self) -> np.ndarray:
        return self.coupling_strength * np.array(SIGMA_X)


class GeometricPhase(NamedTuple):
    gamma: float
    chi: float


class DecouplingIntegral(NamedTuple):
    quadrature: np.ndarray
    closed_form: np.ndarray


def at_pole(theta: float, tol: float = POLE_TOL) -> bool:
    """θ ≡ 0 or π, where φ is undefined and H_S vanishes for any azimuth."""
    return abs(np.mod(theta + np.pi / 2, np.pi) - np.pi / 2) <= tol


def frame_pair(theta, phi) -> Tuple[np.ndarray, np.ndarray]:
    """The two orthonormal qubit frame states at (θ, φ)."""
    nu1 = bloch_state(theta, phi)
    nu2 = np.array([np.sin(theta / 2) * np.exp(-1j * phi), -np.cos(theta / 2)], dtype=np.complex128)
    return nu1, nu2


def frame_states(path: LoopPath, t: float) -> List[np.ndarray]:
    """
    Frame states |ν_k(t)⟩ of the path.

    Args:
        path: loop path
        t: time in μs, 0 ≤ t ≤ T

    Returns:
        [ν₁, ν₂] for one qubit, [ν₁, ν₂, ν₃, ν₄] in electron ⊗ nuclear order for two
    """
    theta, phi, _, _ = path.angles(float(t))
    nu_a, nu_b = frame_pair(float(theta), float(phi))
    if path.qubits == 1:
        return [nu_a, nu_b]
    return [np.kron(KET_0, KET_DOWN), np.kron(KET_1, KET_DOWN), np.kron(nu_a, KET_UP), np.kron(nu_b, KET_UP)]


def bare_components(path: LoopPath, t) -> np.ndarray:
    """Pauli components (h_x, h_y, h_z) of the qubit Hamiltonian, shape t.shape + (3,)."""
    theta, phi, theta_dot, phi_dot = path.angles(t)
    sc = np.sin(theta) * np.cos(theta)
    hx = -0.5 * (theta_dot * np.sin(phi) + phi_dot * sc * np.cos(phi))
    hy = 0.5 * (theta_dot * np.cos(phi) - phi_dot * sc * np.sin(phi))
    hz = 0.5 * phi_dot * np.sin(theta) ** 2
    return np.stack([hx, hy, hz], axis=-1)


def _lift(path_qubits: int, components: np.ndarray, down_x: float = 0.0) -> np.ndarray:
    qubit = pauli_vector(components)
    if path_qubits == 1:
        return qubit
    lifted = np.einsum("...ij,kl->...ikjl", qubit, PROJ_UP).reshape(qubit.shape[:-2] + (4, 4))
    if down_x:
        lifted = lifted + down_x * tensor(SIGMA_X, PROJ_DOWN)
    return lifted


def bare_hamiltonian(path: LoopPath, t) -> np.ndarray:
    """
    H_S(t) of the path: H_j = Ω_j(−sinφ_j σ_x + cosφ_j σ_y) on theta-ramps, the full
    frame-state expression with θ̇ = 0 on phi-sweeps, tensored with |↑⟩⟨↑| for pairs.
    Accepts a scalar time or an array of times.
    """
    return _lift(path.qubits, bare_components(path, t))


def dressed_components(path: LoopPath, dressing: DressingSpec, t) -> np.ndarray:
    """
    Pauli components of V H_S V† + iV̇V† on the driven qubit:
    (h_x + nω, h_y cos2nωt − h_z sin2nωt, h_y sin2nωt + h_z cos2nωt).
    """
    t = np.asarray(t, dtype=float)
    bare = bare_components(path, t)
    angle = 2.0 * dressing.n * dressing.omega * t
    c, s = np.cos(angle), np.sin(angle)
    hx = bare[..., 0] + dressing.n * dressing.omega
    hy = bare[..., 1] * c - bare[..., 2] * s
    hz = bare[..., 1] * s + bare[..., 2] * c
    return np.stack([hx, hy, hz], axis=-1)


def dressed_hamiltonian(path: LoopPath, dressing: DressingSpec, t) -> np.ndarray:
    """
    H′_S(t) in closed form. For pairs this adds the nω σ_x ⊗ |↓⟩⟨↓| drive that keeps
    the whole electron dressed.
    """
    if dressing.dim != path.dim:
        raise PathError(f"dressing acts on dim {dressing.dim}, path on dim {path.dim}")
    return _lift(path.qubits, dressed_components(path, dressing, t),
                 down_x=dressing.n * dressing.omega)


def dressing_operator(dressing: DressingSpec, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    angle = dressing.n * dressing.omega * t
    qubit = (np.cos(angle)[..., None, None] * IDENTITY_2
             - 1j * np.sin(angle)[..., None, None] * SIGMA_X)
    if dressing.target == "one-qubit":
        return qubit
    return np.einsum("...ij,kl->...ikjl", qubit, IDENTITY_2).reshape(qubit.shape[:-2] + (4, 4))


def dressing_derivative(dressing: DressingSpec, t) -> np.ndarray:
    generator = np.array(SIGMA_X) if dressing.target == "one-qubit" else tensor(SIGMA_X, IDENTITY_2)
    return -1j * dressing.n * dressing.omega * generator @ dressing_operator(dressing, t)


def dressed_from_bare(h_bare: np.ndarray, dressing: DressingSpec, t: float) -> np.ndarray:
    """V(t) H V†(t) + iV̇(t)V†(t) for an arbitrary Hermitian H on the dressed space."""
    v = dressing_operator(dressing, t)
    return v @ h_bare @ dagger(v) + 1j * dressing_derivative(dressing, t) @ dagger(v)


def hamiltonian_from_frames(frames: Callable[[float], Sequence[np.ndarray]], t: float,
                            step: float = 1e-6) -> np.ndarray:
    """
    H_S = i Σ_{l≠k} ⟨ν_l|ν̇_k⟩ |ν_l⟩⟨ν_k| with ν̇ from central differences.

    Works for any orthonormal frame family; t must be at least `step` away from a
    segment boundary.
    """
    now = frames(t)
    ahead = frames(t + step)
    behind = frames(t - step)
    dim = len(now[0])
    h = np.zeros((dim, dim), dtype=np.complex128)
    for k, nu_k in enumerate(now):
        derivative = (ahead[k] - behind[k]) / (2.0 * step)
        for l, nu_l in enumerate(now):
            if l == k:
                continue
            h += 1j * np.vdot(nu_l, derivative) * np.outer(nu_l, np.conj(nu_k))
    return h


def _driven_frames(path: LoopPath, t: float) -> List[np.ndarray]:
    states = frame_states(path, t)
    return states if path.qubits == 1 else states[2:]


def closure_phase(path: LoopPath) -> float:
    """
    χ with |ν_k(T)⟩ = e^{iχ}|ν_k(0)⟩, χ ∈ {0, π}.

    Raises:
        PathClosureError: when the frames do not close onto ±themselves
    """
    start = _driven_frames(path, 0.0)
    end = _driven_frames(path, path.total_time)
    phases = []
    for k, (a, b) in enumerate(zip(start, end)):
        overlap = np.vdot(a, b)
        if abs(abs(overlap) - 1.0) > CLOSURE_TOL:
            raise PathClosureError(f"frame ν_{k + 1} does not return: |⟨ν(0)|ν(T)⟩| = {abs(overlap):.12f}")
        phases.append(np.angle(overlap))
    chis = []
    for k, phase in enumerate(phases):
        if abs(np.sin(phase)) > CLOSURE_TOL:
            raise PathClosureError(f"frame ν_{k + 1} returns with phase {phase:.12f}, expected 0 or π")
        chis.append(0.0 if np.cos(phase) > 0 else np.pi)
    if len(set(chis)) != 1:
        raise PathClosureError(f"frames return with different closure phases {chis}")
    return chis[0]


def geometric_phase(path: LoopPath) -> GeometricPhase:
    """
    γ(T) = ½∫(1 − cosθ)φ̇ dt in closed form plus the closure phase χ.

    Pole-jumps and phi-sweeps contribute ½(1 − cosθ)Δφ; theta-ramps contribute 0.
    """
    chi = closure_phase(path)
    gamma = 0.0
    for seg, span in zip(path.segments, path.spans):
        if seg.kind in (SegmentKind.POLE_JUMP, SegmentKind.PHI_SWEEP):
            gamma += 0.5 * (1.0 - np.cos(span.theta_start)) * seg.phi_change
    return GeometricPhase(float(gamma), float(chi))


def geometric_phase_quadrature(path: LoopPath, points: int = 400_000) -> float:
    """
    γ from the discrete overlap product Σ arg⟨ν₁(s_i)|ν₁(s_{i+1})⟩ along a dense
    sampling of the path (pole-jumps sampled in φ). Excludes the closure phase.
    """
    weights = []
    for seg in path.segments:
        weights.append(abs(seg.theta_change) + abs(seg.phi_change))
    total_weight = sum(weights) or 1.0
    gamma = 0.0
    for seg, span, weight in zip(path.segments, path.spans, weights):
        samples = max(64, int(points * weight / total_weight))
        fraction = np.linspace(0.0, 1.0, samples + 1)
        theta = span.theta_start + seg.theta_change * fraction
        phi = span.phi_start + seg.phi_change * fraction
        nu1 = np.stack(frame_pair(theta, phi)[0], axis=-1)
        overlaps = np.einsum("ij,ij->i", np.conj(nu1[:-1]), nu1[1:])
        gamma += float(np.sum(np.angle(overlaps)))
    return gamma


def dynamical_phase_residual(path: LoopPath, times: Sequence[float],
                             hamiltonian: Optional[Callable[[float], np.ndarray]] = None) -> float:
    """
    max over t and k of |⟨ν_k(t)|H_S(t)|ν_k(t)⟩|.

    Args:
        path: loop path
        times: sample times in μs
        hamiltonian: H(t) to test; defaults to bare_hamiltonian(path, ·)
    """
    worst = 0.0
    for t in times:
        h = bare_hamiltonian(path, t) if hamiltonian is None else hamiltonian(t)
        for nu in frame_states(path, t):
            worst = max(worst, abs(np.vdot(nu, h @ nu)))
    return float(worst)


def decoupling_integral(dressing: DressingSpec, coupling: BathCoupling,
                        points: int = 10_000) -> DecouplingIntegral:
    """
    (1/τ)∫₀^τ V†(t) S V(t) dt by midpoint quadrature, plus the closed form that keeps
    only the identity and σ_x parts of S on the dressed electron.
    """
    s = coupling.operator
    if s.shape[0] != dressing.dim:
        raise PathError(f"system operator dim {s.shape[0]} does not match dressing dim {dressing.dim}")
    times = (np.arange(points) + 0.5) * dressing.tau / points
    v = dressing_operator(dressing, times)
    quadrature = np.mean(dagger(v) @ s @ v, axis=0)

    if dressing.target == "one-qubit":
        a0, ax, _, _ = pauli_components(s)
        closed = a0 * IDENTITY_2 + ax * SIGMA_X
    else:
        blocks = s.reshape(2, 2, 2, 2)
        b0 = 0.5 * np.einsum("ji,ikjl->kl", IDENTITY_2, blocks)
        bx = 0.5 * np.einsum("ji,ikjl->kl", SIGMA_X, blocks)
        closed = tensor(IDENTITY_2, b0) + tensor(SIGMA_X, bx)
    return DecouplingIntegral(quadrature, np.asarray(closed, dtype=np.complex128))


def axis_gate(theta0: float, phi0: float, gamma: float) -> np.ndarray:
    """e^{−iγ n·σ} = cosγ I − i sinγ n·σ."""
    n_sigma = pauli_vector(unit_axis(theta0, phi0))
    return np.cos(gamma) * np.array(IDENTITY_2) - 1j * np.sin(gamma) * n_sigma


def controlled_gate(electron_gate: np.ndarray) -> np.ndarray:
    """|↓⟩⟨↓|⊗I + |↑⟩⟨↑|⊗U written in electron ⊗ nuclear order."""
    return tensor(electron_gate, PROJ_UP) + tensor(IDENTITY_2, PROJ_DOWN)


def ideal_gate(path: LoopPath, frame_phases: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    U(T) = Σ_k e^{iγ_k}|φ_k(0)⟩⟨φ_k(0)| with γ_k = χ ∓ γ on the driven pair.

    Args:
        path: closed loop path
        frame_phases: optional fixed phases multiplying |ν_k(0)⟩ (gauge choice)
    """
    gamma, chi = geometric_phase(path)
    frames = frame_states(path, 0.0)
    if frame_phases is not None:
        frames = [np.exp(1j * p) * nu for p, nu in zip(frame_phases, frames)]
    if path.qubits == 1:
        weights = [np.exp(1j * (chi - gamma)), np.exp(1j * (chi + gamma))]
    else:
        weights = [1.0, 1.0, np.exp(1j * (chi - gamma)), np.exp(1j * (chi + gamma))]
    u = np.zeros((path.dim, path.dim), dtype=np.complex128)
    for weight, nu in zip(weights, frames):
        u += weight * np.outer(nu, np.conj(nu))
    return u


def _principal_angle(angle: float) -> float:
    if not (-np.pi < angle <= np.pi + 1e-12):
        raise GateSynthesisError(f"target angle {angle} outside (−π, π]")
    return min(angle, np.pi)


Choreography = Literal["slice", "lune"]


def synthesize_path(axis: Sequence[float], angle: float, omega: float, tau: float,
                    qubits: int = 1, sweep_rate: Optional[float] = None,
                    choreography: Choreography = "slice") -> LoopPath:
    """
    Loop path whose geometric gate is e^{−iγ n·σ}.

    slice: theta-ramp θ₀→π at φ₀, pole-jump Δφ, theta-ramp π→θ₀ at φ₀+Δφ, phi-sweep
           back to φ₀ (omitted at the poles), with Δφ = 2γ/(1 + cosθ₀).
    lune:  theta-ramp θ₀→0 at φ₀, pole-jump −γ, theta-ramp 0→π at φ₀−γ, pole-jump +γ,
           theta-ramp π→θ₀ at φ₀. No phi-sweep; T = π/Ω for every axis.

    Axes with θ₀ > π/2 are built on the antipodal frame (−n, −γ), which is the same
    operator and keeps Δφ bounded. Durations are rounded to whole periods and the ramp
    rates adjusted so the geometry is exact.

    Args:
        axis: unit 3-vector n
        angle: γ in (−π, π]
        omega: ramp Rabi rate Ω in rad/μs (θ̇ = 2Ω)
        tau: dressing period in μs
        qubits: 1, or 2 for the controlled gate on the |↑⟩ block
        sweep_rate: |φ̇| of the slice phi-sweep, defaults to Ω
        choreography: "slice" or "lune"

    Returns:
        LoopPath with target metadata
    """
    if omega <= 0 or tau <= 0:
        raise GateSynthesisError(f"Ω and τ must be positive, got Ω={omega}, τ={tau}")
    if choreography not in ("slice", "lune"):
        raise GateSynthesisError(f"unknown choreography {choreography!r}")
    angles = axis_angles(axis)
    if angles is None:
        raise GateSynthesisError(f"axis {tuple(axis)} is not a unit vector")
    gamma = _principal_angle(float(angle))
    theta0, phi0 = angles
    if theta0 > np.pi / 2 + 1e-12:
        theta0, phi0, gamma = np.pi - theta0, phi0 + np.pi, -gamma
        logger.debug(f"axis below the equator, using antipodal frame θ₀={theta0:.6f}")
    if theta0 < 1e-12:
        theta0, phi0 = 0.0, 0.0

    def periods_for(duration: float) -> int:
        return max(1, int(round(duration / tau)))

    def ramp(change: float) -> PathSegment:
        return PathSegment(kind=SegmentKind.THETA_RAMP, periods=periods_for(abs(change) / (2.0 * omega)),
                           theta_change=change)

    def jump(change: float) -> List[PathSegment]:
        return [PathSegment(kind=SegmentKind.POLE_JUMP, phi_change=change)] if change != 0.0 else []

    if choreography == "lune":
        jump_size = gamma
        segments = ([ramp(-theta0)] if theta0 > 0.0 else []) + jump(-gamma)
        segments += [ramp(np.pi)] + jump(gamma) + [ramp(theta0 - np.pi)]
    else:
        rate = omega if sweep_rate is None else sweep_rate
        jump_size = 2.0 * gamma / (1.0 + np.cos(theta0))
        segments = [ramp(np.pi - theta0)] + jump(jump_size) + [ramp(theta0 - np.pi)]
        if theta0 > 0.0 and jump_size != 0.0:
            segments.append(PathSegment(kind=SegmentKind.PHI_SWEEP,
                                        periods=periods_for(abs(jump_size) / rate), phi_change=-jump_size))

    path = LoopPath(theta0=theta0, phi0=phi0, tau=tau, segments=segments, qubits=qubits,
                    target_axis=tuple(float(x) for x in axis), target_angle=float(angle))
    logger.info(f"[OK] Synthesized {choreography} path: θ₀={theta0:.6f}, φ₀={phi0:.6f}, Δφ={jump_size:.6f}, "
                f"M={path.total_periods}, T={path.total_time:.6f} μs")
    return path


def synthesize_two_qubit_path(axis: Sequence[float], angle: float, omega: float, tau: float,
                              sweep_rate: Optional[float] = None,
                              choreography: Choreography = "slice") -> LoopPath:
    return synthesize_path(axis, angle, omega, tau, qubits=2, sweep_rate=sweep_rate,
                           choreography=choreography)


def target_gate(path: LoopPath) -> Optional[np.ndarray]:
    """e^{−iγn·σ} (or its controlled form) from the path's target metadata."""
    if path.target_axis is None or path.target_angle is None:
        return None
    theta, phi = axis_angles(path.target_axis)
    u = axis_gate(theta, phi, path.target_angle)
    return u if path.qubits == 1 else controlled_gate(u)


def path_to_json(path: LoopPath) -> str:
    return path.model_dump_json(indent=2)


def path_from_json(text: str) -> LoopPath:
    return LoopPath.model_validate_json(text)
