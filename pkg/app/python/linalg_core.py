"""
Small dense complex linear algebra shared by every simulator module.
Operators are numpy complex128 arrays of shape (d, d) with d in {2, 4, 8}
(one qubit, electron/nuclear pair, or either of those with one toy bath spin).

Unit convention: time is in μs and every Hamiltonian entry is in rad/μs.
Physical values in MHz and kHz enter the formulas as angular rates:

    quantity                 quoted value      value used
    detuning in H_fid        Δ = 1 MHz         πΔ = π rad/μs
    Overhauser std dev       σ = π×0.13 MHz    0.13π rad/μs
    OU std dev               σ = 1.5 MHz       1.5π rad/μs
    relaxation rate          Γ = 1 kHz         1e-3 μs⁻¹
    Rabi frequency           Ω = 2π MHz        2π rad/μs
"""

import logging
from typing import NamedTuple, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

ALLOWED_DIMS = (2, 4, 8)
HERMITIAN_TOL = 1e-12


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=np.complex128)
    array.flags.writeable = False
    return array


IDENTITY_2 = _frozen(np.eye(2))
SIGMA_X = _frozen([[0, 1], [1, 0]])
SIGMA_Y = _frozen([[0, -1j], [1j, 0]])
SIGMA_Z = _frozen([[1, 0], [0, -1]])
# σ₊ raises |1⟩ to |0⟩ because σ_z|0⟩ = +|0⟩
SIGMA_PLUS = _frozen([[0, 1], [0, 0]])
SIGMA_MINUS = _frozen([[0, 0], [1, 0]])
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

KET_0 = _frozen([1, 0])
KET_1 = _frozen([0, 1])
# nuclear spin basis of the two-qubit gate
KET_UP = KET_0
KET_DOWN = KET_1
KET_PLUS = _frozen(np.array([1, 1]) / np.sqrt(2))

PROJ_UP = _frozen(np.outer(KET_UP, KET_UP.conj()))
PROJ_DOWN = _frozen(np.outer(KET_DOWN, KET_DOWN.conj()))


class NonHermitianError(ValueError):
    """Raised when an operator that must be Hermitian is not."""

    def __init__(self, norm: float, tol: float):
        self.norm = norm
        self.tol = tol
        super().__init__(
            f"operator is not Hermitian: anti-Hermitian part has norm {norm:.3e} (tolerance {tol:.1e})"
        )


class DimensionError(ValueError):
    """Raised for non-square operators or unsupported Hilbert-space dimensions."""


class OperatorDistance(NamedTuple):
    phase_insensitive: float
    phase_sensitive: float


def as_operator(matrix, allowed_dims: Sequence[int] = ALLOWED_DIMS) -> np.ndarray:
    """
    Validate and convert to a complex operator (a batch of operators is accepted).

    Args:
        matrix: array-like of shape (..., d, d)
        allowed_dims: accepted values of d

    Returns:
        complex128 ndarray
    """
    op = np.asarray(matrix, dtype=np.complex128)
    if op.ndim < 2 or op.shape[-1] != op.shape[-2]:
        raise DimensionError(f"operator must be square, got shape {op.shape}")
    if op.shape[-1] not in allowed_dims:
        raise DimensionError(f"operator dimension {op.shape[-1]} not in {tuple(allowed_dims)}")
    return op


def dagger(op: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(op, -1, -2))


def anti_hermitian_norm(op: np.ndarray) -> float:
    """Largest Frobenius norm of (A − A†)/2 over a batch."""
    anti = 0.5 * (op - dagger(op))
    return float(np.max(np.linalg.norm(anti, axis=(-2, -1))))


def is_hermitian(op, tol: float = HERMITIAN_TOL) -> bool:
    op = as_operator(op)
    return anti_hermitian_norm(op) <= tol


def is_unitary(op, tol: float = HERMITIAN_TOL) -> bool:
    op = as_operator(op)
    eye = np.eye(op.shape[-1])
    return float(np.max(np.abs(dagger(op) @ op - eye))) <= tol


def is_density_matrix(rho, tol: float = HERMITIAN_TOL) -> bool:
    """Hermitian, unit trace and no eigenvalue below −tol."""
    rho = as_operator(rho)
    if not is_hermitian(rho, tol):
        return False
    if abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0).max() > tol:
        return False
    eigenvalues = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    return bool(eigenvalues.min() >= -tol)


def is_normalized(psi, tol: float = HERMITIAN_TOL) -> bool:
    norms = np.linalg.norm(np.asarray(psi), axis=-1)
    return bool(np.max(np.abs(norms - 1.0)) <= tol)


def hermitian_exp(h, t=1.0, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """
    Unitary exp(−iHt) by Hermitian eigendecomposition.

    Works on a single operator or a batch (..., d, d); t may be a scalar or an
    array broadcastable to the batch shape. The Hermiticity check is relative
    to max(1, ‖H‖) so large dressing amplitudes do not trip on round-off.

    Args:
        h: Hermitian operator(s) in rad/μs
        t: duration(s) in μs

    Returns:
        exp(−iHt) with the same batch shape as h
    """
    h = as_operator(h)
    scale = max(1.0, float(np.max(np.linalg.norm(h, axis=(-2, -1)))))
    anti = anti_hermitian_norm(h)
    if anti > tol * scale:
        raise NonHermitianError(anti, tol * scale)
    eigenvalues, vectors = np.linalg.eigh(0.5 * (h + dagger(h)))
    t = np.asarray(t, dtype=float)
    phases = np.exp(-1j * eigenvalues * t[..., None])
    return (vectors * phases[..., None, :]) @ dagger(vectors)


def tensor(*ops) -> np.ndarray:
    """
    Kronecker product; the first factor is the most significant subsystem.

    Raises:
        DimensionError: if the product dimension exceeds 8
    """
    if not ops:
        raise DimensionError("tensor needs at least one factor")
    dim = int(np.prod([np.shape(op)[0] for op in ops]))
    if dim > max(ALLOWED_DIMS):
        raise DimensionError(f"tensor product dimension {dim} exceeds {max(ALLOWED_DIMS)}")
    result = np.asarray(ops[0], dtype=np.complex128)
    for op in ops[1:]:
        result = np.kron(result, np.asarray(op, dtype=np.complex128))
    return result


def operator_distance(a, b) -> OperatorDistance:
    """
    Frobenius distances between two operators.

    The phase-insensitive value minimises ‖A − e^{iα}B‖ over α; the optimum is
    α = arg tr(B†A), evaluated directly to avoid cancellation.
    """
    a = as_operator(a)
    b = as_operator(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    overlap = np.trace(dagger(b) @ a)
    alpha = np.angle(overlap) if abs(overlap) > 0 else 0.0
    insensitive = float(np.linalg.norm(a - np.exp(1j * alpha) * b))
    sensitive = float(np.linalg.norm(a - b))
    return OperatorDistance(insensitive, sensitive)


def pauli_vector(h) -> np.ndarray:
    """h·σ for a real 3-vector, or a batch of them with shape (..., 3)."""
    h = np.asarray(h, dtype=float)
    return np.einsum("...k,kij->...ij", h, np.stack(PAULIS))


def pauli_components(op) -> np.ndarray:
    """Real coefficients (a0, ax, ay, az) of a 2×2 Hermitian operator, batched."""
    op = as_operator(op, allowed_dims=(2,))
    basis = np.stack((IDENTITY_2,) + PAULIS)
    return np.real(np.einsum("kji,...ij->...k", basis, op)) / 2.0


def bloch_state(theta, phi) -> np.ndarray:
    """cos(θ/2)|0⟩ + sin(θ/2)e^{iφ}|1⟩."""
    return np.array([np.cos(theta / 2), np.sin(theta / 2) * np.exp(1j * phi)], dtype=np.complex128)


def density_from_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    return psi[..., :, None] * np.conj(psi[..., None, :])


def state_fidelity(psi, rho) -> np.ndarray:
    """⟨ψ|ρ|ψ⟩, batched over matching leading axes."""
    psi = np.asarray(psi, dtype=np.complex128)
    return np.real(np.einsum("...i,...ij,...j->...", np.conj(psi), rho, psi))


def purity(rho) -> float:
    rho = as_operator(rho)
    return float(np.real(np.trace(rho @ rho)))


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """
    Reduce a density matrix to the subsystems listed in keep.

    Args:
        rho: (D, D) density matrix with D = prod(dims)
        dims: subsystem dimensions in tensor order
        keep: indices of subsystems to keep
    """
    dims = list(dims)
    n = len(dims)
    reshaped = np.asarray(rho).reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    letters = "abcdefghij"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in traced:
        col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    result = np.einsum("".join(row) + "".join(col) + "->" + out, reshaped)
    kept = int(np.prod([dims[i] for i in keep]))
    return result.reshape(kept, kept)


def random_hermitian(rng: np.random.Generator, dim: int = 2, scale: float = 10.0) -> np.ndarray:
    """Random Hermitian operator with entries bounded by scale (used by checks)."""
    real = rng.uniform(-1, 1, (dim, dim))
    imag = rng.uniform(-1, 1, (dim, dim))
    h = (real + 1j * imag) * scale / 2.0
    return 0.5 * (h + h.conj().T)


def unit_axis(theta: float, phi: float) -> np.ndarray:
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def axis_angles(axis, tol: float = 1e-9) -> Optional[tuple]:
    """(θ, φ) of a unit 3-vector; None when the norm is not 1 within tol."""
    axis = np.asarray(axis, dtype=float)
    norm = float(np.linalg.norm(axis))
    if abs(norm - 1.0) > tol:
        return None
    theta = float(np.arccos(np.clip(axis[2] / norm, -1.0, 1.0)))
    phi = float(np.arctan2(axis[1], axis[0])) if np.hypot(axis[0], axis[1]) > 0 else 0.0
    return theta, phi
