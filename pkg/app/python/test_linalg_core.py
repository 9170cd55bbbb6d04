"""
Tests for the shared operator algebra.
"""

import numpy as np
import pytest

from linalg_core import (
    IDENTITY_2,
    KET_0,
    KET_1,
    KET_PLUS,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DimensionError,
    NonHermitianError,
    axis_angles,
    bloch_state,
    density_from_state,
    hermitian_exp,
    is_density_matrix,
    is_unitary,
    operator_distance,
    partial_trace,
    pauli_components,
    pauli_vector,
    purity,
    random_hermitian,
    state_fidelity,
    tensor,
    unit_axis,
)


def test_pauli_algebra():
    assert np.allclose(SIGMA_X @ SIGMA_Y, 1j * SIGMA_Z)
    assert np.allclose(SIGMA_PLUS @ KET_1, KET_0)
    assert np.allclose(SIGMA_MINUS @ KET_0, KET_1)
    assert np.allclose(SIGMA_PLUS + SIGMA_MINUS, SIGMA_X)


def test_constants_are_read_only():
    with pytest.raises(ValueError):
        SIGMA_X[0, 0] = 5


def test_hermitian_exp_of_pauli_rotation():
    u = hermitian_exp(SIGMA_X, np.pi / 2)
    assert np.allclose(u, -1j * SIGMA_X, atol=1e-14)


def test_hermitian_exp_matches_scipy_on_random_operators():
    from scipy.linalg import expm

    rng = np.random.default_rng(3)
    for dim in (2, 4, 8):
        h = random_hermitian(rng, dim)
        t = rng.uniform(0, 2)
        u = hermitian_exp(h, t)
        assert operator_distance(u, expm(-1j * h * t)).phase_sensitive < 1e-10
        assert is_unitary(u, tol=1e-11)


def test_hermitian_exp_group_law():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        dim = int(rng.choice([2, 4]))
        h = random_hermitian(rng, dim)
        s, t = rng.uniform(-2, 2, size=2)
        assert np.allclose(hermitian_exp(h, t) @ hermitian_exp(h, -t), np.eye(dim), atol=1e-10)
        assert np.allclose(hermitian_exp(h, s) @ hermitian_exp(h, t), hermitian_exp(h, s + t), atol=1e-10)


def test_tensor_associativity_and_mixed_product():
    rng = np.random.default_rng(12)
    a, b, c, d = (random_hermitian(rng) for _ in range(4))
    assert np.allclose(tensor(tensor(a, b), c), tensor(a, tensor(b, c)))
    assert np.allclose(tensor(a, b, c), tensor(a, tensor(b, c)))
    assert np.allclose(tensor(a, b) @ tensor(c, d), tensor(a @ c, b @ d))


def test_hermitian_exp_batched_times():
    times = np.array([0.0, 0.25, 0.5])
    batch = hermitian_exp(np.broadcast_to(SIGMA_Z, (3, 2, 2)), times)
    assert batch.shape == (3, 2, 2)
    assert np.allclose(batch[0], IDENTITY_2)
    assert np.allclose(batch[2], np.diag([np.exp(-0.5j), np.exp(0.5j)]))


def test_hermitian_exp_rejects_non_hermitian():
    with pytest.raises(NonHermitianError):
        hermitian_exp(SIGMA_PLUS)


def test_dimension_checks():
    with pytest.raises(DimensionError):
        hermitian_exp(np.eye(3))
    with pytest.raises(DimensionError):
        hermitian_exp(np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        tensor(SIGMA_X, SIGMA_X, SIGMA_X, SIGMA_X)
    with pytest.raises(DimensionError):
        operator_distance(SIGMA_X, tensor(SIGMA_X, SIGMA_X))


def test_tensor_order():
    ket = tensor(KET_1.reshape(2, 1), KET_0.reshape(2, 1)).ravel()
    assert np.allclose(ket, [0, 0, 1, 0])


def test_operator_distance_ignores_global_phase():
    d = operator_distance(np.exp(0.7j) * SIGMA_X, SIGMA_X)
    assert d.phase_insensitive < 1e-14
    assert d.phase_sensitive > 0.5


def test_operator_distance_reference_values():
    d = operator_distance(IDENTITY_2, SIGMA_X)
    assert d.phase_sensitive == pytest.approx(2.0)
    assert d.phase_insensitive == pytest.approx(2.0)
    for u in (IDENTITY_2, SIGMA_Y, tensor(SIGMA_X, SIGMA_Z)):
        dim = u.shape[0]
        shifted = operator_distance(np.exp(1j * np.pi / 3) * u, u)
        assert shifted.phase_sensitive == pytest.approx(2 * abs(np.sin(np.pi / 6)) * np.sqrt(dim), abs=1e-12)
        assert shifted.phase_insensitive < 1e-12


def test_pauli_round_trip_of_components():
    h = 0.3 * IDENTITY_2 + pauli_vector([1.0, -2.0, 0.5])
    assert np.allclose(pauli_components(h), [0.3, 1.0, -2.0, 0.5])


def test_state_fidelity_and_purity():
    rho = density_from_state(KET_PLUS)
    assert is_density_matrix(rho)
    assert state_fidelity(KET_PLUS, rho) == pytest.approx(1.0)
    assert state_fidelity(KET_0, rho) == pytest.approx(0.5)
    assert purity(0.5 * np.array(IDENTITY_2)) == pytest.approx(0.5)


def test_partial_trace_of_product_state():
    a = density_from_state(KET_PLUS)
    b = density_from_state(KET_1)
    joint = tensor(a, b)
    assert np.allclose(partial_trace(joint, [2, 2], [0]), a)
    assert np.allclose(partial_trace(joint, [2, 2], [1]), b)


def test_bell_state_reduces_to_mixed():
    bell = (tensor(KET_0, KET_0) + tensor(KET_1, KET_1)) / np.sqrt(2)
    reduced = partial_trace(density_from_state(bell), [2, 2], [1])
    assert purity(reduced) == pytest.approx(0.5)


def test_bloch_state_and_axis_angles():
    assert np.allclose(bloch_state(np.pi / 2, 0.0), KET_PLUS)
    theta, phi = axis_angles(unit_axis(1.1, -2.0))
    assert theta == pytest.approx(1.1)
    assert phi == pytest.approx(-2.0)
    assert axis_angles([1.0, 1.0, 0.0]) is None
