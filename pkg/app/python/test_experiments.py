"""
Tests for the Monte-Carlo studies at reduced sample counts.
"""

import logging
from functools import partial

import numpy as np
import pytest
from pydantic import ValidationError

from experiments import (
    ExperimentConfigError,
    FidConfig,
    GateExpConfig,
    _fid_chunk,
    extract_t2,
    fid_output_times,
    mean_and_stderr,
    run_fid,
    run_gate_fidelity,
    run_monte_carlo,
    run_ou_study,
    run_two_qubit_check,
    stderr_scaling,
)
from gate_design import DressingSpec, synthesize_path, synthesize_two_qubit_path
from noise_models import QuasiStaticGaussian

SIGMA = 0.13 * np.pi


def test_extract_t2_interpolates_crossing():
    times = np.linspace(0.0, 6.0, 601)
    t2, lower_bound = extract_t2(times, np.exp(-times / 2.0))
    assert not lower_bound
    assert t2 == pytest.approx(2.0, abs=1e-4)


def test_extract_t2_reports_lower_bound():
    times = np.linspace(0.0, 1.0, 11)
    t2, lower_bound = extract_t2(times, np.exp(-times / 50.0))
    assert lower_bound
    assert t2 == 1.0


def test_stderr_helpers():
    values = np.array([[1.0, 2.0], [3.0, 2.0]])
    mean, stderr = mean_and_stderr(values)
    assert np.allclose(mean, [2.0, 2.0])
    assert np.allclose(stderr, [1.0, 0.0])
    sizes = [100, 400, 1600]
    assert stderr_scaling(sizes, [1.0 / np.sqrt(n) for n in sizes]) == pytest.approx(-0.5)


def test_protected_output_stride_divides_periods():
    cfg = FidConfig(protected=True, t_max=10.0, tau=0.01)
    times, stride = fid_output_times(cfg)
    assert 1000 % stride == 0
    assert times[-1] == pytest.approx(10.0)
    assert len(times) - 1 <= cfg.output_points


def test_monte_carlo_is_independent_of_workers():
    cfg = FidConfig(t_max=2.0, samples=300, output_points=20, seed=17)
    chunk = partial(_fid_chunk, cfg)
    serial = run_monte_carlo(chunk, 300, workers=1, chunk_size=100, show_progress=False)
    parallel = run_monte_carlo(chunk, 300, workers=2, chunk_size=100, show_progress=False)
    assert serial.shape == (300, 21)
    assert np.array_equal(serial, parallel)


def test_unprotected_fid_matches_gaussian_decay():
    cfg = FidConfig(samples=4000, output_points=120, seed=3)
    result = run_fid(cfg, show_progress=False)
    assert result.axis[0] == 0.0
    assert result.columns["envelope_mean"][0] == pytest.approx(1.0)
    assert result.summary["t2_us"] == pytest.approx(1.0 / (np.sqrt(2.0) * SIGMA), abs=0.1)
    assert not result.summary["t2_is_lower_bound"]
    assert set(result.table()) == {"t_us", "envelope_mean", "envelope_stderr", "signal_mean", "signal_stderr"}


def test_protected_fid_keeps_coherence(caplog):
    cfg = FidConfig(protected=True, t_max=1.0, samples=200, output_points=20, gamma=0.0, seed=5)
    with caplog.at_level(logging.WARNING, logger="experiments"):
        result = run_fid(cfg, show_progress=False)
    assert result.summary["envelope_final"] > 0.99
    assert result.summary["t2_is_lower_bound"]
    assert any(r.levelno == logging.WARNING and "[WARN]" in r.getMessage() for r in caplog.records)


def test_protected_fid_over_ten_microseconds():
    base = dict(protected=True, t_max=10.0, tau=0.01, samples=200, output_points=20, seed=5)
    dephasing_only = run_fid(FidConfig(gamma=0.0, **base), show_progress=False)
    assert dephasing_only.summary["envelope_final"] >= 0.99
    relaxing = run_fid(FidConfig(gamma=1e-3, **base), show_progress=False)
    # the dressed qubit relaxes transversely at 1.25Γ
    assert relaxing.summary["envelope_final"] == pytest.approx(np.exp(-1.25e-3 * 10.0), abs=1e-3)


def test_noise_free_gate_tracks_reference():
    cfg = GateExpConfig(noise_kind="none", gamma=0.0, samples=2, output_points=10)
    result = run_gate_fidelity(cfg, show_progress=False)
    assert result.columns["mean"].min() > 1.0 - 1e-6
    assert result.summary["gate_time_us"] == pytest.approx(0.5)
    assert result.summary["geometric_phase"] == pytest.approx(np.pi / 4)


def test_protected_noise_free_gate_tracks_dressed_reference():
    cfg = GateExpConfig(noise_kind="none", gamma=0.0, samples=2, output_points=10, protected=True)
    result = run_gate_fidelity(cfg, show_progress=False)
    assert result.columns["mean"].min() > 1.0 - 1e-4


def test_dressing_raises_gate_fidelity_under_quasi_static_noise():
    common = dict(samples=200, output_points=5, seed=1, quasi_static=QuasiStaticGaussian(std_dev=SIGMA))
    bare = run_gate_fidelity(GateExpConfig(**common), show_progress=False)
    protected = run_gate_fidelity(GateExpConfig(protected=True, **common), show_progress=False)
    assert protected.summary["final_fidelity"] > bare.summary["final_fidelity"]
    assert protected.summary["final_fidelity"] > 0.99


@pytest.mark.parametrize("tau", [0.005, 0.0125, 0.025])
def test_dressing_wins_at_one_sigma_offset(tau):
    common = dict(samples=1, output_points=4, gamma=0.0, tau=tau,
                  quasi_static=QuasiStaticGaussian(std_dev=0.0, mean=SIGMA))
    bare = run_gate_fidelity(GateExpConfig(**common), show_progress=False)
    protected = run_gate_fidelity(GateExpConfig(protected=True, **common), show_progress=False)
    assert protected.summary["final_fidelity"] > bare.summary["final_fidelity"]


def test_default_gate_uses_lune_path():
    cfg = GateExpConfig(noise_kind="none", gamma=0.0, samples=1, output_points=4)
    result = run_gate_fidelity(cfg, show_progress=False)
    assert result.summary["periods"] == 40
    assert cfg.ou_std_dev == pytest.approx(1.5 * np.pi)


def test_gate_config_checks():
    with pytest.raises(ValidationError):
        GateExpConfig(protected=True, tau=0.03)
    with pytest.raises(ExperimentConfigError):
        run_gate_fidelity(GateExpConfig(total_time=0.6, noise_kind="none", samples=1), show_progress=False)


def test_explicit_path_is_used():
    path = synthesize_path((0.0, 1.0, 0.0), np.pi / 2, 2 * np.pi, 0.0125)
    cfg = GateExpConfig(path=path, total_time=path.total_time, noise_kind="none", gamma=0.0,
                        samples=1, output_points=4)
    result = run_gate_fidelity(cfg, show_progress=False)
    assert result.summary["periods"] == path.total_periods


def test_ou_study_runs_each_g():
    cfg = GateExpConfig(noise_kind="ou", protected=True, samples=20, output_points=4, seed=2)
    results = run_ou_study(cfg, g_values=(0.1, 0.5), show_progress=False)
    assert [r.summary["g"] for r in results] == pytest.approx([0.1, 0.5])
    assert results[0].summary["dt_us"] == results[1].summary["dt_us"]
    for result in results:
        assert 0.0 < result.summary["final_fidelity"] <= 1.0 + 1e-12


def test_two_qubit_block_structure():
    path = synthesize_two_qubit_path((1.0, 0.0, 0.0), np.pi / 2, 2 * np.pi, 0.0125)
    report = run_two_qubit_check(path)
    assert report["success"], report["error"]
    assert report["down_block_error"] < 1e-6
    assert report["leakage"] < 1e-6


def test_two_qubit_check_rejects_single_qubit_path():
    path = synthesize_path((1.0, 0.0, 0.0), np.pi / 2, 2 * np.pi, 0.0125)
    assert not run_two_qubit_check(path)["success"]


def test_dressed_two_qubit_block_structure():
    path = synthesize_two_qubit_path((1.0, 0.0, 0.0), np.pi / 2, 2 * np.pi, 0.0125)
    report = run_two_qubit_check(path, DressingSpec(n=1, tau=0.0125, target="electron-of-pair"))
    assert report["success"], report["error"]
    assert report["dressed"]
    assert report["up_block_error"] < 1e-6
