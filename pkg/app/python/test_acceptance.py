"""
Full-size acceptance runs. Slow: run with `pytest -m slow`.
"""

import numpy as np
import pytest

from experiments import FidConfig, GateExpConfig, run_fid, run_gate_fidelity, run_ou_study
from verification import InvariantSuite

pytestmark = pytest.mark.slow


def test_invariant_suite_passes():
    result = InvariantSuite(seed=0).run_all()
    failed = [c["name"] for c in result["checks"] if not c["success"]]
    assert result["success"], f"failed checks: {failed}"


def test_unprotected_fid_t2():
    result = run_fid(FidConfig(), show_progress=False)
    assert result.summary["t2_us"] == pytest.approx(1.73, abs=0.05)


def test_protected_fid_short_run():
    dephasing_only = run_fid(FidConfig(protected=True, t_max=10.0, gamma=0.0), show_progress=False)
    assert dephasing_only.summary["envelope_final"] >= 0.99
    relaxing = run_fid(FidConfig(protected=True, t_max=10.0), show_progress=False)
    assert relaxing.summary["envelope_final"] == pytest.approx(np.exp(-1.25e-3 * 10.0), abs=1e-3)


def test_protected_fid_reaches_relaxation_limit():
    result = run_fid(FidConfig(protected=True, t_max=1000.0), show_progress=False)
    assert 500.0 <= result.summary["t2_us"] <= 1500.0
    assert 0.2 < result.summary["envelope_final"] < 0.5


def test_x_gate_under_quasi_static_noise():
    bare = run_gate_fidelity(GateExpConfig(), show_progress=False)
    protected = run_gate_fidelity(GateExpConfig(protected=True), show_progress=False)
    assert bare.summary["final_fidelity"] == pytest.approx(0.9873, abs=0.003)
    assert protected.summary["final_fidelity"] == pytest.approx(0.9997, abs=0.0005)
    assert np.all(protected.columns["mean"] > 0.998)


def test_x_gate_under_ou_noise():
    results = run_ou_study(GateExpConfig(noise_kind="ou", protected=True, samples=500), show_progress=False)
    finals = [r.summary["final_fidelity"] for r in results]
    assert finals[0] == pytest.approx(0.9997, abs=0.0005)
    assert finals[1] == pytest.approx(0.9991, abs=0.001)
    assert finals[2] == pytest.approx(0.9861, abs=0.005)
    assert finals[0] > finals[1] > finals[2]
