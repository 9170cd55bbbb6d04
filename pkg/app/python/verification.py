"""
Invariant suite behind `cpgate verify`.
Runs every structural and numerical check in order, recording a step log with
timings, and reports a pass/fail table. Each check returns a result dict
{"name", "success", "value", "threshold", "detail"}.
"""

import logging
import time
from functools import partial
from typing import Callable, Dict, List

import numpy as np

from dynamics import (
    HamiltonianSchedule,
    LindbladSpec,
    PropagationGrid,
    lindblad_evolve,
    magnus_first_order,
    magnus_residual,
    path_schedule,
    propagate_unitary,
    rotating_frame,
    toy_bath_factorization,
)
from experiments import (
    FidConfig,
    _fid_chunk,
    mean_and_stderr,
    run_fid,
    run_monte_carlo,
    run_two_qubit_check,
    stderr_scaling,
)
from gate_design import (
    BathCoupling,
    DressingSpec,
    decoupling_integral,
    dressing_operator,
    dynamical_phase_residual,
    geometric_phase,
    geometric_phase_quadrature,
    ideal_gate,
    synthesize_path,
    target_gate,
)
from linalg_core import (
    KET_0,
    KET_PLUS,
    SIGMA_X,
    SIGMA_Y,
    density_from_state,
    hermitian_exp,
    operator_distance,
)
from noise_models import OUParams, PATH_STREAM, ensemble_autocorrelation, ou_trajectory_batch, realization_rng

logger = logging.getLogger(__name__)

X_GATE_AXIS = (1.0, 0.0, 0.0)
X_GATE_ANGLE = np.pi / 4
RABI = 2 * np.pi
# ramps of 0.12 μs and a 0.24 μs sweep: whole periods for τ = 0.02, 0.01, 0.005 μs
SCALING_RABI = np.pi / 0.48
SCALING_TAUS = (0.02, 0.01, 0.005)
MAGNUS_TAUS = (0.02, 0.01, 0.005, 0.0025)


def _check(name: str, value: float, threshold: float, passed: bool, detail: str = "") -> Dict:
    return {"name": name, "success": bool(passed), "value": float(value), "threshold": float(threshold),
            "detail": detail}


def random_paths(seed: int, count: int, tau: float = 0.0125) -> List:
    """Synthesized paths for random axes, angles and Rabi rates; odd indices use the lune choreography."""
    paths = []
    for i in range(count):
        rng = realization_rng(seed, PATH_STREAM, i)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(-np.pi, np.pi)
        omega = rng.uniform(np.pi, 4 * np.pi)
        paths.append(synthesize_path(axis, angle, omega, tau, choreography="lune" if i % 2 else "slice"))
    return paths


class InvariantSuite:
    def __init__(self, seed: int = 0, random_path_count: int = 20, samples: int = 400,
                 show_progress: bool = False):
        """
        Initialize the suite.

        Args:
            seed: master seed for random paths and Monte-Carlo checks
            random_path_count: number of random synthesized paths
            samples: Monte-Carlo size of the quick statistical checks
            show_progress: show tqdm bars of the Monte-Carlo checks
        """
        self.seed = seed
        self.random_path_count = random_path_count
        self.samples = samples
        self.show_progress = show_progress
        self.execution_log: List[str] = []
        self.results: List[Dict] = []

    def steps(self) -> List[Callable[[], List[Dict]]]:
        return [
            self.check_exponentials,
            self.check_dressing,
            self.check_paths,
            self.check_noise_free_gates,
            self.check_master_equation,
            self.check_noise_models,
            self.check_magnus,
            self.check_toy_bath,
            self.check_two_qubit,
            self.check_monte_carlo,
        ]

    def run_all(self) -> Dict:
        """
        Run every step; a step that raises is recorded as a failure.

        Returns:
            {"success": bool, "checks": [...], "execution_log": [...]}
        """
        self.execution_log = []
        self.results = []
        for number, step in enumerate(self.steps(), start=1):
            title = step.__doc__.strip().splitlines()[0] if step.__doc__ else step.__name__
            self.execution_log.append("=" * 60)
            self.execution_log.append(f"STEP {number}: {title}")
            self.execution_log.append("=" * 60)
            started = time.time()
            try:
                checks = step()
            except Exception as e:
                logger.exception(f"[FAIL] step {step.__name__} raised")
                checks = [_check(step.__name__, float("nan"), float("nan"), False, f"{type(e).__name__}: {e}")]
            for check in checks:
                marker = "[OK]" if check["success"] else "[FAIL]"
                self.execution_log.append(f"{marker} {check['name']}: {check['value']:.3e} "
                                          f"(threshold {check['threshold']:.3e}) {check['detail']}".rstrip())
            self.execution_log.append(f"Step {number} completed in {time.time() - started:.2f}s")
            self.results.extend(checks)
        success = all(c["success"] for c in self.results)
        failed = sum(not c["success"] for c in self.results)
        summary = f"verify: {len(self.results) - failed} passed, {failed} failed"
        if success:
            logger.info(f"[OK] {summary}")
        else:
            logger.error(f"[FAIL] {summary}")
        return {"success": success, "checks": self.results, "execution_log": self.execution_log,
                "error": None if success else f"{failed} check(s) failed"}

    def check_exponentials(self) -> List[Dict]:
        """Hermitian exponentials and piecewise products"""
        u = hermitian_exp(RABI * np.array(SIGMA_X), np.pi / (2 * RABI))
        quarter = float(np.linalg.norm(u + 1j * np.array(SIGMA_X)))
        ops = [RABI * np.array(SIGMA_X), RABI * np.array(SIGMA_Y)]
        schedule = HamiltonianSchedule.piecewise_constant(ops, [0.1, 0.2])
        exact = hermitian_exp(ops[1], 0.2) @ hermitian_exp(ops[0], 0.1)
        coarse = propagate_unitary(schedule, PropagationGrid(dt=0.05))
        fine = propagate_unitary(schedule, PropagationGrid(dt=0.001))
        piecewise = max(float(np.linalg.norm(coarse - exact)), float(np.linalg.norm(fine - exact)))
        return [
            _check("exp(-iπσx/2) = -iσx", quarter, 1e-10, quarter < 1e-10),
            _check("piecewise product dt-independent", piecewise, 1e-10, piecewise < 1e-10),
        ]

    def check_dressing(self) -> List[Dict]:
        """Dressing periodicity and decoupling integrals"""
        checks = []
        for target in ("one-qubit", "electron-of-pair"):
            worst_period, worst_integral = 0.0, 0.0
            for n in range(1, 5):
                dressing = DressingSpec(n=n, tau=0.0125, target=target)
                eye = np.eye(dressing.dim)
                for m in range(1, 6):
                    v = dressing_operator(dressing, m * dressing.tau)
                    worst_period = max(worst_period, float(np.linalg.norm(v - eye)))
                coupling = BathCoupling(pair=target == "electron-of-pair")
                integral = decoupling_integral(dressing, coupling)
                worst_integral = max(worst_integral, float(np.linalg.norm(integral.quadrature)),
                                     float(np.linalg.norm(integral.closed_form)))
            checks.append(_check(f"V(mτ) = I ({target})", worst_period, 1e-12, worst_period < 1e-12))
            checks.append(_check(f"decoupling integral n=1..4 ({target})", worst_integral, 1e-10,
                                 worst_integral < 1e-10))
        return checks

    def check_paths(self) -> List[Dict]:
        """Dynamical phase, geometric phase and closure on synthesized paths"""
        paths = random_paths(self.seed, self.random_path_count)
        residual, quadrature = 0.0, 0.0
        for path in paths:
            times = np.linspace(0.0, path.total_time, 201)
            residual = max(residual, dynamical_phase_residual(path, times))
            gamma, _ = geometric_phase(path)
            quadrature = max(quadrature, abs(geometric_phase_quadrature(path) - gamma))
        x_gate = synthesize_path(X_GATE_AXIS, X_GATE_ANGLE, RABI, 0.0125)
        return [
            _check("dynamical phase residual", residual, 1e-12, residual < 1e-12),
            _check("geometric phase vs quadrature", quadrature, 1e-8, quadrature < 1e-8),
            _check("π/4 x-gate time (μs)", x_gate.total_time, 0.5, abs(x_gate.total_time - 0.5) < 1e-12),
        ]

    def check_noise_free_gates(self) -> List[Dict]:
        """Propagated bare and dressed gates against the closed form"""
        worst_bare, worst_dressed, worst_target = 0.0, 0.0, 0.0
        for path in random_paths(self.seed, self.random_path_count):
            ideal = ideal_gate(path)
            bare = propagate_unitary(path_schedule(path), PropagationGrid(dt=path.tau / 2000.0))
            dressed = propagate_unitary(path_schedule(path, DressingSpec(n=1, tau=path.tau)),
                                        PropagationGrid.for_check(path.tau))
            worst_bare = max(worst_bare, operator_distance(bare, ideal).phase_insensitive)
            worst_dressed = max(worst_dressed, operator_distance(dressed, ideal).phase_insensitive)
            worst_target = max(worst_target, operator_distance(ideal, target_gate(path)).phase_insensitive)
        return [
            _check("bare gate vs closed form", worst_bare, 1e-6, worst_bare < 1e-6),
            _check("dressed gate vs closed form", worst_dressed, 1e-6, worst_dressed < 1e-6),
            _check("closed form vs target gate", worst_target, 1e-10, worst_target < 1e-10),
        ]

    def check_master_equation(self) -> List[Dict]:
        """Master equation oracles and trace preservation"""
        gamma = 1e-3
        total = 1000.0
        empty = HamiltonianSchedule.constant(np.zeros((2, 2)), total)
        grid = PropagationGrid(dt=1.0)
        checks = []
        for method in ("rk4", "split"):
            _, ground = lindblad_evolve(empty, LindbladSpec(gamma=gamma), grid, density_from_state(KET_0), method=method)
            _, plus = lindblad_evolve(empty, LindbladSpec(gamma=gamma), grid, density_from_state(KET_PLUS),
                                      method=method)
            p0_error = abs(ground[-1][0, 0].real - 0.5 * (1 + np.exp(-2 * gamma * total)))
            coherence_error = abs(abs(plus[-1][0, 1]) - 0.5 * np.exp(-gamma * total))
            drift = max(abs(np.trace(ground[-1]) - 1.0), abs(np.trace(plus[-1]) - 1.0))
            checks.append(_check(f"p0 relaxation oracle ({method})", p0_error, 1e-9, p0_error < 1e-9))
            checks.append(_check(f"coherence decay oracle ({method})", coherence_error, 1e-9, coherence_error < 1e-9))
            checks.append(_check(f"trace drift over 1 ms ({method})", drift, 1e-9, drift < 1e-9))

        path = synthesize_path(X_GATE_AXIS, X_GATE_ANGLE, RABI, 0.0125)
        schedule = path_schedule(path)
        fine = PropagationGrid(dt=5e-4)
        rho0 = density_from_state(KET_PLUS)
        _, rho = lindblad_evolve(schedule, LindbladSpec(gamma=0.0), fine, rho0, method="rk4")
        u = propagate_unitary(schedule, fine)
        unitary_gap = float(np.linalg.norm(rho[-1] - u @ rho0 @ u.conj().T))
        checks.append(_check("Γ=0 matches unitary conjugation", unitary_gap, 1e-9, unitary_gap < 1e-9))
        return checks

    def check_noise_models(self) -> List[Dict]:
        """Ornstein-Uhlenbeck statistics"""
        params = OUParams(std_dev=1.5, correlation_time=0.25, dt=2.5e-3, seed=self.seed)
        values = ou_trajectory_batch(params, 2.5, range(4000))
        variance = ensemble_autocorrelation(values, 0, mean=0.0) / params.std_dev ** 2
        lag = int(round(params.correlation_time / params.dt))
        correlation = ensemble_autocorrelation(values, lag, mean=0.0) / params.std_dev ** 2
        return [
            _check("OU stationary variance / σ²", variance, 1.0, abs(variance - 1.0) < 0.05),
            _check("OU autocorrelation at τ_e / σ²", correlation, np.exp(-1), abs(correlation - np.exp(-1)) < 0.03),
        ]

    def check_magnus(self) -> List[Dict]:
        """First-order Magnus average and its residual scaling"""
        ramp = HamiltonianSchedule.constant(RABI * np.array(SIGMA_Y), 0.02)
        coupling = BathCoupling()
        averages, residuals = [], []
        for tau in MAGNUS_TAUS:
            rotating = rotating_frame(ramp, DressingSpec(n=1, tau=tau), coupling)
            average = magnus_first_order(rotating, (0.0, tau), tau, noise_value=1.5)
            averages.append(float(np.linalg.norm(average - RABI * np.array(SIGMA_Y))))
            residuals.append(magnus_residual(rotating, (0.0, tau), tau, PropagationGrid(dt=tau / 2000.0),
                                             noise_value=1.5))
        slope, _ = np.polyfit(np.log(MAGNUS_TAUS), np.log(residuals), 1)
        return [
            _check("period average removes the bath term", max(averages), 1e-9, max(averages) < 1e-9),
            _check("Magnus residual exponent", slope, 2.0, abs(slope - 2.0) <= 0.3),
        ]

    def check_toy_bath(self) -> List[Dict]:
        """Toy spin bath: factorization, purity ordering and τ scaling"""
        tau = 0.005
        path = synthesize_path(X_GATE_AXIS, X_GATE_ANGLE, RABI, tau)
        dressing = DressingSpec(n=1, tau=tau)
        grid = PropagationGrid(dt=tau / 2000.0)
        free = toy_bath_factorization(path, dressing, BathCoupling(bath="toy-spin", bath_frequency=0.1), grid)
        coupled = BathCoupling(bath="toy-spin", coupling_strength=0.4, bath_frequency=0.1)
        protected = toy_bath_factorization(path, dressing, coupled, PropagationGrid(dt=tau / 200.0))
        bare = toy_bath_factorization(path, None, coupled, PropagationGrid(dt=path.total_time / 4000.0))

        errors = []
        for scaling_tau in SCALING_TAUS:
            scaling_path = synthesize_path(X_GATE_AXIS, X_GATE_ANGLE, SCALING_RABI, scaling_tau)
            report = toy_bath_factorization(scaling_path, DressingSpec(n=1, tau=scaling_tau), coupled,
                                            PropagationGrid(dt=scaling_tau / 200.0))
            errors.append(report.factorization_error)
        slope, _ = np.polyfit(np.log(SCALING_TAUS), np.log(errors), 1)
        monotone = all(b < a for a, b in zip(errors, errors[1:]))
        return [
            _check("λ=0 purity", free.purity, 1.0, abs(free.purity - 1.0) < 1e-10),
            _check("λ=0 factorization error", free.factorization_error, 1e-6, free.factorization_error < 1e-6),
            _check("protected purity", protected.purity, 0.999, protected.purity > 0.999),
            _check("bare purity below protected", bare.purity, protected.purity, bare.purity < protected.purity),
            _check("protected error decreases with τ (log-log slope)", slope, 0.9, monotone and slope >= 0.9,
                   detail=f"errors={['%.3e' % e for e in errors]}"),
        ]

    def check_two_qubit(self) -> List[Dict]:
        """Controlled-NOT and controlled-phase special cases"""
        checks = []
        cases = {"controlled-NOT": ((1.0, 0.0, 0.0), np.pi / 2), "controlled-phase": ((0.0, 0.0, 1.0), np.pi)}
        for name, (axis, angle) in cases.items():
            path = synthesize_path(axis, angle, RABI, 0.0125, qubits=2)
            report = run_two_qubit_check(path, DressingSpec(n=1, tau=0.0125, target="electron-of-pair"))
            checks.append(_check(f"{name} block structure", report["distance_to_ideal"], 1e-6, report["success"],
                                 detail=report["error"] or ""))
        return checks

    def check_monte_carlo(self) -> List[Dict]:
        """Monte-Carlo determinism, standard errors and the FID oracle"""
        cfg = FidConfig(samples=max(self.samples, 1000), seed=self.seed, t_max=2.0, output_points=20)
        chunk = partial(_fid_chunk, cfg)
        serial = run_monte_carlo(chunk, cfg.samples, workers=1, show_progress=False)
        parallel = run_monte_carlo(chunk, cfg.samples, workers=2, show_progress=False)
        identical = bool(np.array_equal(serial, parallel))

        sizes = (250, 1000, 4000)
        stderrs = []
        for size in sizes:
            values = run_monte_carlo(chunk, size, show_progress=False)
            _, stderr = mean_and_stderr(2.0 * np.real(values[:, 10]))
            stderrs.append(float(stderr))
        exponent = stderr_scaling(sizes, stderrs)

        fid = run_fid(FidConfig(seed=self.seed), show_progress=self.show_progress)
        t2 = fid.summary["t2_us"]
        times = fid.axis
        oracle = np.exp(-2 * (0.13 * np.pi) ** 2 * times ** 2 - 1e-3 * times)
        visible = oracle >= 0.05
        deviation = np.abs(fid.columns["envelope_mean"] - oracle)[visible] / np.maximum(
            fid.columns["envelope_stderr"][visible], 1e-12)
        return [
            _check("serial and parallel runs identical", float(identical), 1.0, identical),
            _check("stderr exponent in N", exponent, -0.5, abs(exponent + 0.5) <= 0.1),
            _check("unprotected FID T2 (μs)", t2, 1.0 / (np.sqrt(2) * 0.13 * np.pi), abs(t2 - 1.73) <= 0.05),
            _check("FID envelope vs Gaussian oracle (stderr units)", float(deviation.max()), 4.0,
                   float(deviation.max()) <= 4.0),
        ]


def format_table(result: Dict) -> str:
    """Pass/fail table for the terminal."""
    width = max(len(c["name"]) for c in result["checks"]) if result["checks"] else 10
    lines = [f"{'check'.ljust(width)}  status  value        threshold"]
    for c in result["checks"]:
        status = "PASS" if c["success"] else "FAIL"
        lines.append(f"{c['name'].ljust(width)}  {status:6}  {c['value']:<11.4e}  {c['threshold']:.4e}")
    lines.append(f"{'overall'.ljust(width)}  {'PASS' if result['success'] else 'FAIL'}")
    return "\n".join(lines)
