"""
Main command-line application for cpgate.
Parses run configurations, dispatches the requested study, and writes the CSV
curves and JSON summaries that form each run's output.

    python app/python/app.py gate --protected --tau 0.0125 --out results/x-gate
    python app/python/app.py verify
"""

import logging
import os
import sys
import time
from typing import Any, Dict, Optional

import click
import numpy as np
from dotenv import find_dotenv, load_dotenv

from config import ENV_LOG_LEVEL, LONG_FID_T_MAX, ConfigError, RunConfig, parse_config
from dynamics import PropagationGrid, TraceDriftError, path_schedule, propagate_unitary
from experiments import run_fid, run_gate_fidelity, run_ou_study, run_two_qubit_check
from gate_design import (
    BathCoupling,
    DressingSpec,
    GateSynthesisError,
    dynamical_phase_residual,
    geometric_phase,
    geometric_phase_quadrature,
    ideal_gate,
    synthesize_path,
    target_gate,
)
from linalg_core import operator_distance
from results_store import ResultsStore
from verification import InvariantSuite, format_table

logger = logging.getLogger(__name__)

AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
CHOREOGRAPHY = click.Choice(["slice", "lune"])


def configure_logging(level: Optional[str]) -> None:
    level = (level or os.getenv(ENV_LOG_LEVEL) or "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def parse_axis(text: Optional[str]):
    """'x', 'y', 'z' or three comma-separated components."""
    if text is None:
        return None
    if text.lower() in AXES:
        return AXES[text.lower()]
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError as e:
        raise click.BadParameter(f"axis must be x, y, z or 'a,b,c', got {text!r}") from e
    if len(parts) != 3:
        raise click.BadParameter(f"axis needs three components, got {len(parts)}")
    return parts


def _summary(cfg: RunConfig, extra: Dict[str, Any]) -> Dict[str, Any]:
    return {"kind": cfg.kind, "seed": cfg.seed, "config": cfg.model_dump(mode="json"), **extra}


def run_fid_command(cfg: RunConfig, store: ResultsStore) -> Dict[str, Any]:
    result = run_fid(cfg.params, workers=cfg.workers)
    store.save_csv("fid.csv", result.table())
    return {"success": True, "summary": _summary(cfg, result.summary)}


def run_gate_command(cfg: RunConfig, store: ResultsStore) -> Dict[str, Any]:
    result = run_gate_fidelity(cfg.params, workers=cfg.workers)
    store.save_csv("gate_fidelity.csv", result.table())
    return {"success": True, "summary": _summary(cfg, result.summary)}


def run_ou_command(cfg: RunConfig, store: ResultsStore) -> Dict[str, Any]:
    params = cfg.params
    results = run_ou_study(params.gate_config(), params.g_values, workers=cfg.workers)
    finals = {}
    for g, result in zip(params.g_values, results):
        store.save_csv(f"ou_g{g:g}.csv", result.table())
        finals[f"{g:g}"] = {"final_fidelity": result.summary["final_fidelity"],
                            "final_fidelity_stderr": result.summary["final_fidelity_stderr"],
                            "tau_us": result.config["tau"]}
    values = [r.summary["final_fidelity"] for r in results]
    monotone = all(b < a for a, b in zip(values, values[1:]))
    return {"success": True, "summary": _summary(cfg, {"final_fidelity_by_g": finals,
                                                        "monotone_in_g": monotone})}


def run_two_qubit_command(cfg: RunConfig, store: ResultsStore) -> Dict[str, Any]:
    p = cfg.params
    path = synthesize_path(p.axis, p.angle, p.omega, p.tau, qubits=2, choreography=p.choreography)
    dressing = DressingSpec(n=p.n, tau=p.tau, target="electron-of-pair") if p.protected else None
    coupling = BathCoupling(bath="toy-spin", pair=True, coupling_strength=p.coupling_strength,
                            bath_frequency=p.bath_frequency)
    report = run_two_qubit_check(path, dressing, PropagationGrid(dt=p.tau / p.steps_per_period), coupling)
    store.save_json("two_qubit.json", _summary(cfg, {"report": report, "path": path}))
    return {"success": report["success"], "error": report["error"]}


def run_synth_command(cfg: RunConfig, store: ResultsStore) -> Dict[str, Any]:
    p = cfg.params
    path = synthesize_path(p.axis, p.angle, p.omega, p.tau, qubits=p.qubits, sweep_rate=p.sweep_rate,
                           choreography=p.choreography)
    grid = PropagationGrid(dt=p.tau / p.check_steps_per_period)
    ideal = ideal_gate(path)
    target = "one-qubit" if p.qubits == 1 else "electron-of-pair"
    bare = propagate_unitary(path_schedule(path), grid)
    dressed = propagate_unitary(path_schedule(path, DressingSpec(n=1, tau=p.tau, target=target)), grid)
    gamma, chi = geometric_phase(path)
    validation = {
        "geometric_phase": gamma,
        "closure_phase": chi,
        "geometric_phase_quadrature": geometric_phase_quadrature(path),
        "dynamical_phase_residual": dynamical_phase_residual(path, np.linspace(0, path.total_time, 201)),
        "closed_form_vs_target": operator_distance(ideal, target_gate(path)).phase_insensitive,
        "bare_propagation_vs_closed_form": operator_distance(bare, ideal).phase_insensitive,
        "dressed_propagation_vs_closed_form": operator_distance(dressed, ideal).phase_insensitive,
        "check_dt_us": grid.dt,
    }
    ok = max(validation["bare_propagation_vs_closed_form"], validation["dressed_propagation_vs_closed_form"]) < 1e-6
    validation["passed"] = ok
    store.save_json("path.json", {"path": path.model_dump(mode="json"), "segments": path.segment_table(),
                                  "total_time_us": path.total_time, "periods": path.total_periods,
                                  "validation": validation})
    return {"success": ok, "error": None if ok else "propagated gate deviates from the closed form"}


def run_verify_command(cfg: RunConfig, store: ResultsStore) -> Dict[str, Any]:
    p = cfg.params
    suite = InvariantSuite(seed=p.seed, random_path_count=p.random_paths, samples=p.samples)
    result = suite.run_all()
    click.echo(format_table(result))
    store.save_json("verify.json", {"success": result["success"], "checks": result["checks"]})
    return {"success": result["success"], "error": result["error"]}


COMMANDS = {
    "fid": run_fid_command,
    "gate": run_gate_command,
    "ou": run_ou_command,
    "two-qubit": run_two_qubit_command,
    "synth": run_synth_command,
    "verify": run_verify_command,
}


def dispatch(cfg: RunConfig) -> Dict[str, Any]:
    """
    Run one configured command and write its artifacts.

    Returns:
        {"success": bool, "error": str | None, "artifacts": [paths]}
    """
    store = ResultsStore(cfg.output_dir)
    store.init_dir()
    started = time.time()
    try:
        outcome = COMMANDS[cfg.kind](cfg, store)
    except (GateSynthesisError, ValueError) as e:
        logger.error(f"[FAIL] {cfg.kind}: {e}")
        return {"success": False, "error": str(e), "artifacts": store.get_artifacts()}
    except TraceDriftError as e:
        logger.error(f"[FAIL] {cfg.kind}: {e}")
        return {"success": False, "error": str(e), "artifacts": store.get_artifacts()}
    except OSError as e:
        logger.error(f"[FAIL] {cfg.kind}: cannot write results: {e}")
        return {"success": False, "error": str(e), "artifacts": store.get_artifacts()}
    runtime = time.time() - started
    logger.info(f"{cfg.kind} finished in {runtime:.2f}s")

    if "summary" in outcome:
        summary = outcome["summary"]
        if cfg.record_runtime:
            summary["runtime_s"] = runtime
        store.save_json("summary.json", summary)
    return {"success": outcome["success"], "error": outcome.get("error"), "artifacts": store.get_artifacts()}


def common_options(func):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON run file"),
        click.option("--out", "output_dir", help="output directory (env CPGATE_OUTPUT_DIR)"),
        click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="master seed"),
        click.option("--workers", type=click.IntRange(1), help="worker processes (env CPGATE_WORKERS)"),
        click.option("--record-runtime", is_flag=True, default=None, help="write runtime_s into summary.json"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def run_command(kind: str, config_path, flags: Dict[str, Any]) -> None:
    try:
        cfg = parse_config(kind, config_path, flags)
    except ConfigError as e:
        click.echo(f"Configuration error: {e}", err=True)
        sys.exit(2)
    result = dispatch(cfg)
    for artifact in result["artifacts"]:
        click.echo(artifact)
    if not result["success"]:
        click.echo(f"Error: {result['error']}", err=True)
        sys.exit(1)


@click.group()
@click.option("--log-level", help="DEBUG, INFO, WARNING (env CPGATE_LOG_LEVEL)")
def cli(log_level):
    """Coherence-protected nonadiabatic geometric gate simulator."""
    load_dotenv(find_dotenv(usecwd=True))
    configure_logging(log_level)


@cli.command()
@common_options
@click.option("--samples", type=int, help="noise realizations")
@click.option("--tau", type=float, help="dressing period in μs")
@click.option("--protected/--no-protected", default=None)
@click.option("--t-max", type=float, help="length of the decay in μs")
@click.option("--long", "long_run", is_flag=True, help="1 ms protected run")
def fid(config_path, output_dir, seed, workers, record_runtime, samples, tau, protected, t_max, long_run):
    """Free induction decay, with or without the dressing."""
    if long_run:
        protected = True if protected is None else protected
        t_max = t_max or LONG_FID_T_MAX
    run_command("fid", config_path, dict(output_dir=output_dir, seed=seed, workers=workers,
                                         record_runtime=record_runtime, samples=samples, tau=tau,
                                         protected=protected, t_max=t_max))


@cli.command()
@common_options
@click.option("--samples", type=int, help="noise realizations")
@click.option("--tau", type=float, help="dressing period in μs")
@click.option("--protected/--no-protected", default=None)
@click.option("--choreography", type=CHOREOGRAPHY, help="loop shape (default lune)")
def gate(config_path, output_dir, seed, workers, record_runtime, samples, tau, protected, choreography):
    """Gate fidelity under quasi-static noise."""
    run_command("gate", config_path, dict(output_dir=output_dir, seed=seed, workers=workers,
                                          record_runtime=record_runtime, samples=samples, tau=tau,
                                          protected=protected, choreography=choreography))


@cli.command()
@common_options
@click.option("--samples", type=int, help="noise realizations per g")
def ou(config_path, output_dir, seed, workers, record_runtime, samples):
    """Protected gate fidelity under Ornstein-Uhlenbeck noise for each g = τ/τ_e."""
    run_command("ou", config_path, dict(output_dir=output_dir, seed=seed, workers=workers,
                                        record_runtime=record_runtime, samples=samples))


@cli.command(name="two-qubit")
@common_options
@click.option("--axis", help="x, y, z or 'a,b,c'")
@click.option("--angle", type=float, help="γ in rad")
@click.option("--tau", type=float, help="dressing period in μs")
@click.option("--protected/--no-protected", default=None)
@click.option("--choreography", type=CHOREOGRAPHY, help="loop shape (default slice)")
def two_qubit(config_path, output_dir, seed, workers, record_runtime, axis, angle, tau, protected, choreography):
    """Controlled geometric gate on the electron-nuclear pair."""
    run_command("two-qubit", config_path, dict(output_dir=output_dir, seed=seed, workers=workers,
                                               record_runtime=record_runtime, axis=parse_axis(axis),
                                               angle=angle, tau=tau, protected=protected,
                                               choreography=choreography))


@cli.command()
@common_options
@click.option("--axis", help="x, y, z or 'a,b,c'")
@click.option("--angle", type=float, help="γ in rad")
@click.option("--omega", type=float, help="Rabi rate in rad/μs")
@click.option("--tau", type=float, help="dressing period in μs")
@click.option("--choreography", type=CHOREOGRAPHY, help="loop shape (default slice)")
def synth(config_path, output_dir, seed, workers, record_runtime, axis, angle, omega, tau, choreography):
    """Synthesize a loop path for e^{-iγ n·σ} and validate it by propagation."""
    run_command("synth", config_path, dict(output_dir=output_dir, seed=seed, workers=workers,
                                           record_runtime=record_runtime, axis=parse_axis(axis),
                                           angle=angle, omega=omega, tau=tau, choreography=choreography))


@cli.command()
@common_options
@click.option("--samples", type=int, help="Monte-Carlo size of the statistical checks")
def verify(config_path, output_dir, seed, workers, record_runtime, samples):
    """Run the full invariant suite; exits nonzero on any failure."""
    run_command("verify", config_path, dict(output_dir=output_dir, seed=seed, workers=workers,
                                            record_runtime=record_runtime, samples=samples))


if __name__ == "__main__":
    cli(prog_name="cpgate")
