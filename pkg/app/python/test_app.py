"""
Command-line tests: artifacts, exit codes and reproducibility.
"""

import json
import os

import pandas as pd
import pytest
from click.testing import CliRunner

import app
from app import cli, parse_axis
from config import ENV_LOG_LEVEL, ENV_OUTPUT_DIR, ENV_WORKERS
from dynamics import TraceDriftError


@pytest.fixture
def runner(monkeypatch, tmp_path):
    monkeypatch.delenv(ENV_OUTPUT_DIR, raising=False)
    monkeypatch.delenv(ENV_WORKERS, raising=False)
    monkeypatch.chdir(tmp_path)
    return CliRunner()


def read_json(path):
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def test_parse_axis():
    assert parse_axis("y") == (0.0, 1.0, 0.0)
    assert parse_axis("0.6,0,0.8") == (0.6, 0.0, 0.8)
    assert parse_axis(None) is None


def test_gate_writes_curve_and_summary(runner, tmp_path):
    out = tmp_path / "gate"
    result = runner.invoke(cli, ["gate", "--no-protected", "--samples", "4", "--out", str(out)])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out / "gate_fidelity.csv")
    assert list(frame.columns) == ["t_over_T", "mean", "stderr"]
    assert frame["t_over_T"].iloc[-1] == pytest.approx(1.0)
    summary = read_json(out / "summary.json")
    assert 0.0 < summary["final_fidelity"] <= 1.0
    assert summary["config"]["params"]["samples"] == 4
    assert "runtime_s" not in summary


def test_same_config_gives_identical_bytes(runner, tmp_path):
    out = tmp_path / "repeat"
    args = ["fid", "--samples", "200", "--t-max", "2", "--seed", "4", "--out", str(out)]
    assert runner.invoke(cli, args).exit_code == 0
    first = {name: (out / name).read_bytes() for name in ("fid.csv", "summary.json")}
    assert runner.invoke(cli, args).exit_code == 0
    for name, content in first.items():
        assert (out / name).read_bytes() == content


def test_record_runtime_flag(runner, tmp_path):
    out = tmp_path / "timed"
    result = runner.invoke(cli, ["fid", "--samples", "100", "--t-max", "1", "--record-runtime", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert read_json(out / "summary.json")["runtime_s"] >= 0.0


def test_synth_validates_path(runner, tmp_path):
    out = tmp_path / "synth"
    result = runner.invoke(cli, ["synth", "--axis", "y", "--angle", "1.0", "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = read_json(out / "path.json")
    assert report["validation"]["passed"]
    assert report["validation"]["closed_form_vs_target"] < 1e-10
    assert report["path"]["target_angle"] == 1.0
    assert report["segments"][0]["kind"] == "theta-ramp"


def test_synth_lune_choreography(runner, tmp_path):
    out = tmp_path / "synth-lune"
    result = runner.invoke(cli, ["synth", "--axis", "y", "--angle", "1.0", "--choreography", "lune",
                                 "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = read_json(out / "path.json")
    assert report["validation"]["passed"]
    kinds = [row["kind"] for row in report["segments"]]
    assert kinds == ["theta-ramp", "pole-jump", "theta-ramp", "pole-jump", "theta-ramp"]
    assert report["segments"][1]["theta_start"] == pytest.approx(0.0, abs=1e-12)


def test_two_qubit_report(runner, tmp_path):
    out = tmp_path / "cnot"
    result = runner.invoke(cli, ["two-qubit", "--no-protected", "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = read_json(out / "two_qubit.json")["report"]
    assert report["success"]
    assert report["leakage"] < 1e-6
    assert 0.0 < report["purity_bare"] <= 1.0


def test_two_qubit_default_is_dressed(runner, tmp_path):
    out = tmp_path / "cnot-dressed"
    result = runner.invoke(cli, ["two-qubit", "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = read_json(out / "two_qubit.json")["report"]
    assert report["success"]
    assert report["dressed"]
    assert report["purity_protected"] >= report["purity_bare"]


def test_malformed_config_exits_with_usage_error(runner, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"kind": "gate", "params": ')
    result = runner.invoke(cli, ["gate", "--config", str(path)])
    assert result.exit_code == 2
    assert "Configuration error" in result.output


def test_invalid_option_value_exits_with_usage_error(runner):
    result = runner.invoke(cli, ["fid", "--samples", "5"])
    assert result.exit_code == 2
    assert "samples" in result.output


def test_synthesis_failure_exits_nonzero(runner, tmp_path):
    result = runner.invoke(cli, ["synth", "--axis", "1,1,0", "--out", str(tmp_path / "bad")])
    assert result.exit_code == 1
    assert "not a unit vector" in result.output


def test_trace_drift_exits_nonzero(runner, tmp_path, monkeypatch):
    def drifting(cfg, store):
        raise TraceDriftError(0.25, 3e-6)

    monkeypatch.setitem(app.COMMANDS, "gate", drifting)
    result = runner.invoke(cli, ["gate", "--samples", "4", "--out", str(tmp_path / "drift")])
    assert result.exit_code == 1
    assert "trace drift" in result.output


def test_log_level_comes_from_dotenv(runner, tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_LOG_LEVEL, "placeholder")
    monkeypatch.delenv(ENV_LOG_LEVEL)
    (tmp_path / ".env").write_text(f"{ENV_LOG_LEVEL}=DEBUG\n")
    seen = []
    monkeypatch.setattr(app, "configure_logging", lambda level: seen.append(os.getenv(ENV_LOG_LEVEL)))
    result = runner.invoke(cli, ["fid", "--help"])
    assert result.exit_code == 0
    assert seen == ["DEBUG"]
