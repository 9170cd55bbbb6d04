"""
Tests for run-file parsing, environment defaults and flag precedence.
"""

import json

import pytest

from config import (
    ENV_OUTPUT_DIR,
    ENV_WORKERS,
    LONG_FID_T_MAX,
    PROTECTED_FID_T_MAX,
    ConfigError,
    parse_config,
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    monkeypatch.delenv(ENV_OUTPUT_DIR, raising=False)
    monkeypatch.delenv(ENV_WORKERS, raising=False)
    # .env is looked up from the working directory
    monkeypatch.chdir(tmp_path)


def write(tmp_path, payload, name="run.json"):
    path = tmp_path / name
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return path


def test_defaults():
    cfg = parse_config("gate")
    assert cfg.output_dir == "results"
    assert cfg.workers == 1
    assert cfg.params.samples == 2000
    assert cfg.params.tau == pytest.approx(0.0125)
    assert not cfg.record_runtime


def test_file_values_and_flag_override(tmp_path):
    path = write(tmp_path, {"kind": "gate", "seed": 9, "output_dir": "out/a",
                            "params": {"samples": 50, "protected": True}})
    cfg = parse_config("gate", path, {"samples": 80, "tau": None})
    assert cfg.seed == 9
    assert cfg.params.seed == 9
    assert cfg.params.samples == 80
    assert cfg.params.protected
    assert cfg.output_dir == "out/a"


def test_environment_sits_below_file(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUTPUT_DIR, "from-env")
    monkeypatch.setenv(ENV_WORKERS, "3")
    assert parse_config("fid").output_dir == "from-env"
    assert parse_config("fid").workers == 3
    path = write(tmp_path, {"output_dir": "from-file"})
    assert parse_config("fid", path).output_dir == "from-file"
    assert parse_config("fid", path, {"output_dir": "from-flag"}).output_dir == "from-flag"


def test_bad_worker_env(monkeypatch):
    monkeypatch.setenv(ENV_WORKERS, "many")
    with pytest.raises(ConfigError) as info:
        parse_config("fid")
    assert info.value.key == ENV_WORKERS


def test_unknown_top_level_key(tmp_path):
    path = write(tmp_path, {"kind": "fid", "sample": 10})
    with pytest.raises(ConfigError) as info:
        parse_config("fid", path)
    assert info.value.key == "sample"


def test_unknown_param_key_is_named(tmp_path):
    path = write(tmp_path, {"params": {"sampels": 10}})
    with pytest.raises(ConfigError) as info:
        parse_config("gate", path)
    assert "sampels" in info.value.key


def test_malformed_json_reports_position(tmp_path):
    path = write(tmp_path, '{\n  "seed": 1,\n  "params": {\n}')
    with pytest.raises(ConfigError) as info:
        parse_config("gate", path)
    assert info.value.line is not None
    assert "line" in str(info.value)


def test_kind_mismatch(tmp_path):
    path = write(tmp_path, {"kind": "fid"})
    with pytest.raises(ConfigError):
        parse_config("gate", path)


def test_flag_not_valid_for_kind():
    with pytest.raises(ConfigError) as info:
        parse_config("ou", flags={"t_max": 3.0})
    assert info.value.key == "t_max"


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        parse_config("fid", flags={"samples": 5})
    with pytest.raises(ConfigError):
        parse_config("gate", flags={"protected": True, "tau": 0.03})
    with pytest.raises(ConfigError):
        parse_config("gate", flags={"seed": -1})


def test_protected_fid_window():
    assert parse_config("fid", flags={"protected": True}).params.t_max == PROTECTED_FID_T_MAX
    assert parse_config("fid").params.t_max == 6.0
    long_run = parse_config("fid", flags={"protected": True, "t_max": LONG_FID_T_MAX})
    assert long_run.params.t_max == LONG_FID_T_MAX


def test_ou_params_split_off_gate_config():
    cfg = parse_config("ou", flags={"samples": 30})
    gate = cfg.params.gate_config()
    assert gate.noise_kind == "ou"
    assert gate.protected
    assert gate.samples == 30
    assert cfg.params.g_values == (0.02, 0.1, 0.5)


def test_resolved_config_serializes_params():
    cfg = parse_config("synth", flags={"axis": (0.0, 1.0, 0.0)})
    dumped = cfg.model_dump(mode="json")
    assert dumped["params"]["axis"] == [0.0, 1.0, 0.0]
    assert dumped["kind"] == "synth"
