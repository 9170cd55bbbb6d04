"""
Run configuration.
Reads the JSON run file, applies environment defaults (loaded from .env) and
command-line overrides, and validates everything against the strict parameter
models. Precedence: flags > config file > environment > model defaults.

File format:

    {
      "kind": "gate",                 # fid | gate | ou | two-qubit | synth | verify
      "output_dir": "results/x-gate",
      "seed": 7,
      "workers": 4,
      "params": {"protected": true, "tau": 0.0125, "samples": 2000}
    }
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple, Type

import numpy as np
from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, SerializeAsAny, ValidationError

from dynamics import CHECK_STEPS_PER_PERIOD
from experiments import OU_G_VALUES, FidConfig, GateExpConfig
from gate_design import Choreography
from noise_models import MAX_SEED

logger = logging.getLogger(__name__)

KINDS = ("fid", "gate", "ou", "two-qubit", "synth", "verify")
TOP_LEVEL_KEYS = {"kind", "output_dir", "seed", "workers", "params", "record_runtime"}

ENV_OUTPUT_DIR = "CPGATE_OUTPUT_DIR"
ENV_WORKERS = "CPGATE_WORKERS"
ENV_LOG_LEVEL = "CPGATE_LOG_LEVEL"

PROTECTED_FID_T_MAX = 10.0
LONG_FID_T_MAX = 1000.0


class ConfigError(ValueError):
    """Configuration problem naming the offending key (and file position when known)."""

    def __init__(self, key: Optional[str], message: str, line: Optional[int] = None,
                 column: Optional[int] = None):
        self.key = key
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        what = f"'{key}': " if key else ""
        super().__init__(f"{what}{message}{where}")


class OUStudyParams(GateExpConfig):
    """Gate parameters plus the g = τ/τ_e grid of the OU study."""

    noise_kind: Literal["quasi-static", "ou", "none"] = "ou"
    protected: bool = True
    samples: int = Field(default=500, ge=1)
    g_values: Tuple[float, ...] = OU_G_VALUES

    def gate_config(self) -> GateExpConfig:
        return GateExpConfig.model_validate(self.model_dump(exclude={"g_values"}))


class SynthParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    axis: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    angle: float = np.pi / 4
    omega: float = Field(default=2 * np.pi, gt=0.0)
    tau: float = Field(default=0.0125, gt=0.0)
    qubits: Literal[1, 2] = 1
    sweep_rate: Optional[float] = Field(default=None, gt=0.0)
    choreography: Choreography = "slice"
    check_steps_per_period: int = Field(default=CHECK_STEPS_PER_PERIOD, ge=20)


class TwoQubitParams(BaseModel):
    """Controlled gate check; defaults give the controlled-NOT case (α₀=π/2, γ=π/2)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    axis: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    angle: float = np.pi / 2
    omega: float = Field(default=2 * np.pi, gt=0.0)
    tau: float = Field(default=0.0125, gt=0.0)
    n: int = Field(default=1, ge=1)
    protected: bool = True
    coupling_strength: float = 0.4
    bath_frequency: float = 0.1
    choreography: Choreography = "slice"
    steps_per_period: int = Field(default=CHECK_STEPS_PER_PERIOD, ge=20)


class VerifyParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    random_paths: int = Field(default=20, ge=1)
    samples: int = Field(default=400, ge=100)


PARAM_MODELS: Dict[str, Type[BaseModel]] = {
    "fid": FidConfig,
    "gate": GateExpConfig,
    "ou": OUStudyParams,
    "two-qubit": TwoQubitParams,
    "synth": SynthParams,
    "verify": VerifyParams,
}


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["fid", "gate", "ou", "two-qubit", "synth", "verify"]
    output_dir: str = "results"
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    workers: int = Field(default=1, ge=1)
    record_runtime: bool = False
    params: SerializeAsAny[BaseModel]


def _validation_to_config_error(error: ValidationError, prefix: str = "") -> ConfigError:
    first = error.errors()[0]
    key = ".".join(str(part) for part in first["loc"]) or None
    if key and prefix:
        key = f"{prefix}.{key}"
    return ConfigError(key or prefix or None, first["msg"])


def read_config_file(path) -> Dict[str, Any]:
    """
    Load and shape-check a JSON run file.

    Raises:
        ConfigError: unreadable file, malformed JSON (with line/column) or unknown key
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(None, f"cannot read config file {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(None, f"malformed JSON in {path}: {e.msg}", line=e.lineno, column=e.colno) from e
    if not isinstance(data, dict):
        raise ConfigError(None, f"config file {path} must contain a JSON object")
    for key in data:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError(key, f"unknown key (allowed: {', '.join(sorted(TOP_LEVEL_KEYS))})")
    if "params" in data and not isinstance(data["params"], dict):
        raise ConfigError("params", "must be a JSON object")
    return data


def env_defaults() -> Dict[str, Any]:
    """Output directory and worker count from the environment (.env in the working directory is loaded first)."""
    load_dotenv(find_dotenv(usecwd=True))
    defaults: Dict[str, Any] = {}
    if os.getenv(ENV_OUTPUT_DIR):
        defaults["output_dir"] = os.getenv(ENV_OUTPUT_DIR)
    if os.getenv(ENV_WORKERS):
        try:
            defaults["workers"] = int(os.getenv(ENV_WORKERS))
        except ValueError as e:
            raise ConfigError(ENV_WORKERS, f"must be an integer, got {os.getenv(ENV_WORKERS)!r}") from e
    return defaults


def parse_config(kind: str, config_path=None, flags: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Build a validated RunConfig.

    Args:
        kind: subcommand name
        config_path: optional JSON run file
        flags: command-line values; None entries mean "not given". Recognized keys:
            output_dir, seed, workers, record_runtime, and any parameter-model field
            (samples, tau, protected, t_max, ...)

    Returns:
        RunConfig with params validated against the model for the kind

    Raises:
        ConfigError: naming the offending key
    """
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown experiment kind {kind!r}")
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    data = read_config_file(config_path) if config_path else {}
    if "kind" in data and data["kind"] != kind:
        raise ConfigError("kind", f"config file is for {data['kind']!r}, command is {kind!r}")

    top = {"kind": kind, **env_defaults()}
    for key in ("output_dir", "seed", "workers", "record_runtime"):
        if key in data:
            top[key] = data[key]
        if key in flags:
            top[key] = flags.pop(key)

    model = PARAM_MODELS[kind]
    params = dict(data.get("params", {}))
    for key, value in flags.items():
        if key not in model.model_fields:
            raise ConfigError(key, f"option does not apply to '{kind}'")
        params[key] = value
    if "seed" in model.model_fields and "seed" not in params:
        params["seed"] = top.get("seed", 0)
    if kind == "fid" and params.get("protected") and "t_max" not in params:
        params["t_max"] = PROTECTED_FID_T_MAX

    try:
        validated = model.model_validate(params)
    except ValidationError as e:
        raise _validation_to_config_error(e, prefix="params") from e
    except ValueError as e:
        raise ConfigError("params", str(e)) from e
    try:
        config = RunConfig(params=validated, **top)
    except ValidationError as e:
        raise _validation_to_config_error(e) from e
    logger.debug(f"Resolved {kind} config: {config.model_dump(mode='json')}")
    return config
