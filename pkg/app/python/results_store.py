"""
Results store for experiment artifacts.
Writes the CSV curves and JSON summaries that make up the contract of every run.
Formats are byte-stable: 17 significant digits, '.' decimal point, LF line endings,
sorted JSON keys.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Mapping

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and pydantic models into plain JSON types."""
    if hasattr(value, "model_dump"):
        return to_jsonable(value.model_dump(mode="json"))
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if not np.isfinite(value):
            return str(value)
        return value
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, Path):
        return str(value)
    return value


def write_csv(path, columns: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({name: np.asarray(values) for name, values in columns.items()})
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path


def write_json(path, payload: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text + "\n")
    return path


class ResultsStore:
    def __init__(self, output_dir: str = "results"):
        """
        Initialize the results store.

        Args:
            output_dir: Directory that receives all artifacts of a run
        """
        self.output_dir = Path(output_dir)
        self.written: List[Path] = []

    def init_dir(self) -> Path:
        """Create the output directory if it doesn't exist."""
        os.makedirs(self.output_dir, exist_ok=True)
        return self.output_dir

    def save_csv(self, name: str, columns: Mapping[str, Any]) -> Path:
        """
        Save one curve table.

        Args:
            name: File name inside the output directory
            columns: Ordered mapping of column name to values

        Returns:
            Path of the written file
        """
        path = write_csv(self.output_dir / name, columns)
        self.written.append(path)
        logger.info(f"[OK] Saved {path}")
        return path

    def save_json(self, name: str, payload: Dict[str, Any]) -> Path:
        path = write_json(self.output_dir / name, payload)
        self.written.append(path)
        logger.info(f"[OK] Saved {path}")
        return path

    def get_artifacts(self) -> List[str]:
        return [str(p) for p in self.written]
