"""Run directories and the files every command leaves behind."""

import json
import os
from datetime import datetime
from importlib.metadata import PackageNotFoundError, version as importlib_version
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.17g"


def package_version() -> str:
    try:
        return importlib_version("fowtccd")
    except PackageNotFoundError:
        return "unknown"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_frame(frame: pd.DataFrame, path) -> str:
    """CSV with full float precision so that reading it back gives the same numbers."""
    frame.to_csv(path, index=False, sep=",", encoding="utf-8", float_format=FLOAT_FORMAT)
    return str(path)


def read_frame(path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def write_json(data: Dict[str, Any], path) -> str:
    with open(path, "w") as f:
        json.dump(_jsonable(data), f, indent=2, sort_keys=True)
        f.write("\n")
    return str(path)


def error_record(error: Exception, exit_code: int) -> Dict[str, Any]:
    record = error.to_record() if hasattr(error, "to_record") else {"type": type(error).__name__, "message": str(error), "details": {}}
    return {
        "status": "error",
        "exit_code": exit_code,
        "type": record.get("type", type(error).__name__),
        "message": record.get("message", str(error)),
        "details": record.get("details", {}),
    }


class RunDirectory:
    """``<base>/<command>-<stamp>/`` with a manifest listing what was written."""

    def __init__(self, base: str, command: str, stamp: Optional[str] = None):
        stamp = stamp or datetime.now().strftime("%Y%m%d_%H%M%S")
        path = Path(base) / f"{command}-{stamp}"
        suffix = 1
        while path.exists():
            suffix += 1
            path = Path(base) / f"{command}-{stamp}-{suffix}"
        path.mkdir(parents=True)
        self.path = path
        self.command = command
        self.files: List[str] = []

    def file(self, name: str) -> Path:
        self.files.append(name)
        return self.path / name

    def frame(self, name: str, frame: pd.DataFrame) -> str:
        return write_frame(frame, self.file(name))

    def json(self, name: str, data: Dict[str, Any]) -> str:
        return write_json(data, self.file(name))

    def error(self, error: Exception, exit_code: int) -> Dict[str, Any]:
        record = error_record(error, exit_code)
        self.json("error.json", record)
        return record

    def manifest(self, scenario_copy: Optional[str] = None, extra: Optional[Dict[str, Any]] = None) -> str:
        data = {
            "command": self.command,
            "scenario": scenario_copy,
            "files": sorted(set(self.files)),
            "version": package_version(),
        }
        data.update(extra or {})
        return write_json(data, self.path / "manifest.json")

    def __fspath__(self) -> str:
        return os.fspath(self.path)

    def __str__(self) -> str:
        return str(self.path)
