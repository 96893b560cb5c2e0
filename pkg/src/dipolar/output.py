"""Serialized writer for analysis outputs and the run manifest."""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from .errors import ConfigError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")
FLOAT_FORMAT = "%.12g"


def _plain(value):
    """JSON-compatible copy of numpy scalars, arrays and complex numbers."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"real": float(value.real), "imag": float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value


class Emitter:
    """Owns every write of a run: `<analysis>.<format>` files plus `manifest.json`.

    Existing files are never overwritten unless `force` is set; `cleanup` removes
    whatever this emitter has written so far.
    """

    def __init__(self, directory: Union[str, Path], fmt: str = "csv", force: bool = False):
        if fmt not in FORMATS:
            raise ConfigError(f"output format must be one of {FORMATS}, got {fmt!r}")
        self.directory = Path(directory)
        self.fmt = fmt
        self.force = force
        self.written: List[Path] = []

    def _target(self, name: str, suffix: str) -> Path:
        path = self.directory / f"{name}.{suffix}"
        if path.exists() and not self.force and path not in self.written:
            raise ConfigError(f"output {path} already exists, use --force to overwrite")
        return path

    def check(self, names):
        """Fail before any computation if an output would collide."""
        for name in names:
            self._target(name, self.fmt)
        self._target("manifest", "json")

    def _register(self, path: Path):
        if path not in self.written:
            self.written.append(path)
        logger.info("wrote %s", path)

    def emit_table(self, name: str, df: pd.DataFrame, metadata: Optional[dict] = None) -> Path:
        """Write a table as CSV with `#` metadata header lines, or as JSON."""
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self._target(name, self.fmt)
        metadata = _plain(metadata or {})
        if self.fmt == "csv":
            with open(path, "w", encoding="utf-8", newline="") as handle:
                for key in sorted(metadata):
                    handle.write(f"# {key}: {json.dumps(metadata[key], sort_keys=True)}\n")
                df.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        else:
            payload = {
                "metadata": metadata,
                "columns": list(df.columns),
                "data": _plain(df.to_numpy().tolist()),
            }
            path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        self._register(path)
        return path

    def write_manifest(self, manifest: dict) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self._target("manifest", "json")
        payload = dict(_plain(manifest))
        payload["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        self._register(path)
        return path

    def cleanup(self):
        for path in reversed(self.written):
            if path.exists():
                path.unlink()
                logger.info("removed partial output %s", path)
        self.written.clear()
