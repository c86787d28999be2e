"""report.json assembly and atomic file output."""
from __future__ import annotations

import json
import os
import platform
import tempfile
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"


def report_schema() -> dict:
    return json.loads(resources.files("hbasim").joinpath("report_schema.json").read_text())


def build_report(command: str, config_echo: dict, results: dict,
                 seed: int | None = None, rng: str | None = None) -> dict:
    from . import __version__

    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config_echo": config_echo,
        "results": results,
        "provenance": {
            "toolkit": "hbasim",
            "version": __version__,
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "seed": seed,
            "rng": rng,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }


def atomic_write_text(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def write_report(path, report: dict) -> Path:
    return atomic_write_text(path, json.dumps(report, indent=2, allow_nan=False) + "\n")
