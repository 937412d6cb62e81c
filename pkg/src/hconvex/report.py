"""Deterministic JSON/CSV report serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

SCHEMA_VERSION = 1


@dataclass
class Report:
    tool_version: str
    command: str
    config: dict
    result: dict
    hypothesis_warnings: list = field(default_factory=list)
    csv_header: tuple = ()
    csv_rows: list = field(default_factory=list)
    timing_ms: Optional[float] = None
    exit_code: int = 0

    def document(self) -> dict:
        """The deterministic part of the report (timing lives elsewhere)."""
        return {
            "schema": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config,
            "result": self.result,
            "hypothesis_warnings": list(self.hypothesis_warnings),
            "exit_code": self.exit_code,
        }


def _plain(obj: Any):
    """Convert to JSON-safe builtins; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, Path):
        return str(obj)
    return obj


def to_json(doc: dict) -> str:
    # json emits floats with repr(), i.e. the shortest round-trip form
    return json.dumps(_plain(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_report(report: Report, path: Optional[Path], fmt: str = "json", stream=None) -> list[Path]:
    """Write ``report`` as ``json``, ``csv`` or ``both``.

    With ``path=None`` the text goes to ``stream`` (``json`` or ``csv`` only).
    ``both`` writes ``<stem>.json`` and ``<stem>.csv`` next to ``path``.  The
    timing block goes to a ``<stem>.timing.json`` sidecar so the report itself
    stays byte-identical across runs.
    """
    if fmt not in ("json", "csv", "both"):
        raise ValueError(f"unknown format {fmt!r}")
    if path is None:
        if fmt == "both":
            raise ValueError("format 'both' needs an output path")
        text = to_json(report.document()) if fmt == "json" else to_csv(report.csv_header, report.csv_rows)
        stream.write(text)
        return []
    path = Path(path)
    if not path.parent.exists():
        raise OSError(f"output directory does not exist: {path.parent}")
    written = []
    targets = {"json": [path], "csv": [path], "both": [path.with_suffix(".json"), path.with_suffix(".csv")]}[fmt]
    for target in targets:
        kind = "csv" if (fmt == "csv" or target.suffix == ".csv" and fmt == "both") else "json"
        text = to_json(report.document()) if kind == "json" else to_csv(report.csv_header, report.csv_rows)
        try:
            target.write_text(text)
        except OSError as err:
            raise OSError(f"cannot write {target}: {err}") from err
        written.append(target)
    if report.timing_ms is not None:
        sidecar = path.with_name(path.stem + ".timing.json")
        sidecar.write_text(to_json({"timing_ms": report.timing_ms}))
    return written
