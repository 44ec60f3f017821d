"""Output plumbing: headers, deterministic CSV/JSON writers, run keys, JSONL run log.

Every data file starts with a header naming the tool version, the subcommand,
the resolved parameters and the seed. Data files never carry timestamps, so a
rerun with the header's parameters reproduces the file byte for byte.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import math
import os
import threading
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np


def _ensure_dir(path: str) -> None:
    Path(os.path.dirname(path) or ".").mkdir(parents=True, exist_ok=True)


def format_float(value: float) -> str:
    """17 significant digits; lossless round trip for IEEE doubles."""
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    if isinstance(value, (list, tuple)):
        return "|".join(_cell(v) for v in value)
    return str(value)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into plain JSON types.

    Floats stay floats; json.dumps uses repr, which already round-trips.
    """
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return format_float(value)
    return value


def build_header(version: str, subcommand: str, params: Mapping[str, Any], seed: Optional[int]) -> Dict[str, Any]:
    return {
        "tool": "errw-recurrence-lab",
        "version": version,
        "subcommand": subcommand,
        "seed": seed,
        "config": to_jsonable(dict(params)),
    }


def compute_run_key(header: Mapping[str, Any]) -> str:
    """Deterministic key of a run: rk1|<sha256 of canonical header JSON>."""
    payload = json.dumps(to_jsonable(dict(header)), sort_keys=True, separators=(",", ":"))
    return "rk1|" + hashlib.sha256(payload.encode("utf-8")).hexdigest()


def header_comment_lines(header: Mapping[str, Any]) -> List[str]:
    lines = [
        f"tool: {header.get('tool', '')}",
        f"version: {header.get('version', '')}",
        f"subcommand: {header.get('subcommand', '')}",
        f"seed: {header.get('seed', '')}",
        "config: " + json.dumps(to_jsonable(header.get("config", {})), sort_keys=True),
    ]
    return lines


def write_csv(
    path: str,
    fieldnames: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
    header: Optional[Mapping[str, Any]] = None,
) -> None:
    """Write rows with a fixed column order, preceded by `# ` header comments."""
    _ensure_dir(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if header is not None:
            for line in header_comment_lines(header):
                f.write(f"# {line}\n")
        w = csv.DictWriter(f, fieldnames=list(fieldnames), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(row.get(k)) for k in fieldnames})


def read_csv(path: str) -> List[Dict[str, str]]:
    """Read a CSV written by write_csv, skipping comment lines."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path: str, payload: Mapping[str, Any], header: Optional[Mapping[str, Any]] = None) -> None:
    _ensure_dir(path)
    doc: Dict[str, Any] = {}
    if header is not None:
        doc["header"] = to_jsonable(dict(header))
    doc.update(to_jsonable(dict(payload)))
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False, indent=2)
        f.write("\n")


def anchor_timestamp() -> str:
    """ISO-8601 UTC timestamp, optionally anchored by env for reproducible logs."""
    env = os.getenv("RUN_ANCHOR_TIMESTAMP_UTC")
    if env:
        s = env.strip().replace("Z", "+00:00")
        try:
            dt.datetime.fromisoformat(s)
            return s
        except ValueError:
            pass
    return dt.datetime.now(dt.timezone.utc).isoformat()


class JsonlLogger:
    """Append-only JSONL log; safe to share between worker threads."""

    def __init__(self, path: Optional[str]) -> None:
        self.path = path
        self._lock = threading.Lock()
        if path:
            _ensure_dir(path)

    def write(self, rec: Dict[str, Any]) -> None:
        if not self.path:
            return
        line = json.dumps(to_jsonable({"ts": anchor_timestamp(), **rec}), ensure_ascii=False)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")
