"""Deterministic CSV/JSON artifacts and run configuration files."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import yaml

from .exceptions import InvalidParameter

FLOAT_FMT = "%.12g"


def config_hash(config: dict) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON form."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path) -> dict:
    """Read a YAML (or JSON) key-value document; keys use underscores or dashes."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as err:
        raise InvalidParameter(f"cannot read config {path}: {err}") from err
    except yaml.YAMLError as err:
        raise InvalidParameter(f"config {path} is not valid YAML: {err}") from err
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidParameter(f"config {path} must be a mapping of keys to values")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def _cell(v) -> str:
    if isinstance(v, float):
        return FLOAT_FMT % v
    return str(v)


def render_csv(columns, rows, meta: dict) -> str:
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}={meta[key]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json(payload: dict, meta: dict) -> str:
    doc = dict(payload)
    doc["_meta"] = meta
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path
