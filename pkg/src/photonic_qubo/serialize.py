"""Deterministic JSON/CSV writers used by the campaign exports.

Repeated runs with the same seed must produce byte-identical files, so keys
are sorted, floats go through repr (exact round trip), newlines are fixed to
"\\n", and non-finite values are mapped to null.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dump_json(path, obj, indent: int | None = 2) -> None:
    text = json.dumps(to_jsonable(obj), sort_keys=True, indent=indent,
                      separators=None if indent else (",", ":"),
                      allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")


def json_line(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (np.floating, float)):
        x = float(value)
        return repr(x) if math.isfinite(x) else ""
    return str(value)


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(csv_cell(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def state_to_string(s) -> str:
    """Binary state as a compact '0101...' string."""
    return "".join("1" if x else "0" for x in np.asarray(s).astype(int))


def state_from_string(text: str) -> np.ndarray:
    if not set(text) <= {"0", "1"}:
        raise ValueError(f"state string must contain only 0/1, got {text!r}")
    return np.array([1.0 if c == "1" else 0.0 for c in text])
