"""Deterministic JSON serialization with fixed float formatting.

All model files and reports are written through here so that repeated runs
with identical inputs produce byte-identical output.  Floats are emitted
with 17 significant digits, which round-trips IEEE-754 doubles exactly.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .errors import DataError


def format_float(x: float) -> str:
    """Render a finite double with 17 significant digits.

    Zero is canonicalized (negative zero would re-parse as integer 0 and
    break byte-stable round trips).
    """
    if not math.isfinite(x):
        raise DataError(f"cannot serialize non-finite float {x!r}")
    if x == 0.0:
        return "0"
    return format(x, ".17g")


def _encode(obj: Any, out: list[str]) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if not isinstance(k, str):
                raise DataError(f"JSON object keys must be strings, got {type(k).__name__}")
            if i:
                out.append(", ")
            out.append(json.dumps(k))
            out.append(": ")
            _encode(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)) or (isinstance(obj, np.ndarray)):
        if isinstance(obj, np.ndarray):
            obj = obj.tolist()
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _encode(v, out)
        out.append("]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise DataError(f"cannot serialize object of type {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Serialize `obj` to JSON text with deterministic float formatting."""
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)


def dump_path(obj: Any, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


def load_path(path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
