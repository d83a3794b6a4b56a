"""Canonical JSON used for every artifact the toolkit writes or serves.

Checkpoints, traces, reports and HTTP responses all go through `dumps`, so
identical values always produce identical bytes. Floats are rendered with 17
significant digits, which round-trips IEEE-754 doubles exactly; this is what
makes file-level determinism and CLI/service parity checkable byte-for-byte.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np


def format_float(value: float) -> str:
    """17-significant-digit decimal form of a finite double."""
    if math.isnan(value) or math.isinf(value):
        raise ValueError("non-finite value cannot be serialized")
    return format(float(value), ".17g")


def _write(obj: Any, out: list[str], indent: int | None, level: int, sort_keys: bool) -> None:
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (list, tuple)):
        _write_seq(obj, out, indent, level, sort_keys)
    elif isinstance(obj, dict):
        _write_map(obj, out, indent, level, sort_keys)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _newline(out: list[str], indent: int | None, level: int) -> None:
    if indent is not None:
        out.append("\n" + " " * (indent * level))


def _write_seq(obj, out, indent, level, sort_keys) -> None:
    if len(obj) == 0:
        out.append("[]")
        return
    out.append("[")
    for i, item in enumerate(obj):
        if i:
            out.append(",")
        _newline(out, indent, level + 1)
        _write(item, out, indent, level + 1, sort_keys)
    _newline(out, indent, level)
    out.append("]")


def _write_map(obj, out, indent, level, sort_keys) -> None:
    if len(obj) == 0:
        out.append("{}")
        return
    keys = sorted(obj) if sort_keys else list(obj)
    out.append("{")
    for i, key in enumerate(keys):
        if not isinstance(key, str):
            raise TypeError("JSON object keys must be strings")
        if i:
            out.append(",")
        _newline(out, indent, level + 1)
        out.append(json.dumps(key, ensure_ascii=False))
        out.append(": " if indent is not None else ":")
        _write(obj[key], out, indent, level + 1, sort_keys)
    _newline(out, indent, level)
    out.append("}")


def dumps(obj: Any, *, indent: int | None = None, sort_keys: bool = False) -> str:
    """Serialize to canonical JSON text."""
    out: list[str] = []
    _write(obj, out, indent, 0, sort_keys)
    return "".join(out)


def dump_path(obj: Any, path, *, indent: int | None = 2) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj, indent=indent))
        fh.write("\n")


def load_path(path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
