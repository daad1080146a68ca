"""Deterministic JSON output with 17 significant digits per float."""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np


def format_float(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def _emit(obj: Any, out: list[str], indent: int | None, level: int) -> None:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        _emit_items([(json.dumps(str(k), ensure_ascii=False), v) for k, v in obj.items()], "{", "}", out, indent, level)
    elif isinstance(obj, (list, tuple, np.ndarray)):
        _emit_items([(None, v) for v in obj], "[", "]", out, indent, level)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit_items(items, open_, close, out, indent, level):
    if not items:
        out.append(open_ + close)
        return
    out.append(open_)
    sep = "," if indent is None else ","
    for i, (key, value) in enumerate(items):
        if indent is not None:
            out.append("\n" + " " * (indent * (level + 1)))
        if key is not None:
            out.append(key + (": " if indent is not None else ":"))
        _emit(value, out, indent, level + 1)
        if i < len(items) - 1:
            out.append(sep)
    if indent is not None:
        out.append("\n" + " " * (indent * level))
    out.append(close)


def dumps(obj: Any, indent: int | None = None) -> str:
    """Serialize ``obj``; non-finite floats become ``null``."""
    out: list[str] = []
    _emit(obj, out, indent, 0)
    return "".join(out)


def loads(text: str) -> Any:
    return json.loads(text)
