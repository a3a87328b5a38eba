"""Rendering of result dictionaries as JSON, CSV or a fixed-width table.

Results are plain dicts (``to_dict()`` of the result objects).  Scalars,
vectors and matrices are laid out as sections; floats are written with 17
significant digits so CSV round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
from numbers import Number
from typing import Any

import numpy as np

FORMATS = ("json", "csv", "table")


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower() if isinstance(v, bool) else ""
    if isinstance(v, Number) and not isinstance(v, int):
        return format(float(v), ".17g")
    return str(v)


def _is_num(v) -> bool:
    return isinstance(v, Number) and not isinstance(v, bool) or v is None


def _sections(d: dict, prefix: str = ""):
    """Yield ("scalar"|"vector"|"matrix"|"text", name, value) in key order."""
    for key in sorted(d):
        v = d[key]
        name = f"{prefix}{key}"
        if isinstance(v, dict):
            yield from _sections(v, name + ".")
        elif isinstance(v, list):
            if v and all(isinstance(r, list) and r and all(_is_num(x) for x in r) for r in v) \
                    and len({len(r) for r in v}) == 1:
                yield "matrix", name, v
            elif all(_is_num(x) for x in v):
                yield "vector", name, v
            elif all(isinstance(x, dict) for x in v):
                for i, sub in enumerate(v):
                    yield from _sections(sub, f"{name}[{i}].")
            else:
                yield "text", name, [json.dumps(x) if not isinstance(x, str) else x for x in v]
        else:
            yield "scalar", name, v


def render_json(result: dict) -> str:
    return json.dumps(_jsonable(result), sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_csv(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    scalars = []
    blocks = []
    for kind, name, v in _sections(_jsonable(result)):
        if kind == "scalar":
            scalars.append((name, v))
        else:
            blocks.append((kind, name, v))
    if scalars:
        w.writerow(["# scalars"])
        w.writerow(["name", "value"])
        for name, v in scalars:
            w.writerow([name, _fmt(v)])
    for kind, name, v in blocks:
        w.writerow([f"# {name}"])
        if kind == "matrix":
            w.writerow(["row"] + [f"c{j + 1}" for j in range(len(v[0]))])
            for i, row in enumerate(v):
                w.writerow([f"r{i + 1}"] + [_fmt(x) for x in row])
        elif kind == "vector":
            w.writerow(["index", "value"])
            for i, x in enumerate(v):
                w.writerow([i + 1, _fmt(x)])
        else:
            w.writerow(["text"])
            for x in v:
                w.writerow([x])
    return buf.getvalue()


def _cell(v, width=14) -> str:
    if _is_num(v) and v is not None and not isinstance(v, int):
        s = format(float(v), ".8g")
    else:
        s = _fmt(v)
    return s.rjust(width)


def render_table(result: dict) -> str:
    lines = []
    for kind, name, v in _sections(_jsonable(result)):
        if kind == "scalar":
            shown = format(float(v), ".10g") if isinstance(v, float) else _fmt(v)
            lines.append(f"{name:<28}{shown}")
        elif kind == "vector":
            lines.append(f"{name}:")
            lines.append("".join(_cell(x) for x in v) if v else "  (none)")
        elif kind == "matrix":
            lines.append(f"{name}:")
            for row in v:
                lines.append("".join(_cell(x) for x in row))
        else:
            lines.append(f"{name}:")
            lines.extend(f"  {x}" for x in v)
            if not v:
                lines.append("  (none)")
    return "\n".join(lines) + "\n"


def render_report(result: dict, fmt: str = "json") -> bytes:
    if fmt == "json":
        text = render_json(result)
    elif fmt == "csv":
        text = render_csv(result)
    elif fmt == "table":
        text = render_table(result)
    else:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    return text.encode("utf-8")
