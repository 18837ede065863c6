"""Deterministic CSV/JSON writers.

Every file starts with the resolved run configuration so a table can be
traced back to the command that produced it.  Floats are written with 17
significant digits; identical configurations give byte-identical files.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return None if math.isnan(v) or math.isinf(v) else v
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def config_line(config: dict) -> str:
    return json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))


def write_table(path: Path, config: dict, columns: Sequence[str], rows: Iterable[Sequence],
                fmt_name: str = "csv", meta: dict | None = None) -> Path:
    """Write one table as ``<path>.csv`` or ``<path>.json``; returns the file path."""
    path = Path(path)
    path = path.with_name(f"{path.name}.{fmt_name}")
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [list(r) for r in rows]
    if fmt_name == "json":
        doc = {"config": _jsonable(config), "columns": list(columns), "rows": _jsonable(rows)}
        if meta:
            doc["meta"] = _jsonable(meta)
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    elif fmt_name == "csv":
        lines = [f"# config: {config_line(config)}"]
        for key in sorted(meta or {}):
            lines.append(f"# {key}: {config_line(meta[key]) if isinstance(meta[key], (dict, list)) else fmt(meta[key])}")
        lines.append(",".join(columns))
        lines.extend(",".join(fmt(v) for v in r) for r in rows)
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown output format {fmt_name!r}")
    path.write_text(text, encoding="utf-8")
    return path


def read_csv(path: Path):
    """Parse a file written by :func:`write_table` back into (config, columns, rows)."""
    config, columns, rows = None, None, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("# config: "):
            config = json.loads(line[len("# config: "):])
        elif line.startswith("#"):
            continue
        elif columns is None:
            columns = line.split(",")
        else:
            rows.append([_parse(v) for v in line.split(",")])
    return config, columns, rows


def _parse(text: str):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text
