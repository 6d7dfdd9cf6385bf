"""JSON Lines manifests: one record per line, UTF-8, deterministic layout.

Non-finite floats are not valid JSON; infinities serialize as the strings
"inf"/"-inf" and parse back to floats.
"""

from __future__ import annotations

import json
import math


def jsonable(value):
    """Recursively convert to JSON-safe data (inf -> "inf")."""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            raise ValueError("refusing to serialize NaN")
        return float(value)     # demote numpy float subclasses
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):  # numpy scalars
        return jsonable(value.item())
    return value


def unjsonable(value):
    """Inverse of jsonable: the strings "inf"/"-inf" parse back to floats,
    everywhere they appear."""
    if value == "inf":
        return math.inf
    if value == "-inf":
        return -math.inf
    if isinstance(value, dict):
        return {k: unjsonable(v) for k, v in value.items()}
    if isinstance(value, list):
        return [unjsonable(v) for v in value]
    return value


def dumps_line(row: dict) -> str:
    return json.dumps(jsonable(row), ensure_ascii=False, separators=(", ", ": "))


def write_jsonl(path, rows) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(dumps_line(row))
            f.write("\n")
            n += 1
    return n


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as f:
        for ln, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(unjsonable(json.loads(line)))
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}: line {ln}: bad JSON: {e}") from e
    return out
