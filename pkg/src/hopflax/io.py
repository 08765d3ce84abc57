"""JSON documents for spaces, costs, measures and fields; CSV and JSON report writers."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .costs import CostFunction, cost_from_document
from .errors import ParseError, ValidationError
from .measures import ProbMeasure, measure_from_document
from .metric_space import MetricSpace, build_graph_space, build_grid_space, build_matrix_space


def fmt(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def load_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(str(path), 0, exc.strerror or str(exc)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), exc.lineno, exc.msg) from exc


def _require(doc, key, path):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(str(path), 1, f"missing key {key!r}")
    return doc[key]


def space_from_document(doc) -> MetricSpace:
    if not isinstance(doc, dict):
        raise ValidationError("space document must be an object")
    kind = doc.get("type")
    if kind == "matrix":
        return build_matrix_space(doc["dist"], doc.get("slope_radius", "nearest"))
    if kind == "grid":
        return build_grid_space(int(doc["dimension"]), int(doc["points_per_axis"]),
                                float(doc["side_length"]))
    if kind == "graph":
        return build_graph_space(doc["edges"], int(doc["n"]))
    raise ValidationError(f"unknown space type {kind!r}")


def space_to_json(space: MetricSpace) -> str:
    """Matrix-form document; every distance is written with 17 significant digits."""
    rows = ",\n    ".join("[" + ", ".join(fmt(v) for v in row) + "]" for row in space.dist)
    radius = space.params.get("slope_radius", "nearest") if space.kind == "matrix" else "nearest"
    radius = json.dumps(radius if isinstance(radius, str) else float(radius))
    return '{\n  "type": "matrix",\n  "slope_radius": %s,\n  "dist": [\n    %s\n  ]\n}\n' % (radius, rows)


def field_from_document(doc, n: int) -> np.ndarray:
    values = doc.get("values") if isinstance(doc, dict) else doc
    if not isinstance(values, list):
        raise ValidationError('field document must be a list or {"values": [...]}')
    f = np.asarray(values, dtype=float)
    if f.shape != (n,):
        raise ValidationError(f"field has {f.size} values, space has {n} points")
    if not np.all(np.isfinite(f)):
        i = int(np.flatnonzero(~np.isfinite(f))[0])
        raise ValidationError(f"field value at index {i} is not finite")
    return f


def _load(path, build):
    doc = load_json(path)
    try:
        return build(doc)
    except (KeyError, TypeError) as exc:
        raise ParseError(str(path), 1, f"malformed document: {exc}") from exc


def load_space(path) -> MetricSpace:
    return _load(path, space_from_document)


def load_cost(path) -> CostFunction:
    return _load(path, cost_from_document)


def load_measure(path) -> ProbMeasure:
    return _load(path, measure_from_document)


def load_field(path, n: int) -> np.ndarray:
    return _load(path, lambda d: field_from_document(d, n))


def write_csv(header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()) -> str:
    """CSV text with '.' decimals and '\\n' line endings; floats at 17 digits."""
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else
                              str(v) if isinstance(v, (int, np.integer)) and not isinstance(v, bool)
                              else fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no infinities; keep them readable and reloadable as strings
        return x if math.isfinite(x) else fmt(x)
    return obj


def to_json(obj) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"
