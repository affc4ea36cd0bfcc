"""Interchange formats: cohort CSV, schema JSON, predictions CSV, grid JSON.

Formats
-------
Cohort CSV
    Header row with reserved columns ``id,time,event,endpoint`` (event is
    0/1), followed by the feature columns in schema order.
Schema JSON
    ``{"features": [{"name", "kind", "comparator": {"type", ...}}, ...]}``
    in column order. Comparator types: ``exact``, ``tolerance`` (``eps``),
    ``binned`` (``edges``).
Predictions CSV
    Header ``id,t_1,...,t_m``. The first data row may carry the grid times
    under the reserved id ``__grid__``; otherwise the grid comes from a
    sidecar JSON ``{"times": [...]}``.

All floats are serialized with 17 significant digits so that re-running a
command on identical inputs produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from typing import Mapping, Optional, Sequence

from .core import (
    Binned,
    Cohort,
    Comparator,
    DataError,
    Exact,
    FeatureSchema,
    FeatureSpec,
    FeatureValue,
    PatientRecord,
    Prediction,
    SurvivalOutcome,
    TimeGrid,
    Tolerance,
)

GRID_ROW_ID = "__grid__"
RESERVED_COLUMNS = ("id", "time", "event", "endpoint")

_TRUE = {"1", "true"}
_FALSE = {"0", "false"}


def format_float(x: float) -> str:
    """Render a float with 17 significant digits (round-trips float64 exactly)."""
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return format(x, ".17g")


def dump_json(obj, path: str) -> None:
    """Write JSON with deterministic float formatting (17 significant digits)."""
    with open(path, "w", encoding="utf-8") as fh:
        _write_json(obj, fh, 0)
        fh.write("\n")


def _write_json(obj, fh, indent: int) -> None:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            fh.write("{}")
            return
        fh.write("{\n")
        for i, (k, v) in enumerate(obj.items()):
            fh.write(f"{inner}{json.dumps(str(k))}: ")
            _write_json(v, fh, indent + 1)
            fh.write(",\n" if i < len(obj) - 1 else "\n")
        fh.write(pad + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            fh.write("[]")
            return
        scalars = all(not isinstance(v, (dict, list, tuple)) for v in seq)
        if scalars:
            fh.write("[" + ", ".join(_scalar_json(v) for v in seq) + "]")
            return
        fh.write("[\n")
        for i, v in enumerate(seq):
            fh.write(inner)
            _write_json(v, fh, indent + 1)
            fh.write(",\n" if i < len(seq) - 1 else "\n")
        fh.write(pad + "]")
    else:
        fh.write(_scalar_json(obj))


def _scalar_json(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format_float(v)
    return json.dumps(v)


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise DataError(f"cannot read file: {e}", path=path) from e
    except json.JSONDecodeError as e:
        raise DataError(f"invalid JSON: {e}", path=path, line=e.lineno) from e


# ---------------------------------------------------------------------------
# schema


def comparator_to_json(c: Comparator) -> dict:
    if isinstance(c, Exact):
        return {"type": "exact"}
    if isinstance(c, Tolerance):
        return {"type": "tolerance", "eps": c.eps}
    if isinstance(c, Binned):
        return {"type": "binned", "edges": list(c.edges)}
    raise TypeError(f"unknown comparator {c!r}")


def comparator_from_json(obj, path: Optional[str] = None) -> Comparator:
    if isinstance(obj, str):
        obj = {"type": obj}
    if not isinstance(obj, dict) or "type" not in obj:
        raise DataError(f"comparator must be an object with a 'type', got {obj!r}", path=path)
    kind = obj["type"]
    if kind == "exact":
        return Exact()
    if kind == "tolerance":
        return Tolerance(eps=float(obj["eps"]))
    if kind == "binned":
        return Binned(edges=tuple(float(e) for e in obj["edges"]))
    raise DataError(f"unknown comparator type {kind!r}", path=path)


def schema_to_json(schema: FeatureSchema) -> dict:
    return {
        "features": [
            {"name": f.name, "kind": f.kind, "comparator": comparator_to_json(f.comparator)}
            for f in schema.features
        ]
    }


def load_schema(path: str) -> FeatureSchema:
    doc = _load_json(path)
    if not isinstance(doc, dict) or "features" not in doc:
        raise DataError("schema JSON must contain a 'features' list", path=path)
    feats = []
    for entry in doc["features"]:
        try:
            feats.append(
                FeatureSpec(
                    name=str(entry["name"]),
                    kind=str(entry["kind"]),
                    comparator=comparator_from_json(entry.get("comparator", "exact"), path),
                )
            )
        except KeyError as e:
            raise DataError(f"schema feature entry missing key {e}", path=path) from e
    return FeatureSchema(features=tuple(feats))


def save_schema(schema: FeatureSchema, path: str) -> None:
    dump_json(schema_to_json(schema), path)


# ---------------------------------------------------------------------------
# cohort CSV


def _parse_value(raw: str, spec: FeatureSpec, path: str, line: int) -> FeatureValue:
    raw = raw.strip()
    if spec.kind == "categorical":
        return raw
    if spec.kind == "boolean":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise DataError(f"feature {spec.name!r}: expected 0/1/true/false, got {raw!r}", path, line)
    if spec.kind == "ordinal":
        try:
            return int(raw)
        except ValueError:
            raise DataError(f"feature {spec.name!r}: expected an integer, got {raw!r}", path, line)
    try:
        return float(raw)
    except ValueError:
        raise DataError(f"feature {spec.name!r}: expected a number, got {raw!r}", path, line)


def load_cohort(path: str, schema: FeatureSchema) -> Cohort:
    """Parse a cohort CSV against ``schema``; predictions are loaded separately."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise DataError(f"cannot read file: {e}", path=path) from e
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty file", path=path, line=1)
        expected = list(RESERVED_COLUMNS) + list(schema.names)
        if [h.strip() for h in header] != expected:
            raise DataError(
                f"header mismatch: expected {','.join(expected)}", path=path, line=1
            )
        patients: list[PatientRecord] = []
        outcomes: dict[str, SurvivalOutcome] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise DataError(
                    f"expected {len(expected)} columns, got {len(row)}", path, lineno
                )
            pid = row[0].strip()
            if not pid:
                raise DataError("empty patient id", path, lineno)
            try:
                time = float(row[1])
            except ValueError:
                raise DataError(f"time must be a number, got {row[1]!r}", path, lineno)
            ev = row[2].strip()
            if ev not in ("0", "1"):
                raise DataError(f"event must be 0 or 1, got {ev!r}", path, lineno)
            endpoint = row[3].strip()
            values = tuple(
                _parse_value(raw, spec, path, lineno)
                for raw, spec in zip(row[4:], schema.features)
            )
            patients.append(PatientRecord(id=pid, values=values))
            outcomes[pid] = SurvivalOutcome(time=time, event=ev == "1", endpoint=endpoint)
    return Cohort(schema=schema, patients=tuple(patients), outcomes=outcomes)


def _format_value(v: FeatureValue) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def save_cohort(cohort: Cohort, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(RESERVED_COLUMNS) + list(cohort.schema.names))
        for p in cohort.patients:
            oc = cohort.outcomes[p.id]
            writer.writerow(
                [p.id, format_float(oc.time), "1" if oc.event else "0", oc.endpoint]
                + [_format_value(v) for v in p.values]
            )


def load_outcomes(path: str) -> dict[str, SurvivalOutcome]:
    """Read only the reserved columns of a cohort CSV (no schema required)."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise DataError(f"cannot read file: {e}", path=path) from e
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("empty file", path=path, line=1)
        if header[: len(RESERVED_COLUMNS)] != list(RESERVED_COLUMNS):
            raise DataError(
                f"header must start with {','.join(RESERVED_COLUMNS)}", path=path, line=1
            )
        out: dict[str, SurvivalOutcome] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            pid = row[0].strip()
            if not pid:
                raise DataError("empty patient id", path, lineno)
            if pid in out:
                raise DataError(f"duplicate patient id {pid!r}", path, lineno)
            try:
                time = float(row[1])
            except ValueError:
                raise DataError(f"time must be a number, got {row[1]!r}", path, lineno)
            ev = row[2].strip()
            if ev not in ("0", "1"):
                raise DataError(f"event must be 0 or 1, got {ev!r}", path, lineno)
            out[pid] = SurvivalOutcome(time=time, event=ev == "1", endpoint=row[3].strip())
    return out


# ---------------------------------------------------------------------------
# predictions CSV + grid JSON


def load_grid(path: str) -> TimeGrid:
    doc = _load_json(path)
    if not isinstance(doc, dict) or "times" not in doc:
        raise DataError("grid JSON must contain a 'times' list", path=path)
    try:
        return TimeGrid(times=tuple(float(t) for t in doc["times"]))
    except ValueError as e:
        raise DataError(f"invalid grid: {e}", path=path) from e


def save_grid(grid: TimeGrid, path: str) -> None:
    dump_json({"times": list(grid.times)}, path)


def load_predictions(path: str, grid: Optional[TimeGrid] = None) -> tuple[TimeGrid, dict[str, Prediction]]:
    """Load a predictions CSV; the grid comes from the ``__grid__`` row or ``grid``."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise DataError(f"cannot read file: {e}", path=path) from e
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty file", path=path, line=1)
        if not header or header[0].strip() != "id":
            raise DataError("first column must be 'id'", path=path, line=1)
        m = len(header) - 1
        if m < 1:
            raise DataError("no time columns", path=path, line=1)
        preds: dict[str, Prediction] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != m + 1:
                raise DataError(f"expected {m + 1} columns, got {len(row)}", path, lineno)
            pid = row[0].strip()
            try:
                vals = tuple(float(x) for x in row[1:])
            except ValueError:
                raise DataError("non-numeric value", path, lineno)
            if pid == GRID_ROW_ID:
                if lineno != 2:
                    raise DataError(f"{GRID_ROW_ID} must be the first data row", path, lineno)
                try:
                    grid = TimeGrid(times=vals)
                except ValueError as e:
                    raise DataError(f"invalid grid row: {e}", path, lineno)
                continue
            if grid is None:
                raise DataError(
                    f"no grid: provide a {GRID_ROW_ID} first row or a sidecar grid JSON",
                    path,
                    lineno,
                )
            if pid in preds:
                raise DataError(f"duplicate patient id {pid!r}", path, lineno)
            try:
                preds[pid] = Prediction(grid=grid, values=vals)
            except ValueError as e:
                raise DataError(str(e), path, lineno)
    if grid is None:
        raise DataError("no grid row and no sidecar grid provided", path=path)
    return grid, preds


def save_predictions(
    path: str,
    grid: TimeGrid,
    predictions: Mapping[str, Prediction],
    order: Optional[Sequence[str]] = None,
    include_grid_row: bool = True,
) -> None:
    ids = list(order) if order is not None else list(predictions)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"t_{j + 1}" for j in range(len(grid))])
        if include_grid_row:
            writer.writerow([GRID_ROW_ID] + [format_float(t) for t in grid.times])
        for pid in ids:
            pred = predictions[pid]
            if pred.grid.times != grid.times:
                raise ValueError(f"prediction for {pid!r} is not on the shared grid")
            writer.writerow([pid] + [format_float(v) for v in pred.values])
