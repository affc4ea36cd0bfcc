"""Readers and writers for the survuq interchange files.

The adapter talks to the main toolkit only through these formats: cohort CSV
(``id,time,event,endpoint,<features...>``), schema JSON, grid JSON, and the
predictions CSV whose first data row carries the grid under the reserved id
``__grid__``. Floats are written with 17 significant digits so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

RESERVED = ("id", "time", "event", "endpoint")
GRID_ROW_ID = "__grid__"


class InterchangeError(Exception):
    """An interchange file is missing, malformed, or inconsistent."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class FeatureDef:
    name: str
    kind: str  # categorical | boolean | ordinal | continuous


@dataclass
class CohortTable:
    ids: list[str]
    times: np.ndarray
    events: np.ndarray
    features: list[FeatureDef]
    columns: list[list]  # raw per-feature columns, schema order


def read_schema(path: str) -> list[FeatureDef]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InterchangeError(f"{path}: cannot read schema: {e}") from e
    try:
        return [FeatureDef(name=str(f["name"]), kind=str(f["kind"])) for f in doc["features"]]
    except (KeyError, TypeError) as e:
        raise InterchangeError(f"{path}: malformed schema: {e!r}") from e


def read_grid(path: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        times = np.asarray([float(t) for t in doc["times"]])
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise InterchangeError(f"{path}: cannot read grid: {e!r}") from e
    if times.size == 0 or np.any(np.diff(times) <= 0):
        raise InterchangeError(f"{path}: grid times must be strictly increasing")
    return times


def _parse(raw: str, kind: str, where: str):
    raw = raw.strip()
    try:
        if kind == "categorical":
            return raw
        if kind == "boolean":
            low = raw.lower()
            if low in ("1", "true"):
                return True
            if low in ("0", "false"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "ordinal":
            return int(raw)
        return float(raw)
    except ValueError as e:
        raise InterchangeError(f"{where}: {e}") from e


def read_cohort(path: str, schema: list[FeatureDef]) -> CohortTable:
    """Parse a cohort CSV; the header must match the schema exactly."""
    expected = list(RESERVED) + [f.name for f in schema]
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise InterchangeError(f"{path}: cannot read cohort: {e}") from e
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected:
            raise InterchangeError(
                f"{path}: header does not match the schema (expected {','.join(expected)})"
            )
        ids, times, events = [], [], []
        columns: list[list] = [[] for _ in schema]
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise InterchangeError(f"{path}:{lineno}: wrong column count")
            ids.append(row[0].strip())
            try:
                times.append(float(row[1]))
            except ValueError:
                raise InterchangeError(f"{path}:{lineno}: bad time {row[1]!r}")
            if row[2].strip() not in ("0", "1"):
                raise InterchangeError(f"{path}:{lineno}: event must be 0/1")
            events.append(row[2].strip() == "1")
            for j, f in enumerate(schema):
                columns[j].append(_parse(row[4 + j], f.kind, f"{path}:{lineno}"))
    if not ids:
        raise InterchangeError(f"{path}: cohort has no rows")
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise InterchangeError(f"{path}: duplicate patient ids {dupes[:5]}")
    return CohortTable(
        ids=ids,
        times=np.asarray(times),
        events=np.asarray(events, dtype=bool),
        features=list(schema),
        columns=columns,
    )


def write_predictions(path: str, grid: np.ndarray, ids: list[str], curves: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"t_{j + 1}" for j in range(len(grid))])
        writer.writerow([GRID_ROW_ID] + [fmt(t) for t in grid])
        for pid, row in zip(ids, curves):
            writer.writerow([pid] + [fmt(v) for v in row])


def encode_design(
    table: CohortTable, levels: dict[str, list[str]] | None = None
) -> tuple[np.ndarray, dict[str, list[str]]]:
    """Numeric design matrix: one-hot categoricals, 0/1 booleans, raw numbers.

    ``levels`` captured at training time must be passed back when encoding a
    prediction cohort so columns line up; an unseen level is an error.
    """
    fitting = levels is None
    levels = dict(levels or {})
    cols = []
    for f, raw in zip(table.features, table.columns):
        if f.kind == "categorical":
            if fitting:
                levels[f.name] = sorted(set(raw))
            known = levels.get(f.name)
            if known is None:
                raise InterchangeError(f"no recorded levels for feature {f.name!r}")
            unseen = sorted(set(raw) - set(known))
            if unseen:
                raise InterchangeError(f"feature {f.name!r}: unseen levels {unseen}")
            for level in known[1:]:
                cols.append(np.asarray([1.0 if v == level else 0.0 for v in raw]))
        elif f.kind == "boolean":
            cols.append(np.asarray([1.0 if v else 0.0 for v in raw]))
        else:
            cols.append(np.asarray(raw, dtype=float))
    if not cols:
        raise InterchangeError("schema produced an empty design matrix")
    return np.column_stack(cols), levels
