"""Shared domain types: feature schemas, patient records, outcomes, survival
curves, and the cohort container consumed by every other module.

All types are immutable after construction. Structural errors (a schema that
contradicts itself, a grid that is not increasing) raise at construction;
data-quality problems (duplicate ids, out-of-range curve values) are collected
by :func:`validate_cohort` so callers can report them all at once.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

FeatureValue = Union[str, bool, int, float]

KINDS = ("categorical", "boolean", "ordinal", "continuous")


class SurvUqError(Exception):
    """Base class for errors raised by this package."""


class SchemaError(SurvUqError):
    """A feature schema (or data checked against one) is malformed."""


class DataError(SurvUqError):
    """An interchange file could not be parsed; carries file/line context."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}: "
            if line is not None:
                prefix = f"{path}:{line}: "
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Exact:
    """Two values differ unless they compare equal."""

    def differs(self, a: FeatureValue, b: FeatureValue) -> bool:
        return a != b


@dataclass(frozen=True)
class Tolerance:
    """Numeric values differ when further apart than ``eps``."""

    eps: float

    def __post_init__(self):
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise SchemaError(f"tolerance eps must be finite and >= 0, got {self.eps}")

    def differs(self, a: FeatureValue, b: FeatureValue) -> bool:
        return abs(a - b) > self.eps


@dataclass(frozen=True)
class Binned:
    """Numeric values differ when they fall into different bins.

    ``edges`` are strictly increasing inclusive upper bounds: the bins are
    (-inf, e1], (e1, e2], ..., (em, inf).
    """

    edges: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(float(e) for e in self.edges))
        if not self.edges:
            raise SchemaError("binned comparator needs at least one edge")
        if any(not math.isfinite(e) for e in self.edges):
            raise SchemaError("binned edges must be finite")
        if any(a >= b for a, b in zip(self.edges, self.edges[1:])):
            raise SchemaError(f"binned edges must be strictly increasing, got {self.edges}")

    def bin_index(self, x: float) -> int:
        return bisect_left(self.edges, x)

    def differs(self, a: FeatureValue, b: FeatureValue) -> bool:
        return self.bin_index(a) != self.bin_index(b)


Comparator = Union[Exact, Tolerance, Binned]


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    comparator: Comparator = field(default_factory=Exact)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.kind in ("categorical", "boolean") and not isinstance(self.comparator, Exact):
            raise SchemaError(
                f"feature {self.name!r}: {self.kind} features require the exact comparator"
            )

    def value_error(self, value: FeatureValue) -> Optional[str]:
        """Return a message when ``value`` is not type-compatible with the kind."""
        if self.kind == "categorical":
            if not isinstance(value, str):
                return f"expected a string for categorical feature, got {value!r}"
        elif self.kind == "boolean":
            if not isinstance(value, bool):
                return f"expected a boolean, got {value!r}"
        elif self.kind == "ordinal":
            if isinstance(value, bool) or not isinstance(value, int):
                return f"expected an integer for ordinal feature, got {value!r}"
        else:  # continuous
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                return f"expected a number for continuous feature, got {value!r}"
            if not math.isfinite(value):
                return f"continuous value must be finite, got {value!r}"
        return None


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise SchemaError(f"duplicate feature names: {dupes}")

    def __len__(self) -> int:
        return len(self.features)

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise SchemaError(f"unknown feature {name!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)


@dataclass(frozen=True)
class PatientRecord:
    id: str
    values: tuple[FeatureValue, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    def value(self, schema: FeatureSchema, name: str) -> FeatureValue:
        return self.values[schema.index_of(name)]


@dataclass(frozen=True)
class SurvivalOutcome:
    """Right-censored time-to-event outcome.

    ``event`` is True when the event was observed at ``time`` and False when
    the subject was censored at ``time`` (event time only known to exceed it).
    """

    time: float
    event: bool
    endpoint: str = ""


@dataclass(frozen=True)
class TimeGrid:
    times: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if not self.times:
            raise ValueError("time grid must contain at least one point")
        if any(not math.isfinite(t) for t in self.times):
            raise ValueError("time grid values must be finite")
        if self.times[0] < 0:
            raise ValueError("time grid values must be >= 0")
        if any(a >= b for a, b in zip(self.times, self.times[1:])):
            raise ValueError("time grid must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class Prediction:
    """Survival curve sampled on a shared grid; a scalar risk is a 1-point grid."""

    grid: TimeGrid
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(self.grid):
            raise ValueError(
                f"prediction has {len(self.values)} values for a "
                f"{len(self.grid)}-point grid"
            )

    def at(self, t: float) -> float:
        """Step-function value at time ``t`` (previous grid point; clamped at ends)."""
        j = bisect_right(self.grid.times, t) - 1
        return self.values[max(j, 0)]


@dataclass(frozen=True)
class Cohort:
    schema: FeatureSchema
    patients: tuple[PatientRecord, ...]
    outcomes: Mapping[str, SurvivalOutcome]
    predictions: Optional[Mapping[str, Prediction]] = None

    def __post_init__(self):
        object.__setattr__(self, "patients", tuple(self.patients))
        object.__setattr__(self, "outcomes", dict(self.outcomes))
        if self.predictions is not None:
            object.__setattr__(self, "predictions", dict(self.predictions))

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.patients)

    def __len__(self) -> int:
        return len(self.patients)


@dataclass(frozen=True)
class Violation:
    """One data-quality problem found by :func:`validate_cohort`."""

    patient_id: Optional[str]
    field: str
    message: str

    def __str__(self) -> str:
        who = self.patient_id if self.patient_id is not None else "<cohort>"
        return f"{who}: {self.field}: {self.message}"


def validate_cohort(cohort: Cohort) -> list[Violation]:
    """Check every cohort invariant and return the violations found.

    Returns an empty list iff the cohort is well-formed. Violations are data,
    not failures: this function never raises on bad values.
    """
    out: list[Violation] = []
    schema = cohort.schema

    seen: set[str] = set()
    for p in cohort.patients:
        if p.id in seen:
            out.append(Violation(p.id, "id", "duplicate patient id"))
        seen.add(p.id)

    for p in cohort.patients:
        if len(p.values) != len(schema):
            out.append(
                Violation(
                    p.id,
                    "values",
                    f"{len(p.values)} values for a {len(schema)}-feature schema",
                )
            )
            continue
        for spec, v in zip(schema.features, p.values):
            msg = spec.value_error(v)
            if msg is not None:
                out.append(Violation(p.id, spec.name, msg))

    ids = set(seen)
    for pid in sorted(ids - set(cohort.outcomes)):
        out.append(Violation(pid, "outcome", "missing outcome"))
    for pid in sorted(set(cohort.outcomes) - ids):
        out.append(Violation(pid, "outcome", "outcome for unknown patient"))
    for pid, oc in cohort.outcomes.items():
        if not (isinstance(oc.time, (int, float)) and math.isfinite(oc.time) and oc.time > 0):
            out.append(Violation(pid, "time", f"time must be finite and > 0, got {oc.time!r}"))

    if cohort.predictions is not None:
        preds = cohort.predictions
        for pid in sorted(ids - set(preds)):
            out.append(Violation(pid, "prediction", "missing prediction"))
        for pid in sorted(set(preds) - ids):
            out.append(Violation(pid, "prediction", "prediction for unknown patient"))
        grids = {pred.grid.times for pred in preds.values()}
        if len(grids) > 1:
            out.append(Violation(None, "predictions", "predictions do not share one time grid"))
        for pid, pred in preds.items():
            for j, v in enumerate(pred.values):
                if not (0.0 <= v <= 1.0):
                    out.append(
                        Violation(pid, "prediction", f"value {v!r} outside [0,1] at grid index {j}")
                    )
            if any(a < b for a, b in zip(pred.values, pred.values[1:])):
                out.append(Violation(pid, "prediction", "survival values increase along the grid"))

    return out


def require_valid(cohort: Cohort, what: str = "cohort") -> None:
    """Raise :class:`SchemaError` listing all violations when the cohort is invalid."""
    violations = validate_cohort(cohort)
    if violations:
        listing = "\n  ".join(str(v) for v in violations[:20])
        more = "" if len(violations) <= 20 else f"\n  ... and {len(violations) - 20} more"
        raise SchemaError(f"invalid {what} ({len(violations)} violations):\n  {listing}{more}")
