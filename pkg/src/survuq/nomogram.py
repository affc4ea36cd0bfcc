"""Declarative nomogram engine: data-driven point tables with risk cutoffs.

A nomogram is a list of criteria; each criterion carries rules that map
feature-value predicates to non-negative points. For every patient exactly one
rule per criterion must fire, and the patient's score is the sum of the fired
points. Point tables are data, not code: they ship as JSON documents, and the
bundled ``icp_nomogram.json`` encodes the clinical intracranial-progression
table used throughout this package.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from typing import Optional

from .core import DataError, FeatureSchema, FeatureValue, PatientRecord, SurvUqError
from .io import _load_json, dump_json


class RuleCoverageError(SurvUqError):
    """No rule (or more than one) fired for a criterion: the point table is
    malformed or the patient is outside the nomogram's domain."""


@dataclass(frozen=True)
class Condition:
    """Conjunction of constraints on one feature's value."""

    feature: str
    equals: Optional[FeatureValue] = None
    not_equals: Optional[FeatureValue] = None
    one_of: Optional[tuple[FeatureValue, ...]] = None
    ge: Optional[float] = None
    gt: Optional[float] = None
    le: Optional[float] = None
    lt: Optional[float] = None

    def matches(self, value: FeatureValue) -> bool:
        if self.equals is not None and value != self.equals:
            return False
        if self.not_equals is not None and value == self.not_equals:
            return False
        if self.one_of is not None and value not in self.one_of:
            return False
        if self.ge is not None and not value >= self.ge:
            return False
        if self.gt is not None and not value > self.gt:
            return False
        if self.le is not None and not value <= self.le:
            return False
        if self.lt is not None and not value < self.lt:
            return False
        return True


@dataclass(frozen=True)
class Rule:
    conditions: tuple[Condition, ...]
    points: int

    def __post_init__(self):
        if self.points < 0:
            raise ValueError(f"rule points must be >= 0, got {self.points}")

    def matches(self, patient: PatientRecord, schema: FeatureSchema) -> bool:
        return all(c.matches(patient.value(schema, c.feature)) for c in self.conditions)


@dataclass(frozen=True)
class Criterion:
    name: str
    rules: tuple[Rule, ...]

    @property
    def max_points(self) -> int:
        return max(r.points for r in self.rules)


@dataclass(frozen=True)
class NomogramSpec:
    name: str
    criteria: tuple[Criterion, ...]
    risk_cutoff: int
    risk_labels: tuple[str, str]  # (low, high)

    @property
    def max_points(self) -> int:
        return sum(c.max_points for c in self.criteria)


def score_points(patient: PatientRecord, schema: FeatureSchema, spec: NomogramSpec) -> int:
    """Total nomogram points for ``patient``: the sum of the fired rule per criterion.

    Raises :class:`RuleCoverageError` unless exactly one rule fires for every
    criterion.
    """
    total = 0
    for criterion in spec.criteria:
        fired = [r for r in criterion.rules if r.matches(patient, schema)]
        if len(fired) != 1:
            raise RuleCoverageError(
                f"criterion {criterion.name!r}: {len(fired)} rules fired for "
                f"patient {patient.id!r} (exactly one required)"
            )
        total += fired[0].points
    return total


def risk_class(points: int, spec: NomogramSpec) -> str:
    """Risk label for a point total: low below the cutoff, high at or above it."""
    if points < 0:
        raise ValueError(f"points must be >= 0, got {points}")
    low, high = spec.risk_labels
    return low if points < spec.risk_cutoff else high


# ---------------------------------------------------------------------------
# JSON representation

_CONDITION_KEYS = ("equals", "not_equals", "one_of", "ge", "gt", "le", "lt")


def _condition_from_json(obj: dict, path: Optional[str]) -> Condition:
    if "feature" not in obj:
        raise DataError(f"condition missing 'feature': {obj!r}", path=path)
    kwargs = {}
    for key in _CONDITION_KEYS:
        if key in obj:
            v = obj[key]
            kwargs[key] = tuple(v) if key == "one_of" else v
    if not kwargs:
        raise DataError(f"condition on {obj['feature']!r} has no constraints", path=path)
    return Condition(feature=str(obj["feature"]), **kwargs)


def _condition_to_json(c: Condition) -> dict:
    out: dict = {"feature": c.feature}
    for key in _CONDITION_KEYS:
        v = getattr(c, key)
        if v is not None:
            out[key] = list(v) if key == "one_of" else v
    return out


def nomogram_from_json(doc: dict, path: Optional[str] = None) -> NomogramSpec:
    try:
        criteria = []
        for cdoc in doc["criteria"]:
            rules = tuple(
                Rule(
                    conditions=tuple(
                        _condition_from_json(c, path) for c in rdoc.get("when", [])
                    ),
                    points=int(rdoc["points"]),
                )
                for rdoc in cdoc["rules"]
            )
            criteria.append(Criterion(name=str(cdoc["name"]), rules=rules))
        labels = doc["risk_labels"]
        return NomogramSpec(
            name=str(doc.get("name", "")),
            criteria=tuple(criteria),
            risk_cutoff=int(doc["risk_cutoff"]),
            risk_labels=(str(labels["low"]), str(labels["high"])),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed nomogram spec: {e!r}", path=path) from e


def nomogram_to_json(spec: NomogramSpec) -> dict:
    return {
        "name": spec.name,
        "risk_cutoff": spec.risk_cutoff,
        "risk_labels": {"low": spec.risk_labels[0], "high": spec.risk_labels[1]},
        "criteria": [
            {
                "name": c.name,
                "rules": [
                    {"when": [_condition_to_json(cond) for cond in r.conditions], "points": r.points}
                    for r in c.rules
                ],
            }
            for c in spec.criteria
        ],
    }


def load_nomogram(path: str) -> NomogramSpec:
    return nomogram_from_json(_load_json(path), path=path)


def save_nomogram(spec: NomogramSpec, path: str) -> None:
    dump_json(nomogram_to_json(spec), path)


def bundled_icp_nomogram() -> NomogramSpec:
    """The packaged clinical intracranial-progression point table.

    Expects features ``histology`` (categorical; ``melanoma`` or anything
    else), ``n_treated_mets`` (ordinal, >= 1), ``prior_wbrt`` (boolean) and
    ``years_dx_to_brain_mets`` (continuous). Patients with zero treated
    metastases are outside the table's domain and raise
    :class:`RuleCoverageError`.
    """
    ref = importlib.resources.files("survuq").joinpath("data/icp_nomogram.json")
    import json as _json

    return nomogram_from_json(_json.loads(ref.read_text(encoding="utf-8")), path=str(ref))
