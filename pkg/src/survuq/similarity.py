"""Patient-level similarity: nomogram-score distance plus a per-feature
zero-one mismatch count, and the resulting patient similarity rank (psr).

The combined loss between two patients is

    patient_loss = |points(a) - points(b)| + #{features judged different}

where "different" is decided by each feature's declared comparator. Ranking a
patient of interest against a training cohort sorts by this loss ascending,
ties broken by patient id so that ranks are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    Binned,
    Cohort,
    Exact,
    FeatureSchema,
    PatientRecord,
    SchemaError,
    Tolerance,
)
from .nomogram import NomogramSpec, score_points


@dataclass(frozen=True)
class PatientSimilarity:
    """One training patient's losses against a patient of interest."""

    patient_id: str
    l_nomogram: float
    l_entry: int
    l_patient: float
    psr: int


def _check_record(record: PatientRecord, schema: FeatureSchema) -> None:
    if len(record.values) != len(schema):
        raise SchemaError(
            f"patient {record.id!r} has {len(record.values)} values for a "
            f"{len(schema)}-feature schema"
        )


def entry_loss(a: PatientRecord, b: PatientRecord, schema: FeatureSchema) -> int:
    """Count of features on which ``a`` and ``b`` differ under their comparators."""
    _check_record(a, schema)
    _check_record(b, schema)
    return sum(
        1
        for spec, va, vb in zip(schema.features, a.values, b.values)
        if spec.comparator.differs(va, vb)
    )


def nomogram_loss(
    a: PatientRecord, b: PatientRecord, schema: FeatureSchema, spec: NomogramSpec
) -> int:
    """Absolute difference of the two patients' nomogram point totals."""
    return abs(score_points(a, schema, spec) - score_points(b, schema, spec))


def patient_loss(
    a: PatientRecord, b: PatientRecord, schema: FeatureSchema, spec: NomogramSpec
) -> float:
    """Combined similarity loss: nomogram distance plus entry mismatch count."""
    return nomogram_loss(a, b, schema, spec) + entry_loss(a, b, schema)


class SimilarityIndex:
    """Precomputed training columns and nomogram scores for fast ranking.

    Building the index costs one pass over the training cohort; ranking a
    patient of interest is then vectorized per feature.
    """

    def __init__(self, training: Cohort, spec: NomogramSpec):
        if len(training) == 0:
            raise ValueError("training cohort is empty")
        self.schema = training.schema
        self.spec = spec
        self.ids = [p.id for p in training.patients]
        self._columns = []
        for j, fspec in enumerate(self.schema.features):
            col = [p.values[j] for p in training.patients]
            if fspec.kind in ("categorical", "boolean"):
                self._columns.append(np.array(col, dtype=object))
            else:
                self._columns.append(np.array(col, dtype=float))
        self._scores = np.array(
            [score_points(p, self.schema, spec) for p in training.patients], dtype=float
        )

    def losses(self, poi: PatientRecord) -> tuple[np.ndarray, np.ndarray]:
        """(nomogram losses, entry losses) of every training patient vs ``poi``."""
        _check_record(poi, self.schema)
        n = len(self.ids)
        entries = np.zeros(n, dtype=int)
        for j, fspec in enumerate(self.schema.features):
            col = self._columns[j]
            v = poi.values[j]
            comp = fspec.comparator
            if isinstance(comp, Exact):
                entries += col != v
            elif isinstance(comp, Tolerance):
                entries += np.abs(col - float(v)) > comp.eps
            elif isinstance(comp, Binned):
                edges = np.asarray(comp.edges)
                entries += np.searchsorted(edges, col, side="left") != comp.bin_index(v)
            else:  # pragma: no cover - comparator union is closed
                raise TypeError(f"unknown comparator {comp!r}")
        nom = np.abs(self._scores - score_points(poi, self.schema, self.spec))
        return nom, entries

    def rank(self, poi: PatientRecord) -> list[PatientSimilarity]:
        nom, entries = self.losses(poi)
        total = nom + entries
        order = sorted(
            (i for i in range(len(self.ids)) if self.ids[i] != poi.id),
            key=lambda i: (total[i], self.ids[i]),
        )
        if not order:
            raise ValueError("training cohort contains only the patient of interest")
        return [
            PatientSimilarity(
                patient_id=self.ids[i],
                l_nomogram=float(nom[i]),
                l_entry=int(entries[i]),
                l_patient=float(total[i]),
                psr=r,
            )
            for r, i in enumerate(order, start=1)
        ]


def rank_patients(
    poi: PatientRecord,
    training: Cohort,
    spec: NomogramSpec,
    index: Optional[SimilarityIndex] = None,
) -> list[PatientSimilarity]:
    """Rank the training cohort by similarity loss against ``poi``.

    Ascending loss, ties broken by patient id; psr is the 1-based position.
    A training member with the same id as ``poi`` is excluded (its
    self-distance of zero would degenerate the nearest group).
    """
    if index is None:
        index = SimilarityIndex(training, spec)
    return index.rank(poi)
