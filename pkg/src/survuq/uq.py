"""Personalized uncertainty score: rank concordance between group similarity
ranks (gsr) and prediction similarity ranks (msr) for one patient of interest.

A score of 1 means the groups most similar in feature space also received the
most similar predictions; 0.5 is chance level; higher scores mean the model's
prediction for this patient is better supported by its feature-space
neighbours.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .calibration import group_prediction, rank_groups
from .core import Cohort, PatientRecord, Prediction
from .grouping import partition_by_rank
from .nomogram import NomogramSpec
from .similarity import SimilarityIndex, rank_patients


@dataclass(frozen=True)
class UqScore:
    patient_id: str
    uq: float
    k: int
    ranks: tuple[tuple[int, int], ...]  # (gsr, msr) pairs; msr tie-aware


def rank_concordance(gsr: Sequence[int], msr: Sequence[int]) -> float:
    """Concordance index between a tie-free ranking and a possibly tied one.

    Over all pairs ordered by ``gsr``: a pair scores 1 when ``msr`` orders it
    the same way, 0.5 when ``msr`` ties it, 0 otherwise.
    """
    k = len(gsr)
    if len(msr) != k:
        raise ValueError(f"rank lists differ in length: {k} vs {len(msr)}")
    if k < 2:
        raise ValueError("concordance needs at least 2 ranks")
    if sorted(gsr) != list(range(1, k + 1)):
        raise ValueError("gsr must be a permutation of 1..k")
    score = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            lo, hi = (i, j) if gsr[i] < gsr[j] else (j, i)
            if msr[lo] < msr[hi]:
                score += 1.0
            elif msr[lo] == msr[hi]:
                score += 0.5
    return score / (k * (k - 1) / 2)


def tie_aware_ranks(values: Sequence[float]) -> list[int]:
    """Competition ranks (1-based, ties share the smallest rank)."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0] * len(values)
    for pos, i in enumerate(order):
        if pos > 0 and values[i] == values[order[pos - 1]]:
            ranks[i] = ranks[order[pos - 1]]
        else:
            ranks[i] = pos + 1
    return ranks


def personalized_uq(
    poi: PatientRecord,
    poi_prediction: Prediction,
    training: Cohort,
    spec: NomogramSpec,
    k: int = 10,
    loss_scale: str = "raw",
    predictions: Optional[Mapping[str, Prediction]] = None,
    index: Optional[SimilarityIndex] = None,
) -> UqScore:
    """Score one patient of interest against a training cohort.

    Pipeline: rank training patients by similarity loss, bucket the ranking
    into ``k`` groups, calibrate a curve per group, rank groups by distance to
    the patient's own prediction, and return the concordance of the two
    rankings. Tied prediction losses are scored as ties (0.5 per pair), so a
    model that predicts the same curve for everyone scores 0.5.
    """
    if predictions is None:
        predictions = training.predictions
    if predictions is None:
        raise ValueError("no training predictions available")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    ranked = rank_patients(poi, training, spec, index=index)
    if k > len(ranked):
        raise ValueError(f"k={k} exceeds the {len(ranked)} rankable training patients")
    groups = partition_by_rank(ranked, k)
    curves = [group_prediction(g, predictions, loss_scale) for g in groups]
    curves = rank_groups(curves, poi_prediction)
    gsr = [gc.gsr for gc in curves]
    msr = tie_aware_ranks([gc.l_pred for gc in curves])
    uq = rank_concordance(gsr, msr)
    return UqScore(patient_id=poi.id, uq=uq, k=k, ranks=tuple(zip(gsr, msr)))


def score_cohort(
    test: Cohort,
    training: Cohort,
    spec: NomogramSpec,
    k: int = 10,
    loss_scale: str = "raw",
    training_predictions: Optional[Mapping[str, Prediction]] = None,
    test_predictions: Optional[Mapping[str, Prediction]] = None,
    threads: int = 0,
) -> list[UqScore]:
    """Score every test patient; output order follows the test cohort order.

    ``threads`` = 0 picks a worker count automatically; 1 disables the pool.
    Results are identical regardless of thread count.
    """
    if training_predictions is None:
        training_predictions = training.predictions
    if test_predictions is None:
        test_predictions = test.predictions
    if training_predictions is None or test_predictions is None:
        raise ValueError("both training and test predictions are required")
    index = SimilarityIndex(training, spec)

    def one(p: PatientRecord) -> UqScore:
        return personalized_uq(
            p,
            test_predictions[p.id],
            training,
            spec,
            k=k,
            loss_scale=loss_scale,
            predictions=training_predictions,
            index=index,
        )

    if threads == 1 or len(test) <= 1:
        return [one(p) for p in test.patients]
    workers = threads if threads > 0 else None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, test.patients))
