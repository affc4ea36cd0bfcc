"""Group-level calibrated predictions and the prediction similarity rank (msr).

Each group's curve is a softmax-weighted average of its members' predicted
survival curves, weighted by exp(-loss) so the most similar members dominate.
Groups are then ranked by their squared distance to the patient of interest's
own prediction.

Raw nomogram-scaled losses saturate the softmax (the closest member gets
essentially all the weight); the ``std`` loss-scale mode divides in-group
losses by their standard deviation first, which keeps the weighting spread
without changing singleton or equal-loss cases.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import Prediction, SurvUqError
from .grouping import PatientGroup

LOSS_SCALES = ("raw", "std")

# a convex combination of monotone curves is monotone; anything worse than
# this is a logic error, not float noise
_MONOTONE_TOL = 1e-12


class GridMismatchError(SurvUqError):
    """Two curves that must share a time grid do not."""


@dataclass(frozen=True)
class GroupPrediction:
    """A group's calibrated curve; l_pred and msr are filled by rank_groups."""

    gsr: int
    weights: tuple[float, ...]
    curve: Prediction
    l_pred: Optional[float] = None
    msr: Optional[int] = None


def softmax_weights(losses: Sequence[float], loss_scale: str = "raw") -> np.ndarray:
    """Normalized exp(-loss) weights, shifted by the minimum loss for stability."""
    if loss_scale not in LOSS_SCALES:
        raise ValueError(f"loss_scale must be one of {LOSS_SCALES}, got {loss_scale!r}")
    arr = np.asarray(losses, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot weight an empty group")
    if loss_scale == "std":
        sigma = float(arr.std())
        if sigma > 0:
            arr = arr / sigma
    shifted = arr - arr.min()
    w = np.exp(-shifted)
    return w / w.sum()


def group_prediction(
    group: PatientGroup,
    predictions: Mapping[str, Prediction],
    loss_scale: str = "raw",
) -> GroupPrediction:
    """Softmax-weighted average of the group members' survival curves."""
    curves = []
    for pid in group.member_ids:
        if pid not in predictions:
            raise KeyError(f"no prediction for group member {pid!r}")
        curves.append(predictions[pid])
    grid = curves[0].grid
    for pid, c in zip(group.member_ids, curves):
        if c.grid.times != grid.times:
            raise GridMismatchError(f"prediction for {pid!r} is not on the shared grid")
    weights = softmax_weights(group.member_losses, loss_scale)
    stacked = np.array([c.values for c in curves], dtype=float)
    # anchored form: exact when member curves coincide (a convex combination
    # of identical curves must be that curve bit-for-bit, so equal-prediction
    # groups stay exactly tied downstream)
    mixed = stacked[0] + weights @ (stacked - stacked[0])
    diffs = np.diff(mixed)
    if diffs.size and diffs.max() > _MONOTONE_TOL:
        raise AssertionError(
            f"calibrated curve increases by {diffs.max():.3e}; inputs were not monotone"
        )
    # clamp float noise so the result is exactly non-increasing and in [0, 1]
    mixed = np.minimum.accumulate(np.clip(mixed, 0.0, 1.0))
    return GroupPrediction(
        gsr=group.gsr,
        weights=tuple(float(w) for w in weights),
        curve=Prediction(grid=grid, values=tuple(mixed)),
    )


def prediction_loss(pred_poi: Prediction, pred_g: Prediction) -> float:
    """Squared Euclidean distance between two curves on the same grid."""
    if pred_poi.grid.times != pred_g.grid.times:
        raise GridMismatchError("predictions are not on the same time grid")
    d = np.asarray(pred_poi.values) - np.asarray(pred_g.values)
    return float(np.dot(d, d))


def rank_groups(
    group_curves: Sequence[GroupPrediction], pred_poi: Prediction
) -> list[GroupPrediction]:
    """Fill l_pred and msr: ascending prediction loss, ties broken by gsr.

    The returned list keeps the input (gsr) order; msr is a permutation of
    1..k. Ties in l_pred are visible in the losses themselves, which is what
    tie-aware concordance scoring consumes.
    """
    if not group_curves:
        raise ValueError("no groups to rank")
    losses = [prediction_loss(pred_poi, gc.curve) for gc in group_curves]
    order = sorted(range(len(group_curves)), key=lambda i: (losses[i], group_curves[i].gsr))
    msr = [0] * len(group_curves)
    for position, i in enumerate(order, start=1):
        msr[i] = position
    return [
        replace(gc, l_pred=losses[i], msr=msr[i]) for i, gc in enumerate(group_curves)
    ]
