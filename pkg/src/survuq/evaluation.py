"""Censoring-aware survival metrics and the UQ-constrained ROC sweep.

Provides fixed-horizon binarization of outcomes, Mann-Whitney ROC AUC,
Harrell's concordance index, the Kaplan-Meier product-limit estimator, the
IPCW integrated Brier score, and the sweep that retains only patients above
an uncertainty-score threshold and reports the resulting AUC curve. Model
uncertainty is the percentage increase of the best threshold-constrained AUC
over the unconstrained one.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import Prediction, SurvivalOutcome, SurvUqError, TimeGrid
from .calibration import GridMismatchError


class UndefinedMetricError(SurvUqError):
    """The metric is undefined on this input (e.g. a single-class label set)."""


# ---------------------------------------------------------------------------
# fixed-horizon binarization


@dataclass(frozen=True)
class BinaryLabelSet:
    """Event-by-horizon labels; patients censored before the horizon are
    excluded (with the reason recorded) because their status is unknown."""

    horizon: float
    labels: Mapping[str, bool]  # True = event by horizon
    excluded: Mapping[str, str]

    @property
    def n_positive(self) -> int:
        return sum(self.labels.values())

    @property
    def n_negative(self) -> int:
        return len(self.labels) - self.n_positive


def binarize(outcomes: Mapping[str, SurvivalOutcome], horizon: float) -> BinaryLabelSet:
    """Label each patient positive/negative for an event by ``horizon``."""
    if not (horizon > 0 and math.isfinite(horizon)):
        raise ValueError(f"horizon must be finite and > 0, got {horizon}")
    labels: dict[str, bool] = {}
    excluded: dict[str, str] = {}
    for pid, oc in outcomes.items():
        if oc.event and oc.time <= horizon:
            labels[pid] = True
        elif oc.time >= horizon:
            labels[pid] = False
        else:
            excluded[pid] = f"censored at {oc.time} before horizon {horizon}"
    if not labels:
        raise UndefinedMetricError(f"no patient is labelable at horizon {horizon}")
    return BinaryLabelSet(horizon=horizon, labels=labels, excluded=excluded)


# ---------------------------------------------------------------------------
# ROC AUC (Mann-Whitney with midranks)


def mann_whitney_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """P(score_pos > score_neg) + 0.5 P(equal), via midranks."""
    scores = np.asarray(scores, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.size, dtype=float)
    ranks[order] = np.arange(1, scores.size + 1)
    # average ranks within tie groups
    sorted_scores = scores[order]
    i = 0
    while i < sorted_scores.size:
        j = i
        while j + 1 < sorted_scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i : j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    rank_sum = ranks[positive].sum()
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_auc(scores: Mapping[str, float], labels: BinaryLabelSet) -> float:
    """AUC of per-patient scores against binarized labels (higher = riskier)."""
    ids = list(labels.labels)
    missing = [pid for pid in ids if pid not in scores]
    if missing:
        raise KeyError(f"no score for labeled patients: {missing[:5]}")
    s = np.array([scores[pid] for pid in ids], dtype=float)
    y = np.array([labels.labels[pid] for pid in ids], dtype=bool)
    return mann_whitney_auc(s, y)


# ---------------------------------------------------------------------------
# UQ-constrained sweep


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    n_retained: int
    auc: Optional[float]
    skipped: Optional[str] = None


@dataclass(frozen=True)
class SweepCurve:
    points: tuple[SweepPoint, ...]

    def valid_points(self) -> list[SweepPoint]:
        return [p for p in self.points if p.auc is not None]


@dataclass(frozen=True)
class ModelUncertainty:
    base_auc: float
    max_constrained_auc: float
    uncertainty_pct: float

    @property
    def uncertainty_ratio(self) -> float:
        return self.max_constrained_auc / self.base_auc


def default_thresholds(n: int = 101) -> list[float]:
    """Evenly spaced thresholds on [0, 1] (always includes 0)."""
    if n < 2:
        raise ValueError("need at least 2 thresholds")
    return [i / (n - 1) for i in range(n)]


def uq_sweep(
    model_scores: Mapping[str, float],
    labels: BinaryLabelSet,
    uq_scores: Mapping[str, float],
    thresholds: Optional[Sequence[float]] = None,
    min_retained: int = 20,
) -> SweepCurve:
    """AUC over patients whose uncertainty score clears each threshold.

    A threshold's point is skipped (not zeroed) when fewer than
    ``min_retained`` patients remain or only one class survives the cut.
    """
    if thresholds is None:
        thresholds = default_thresholds()
    thresholds = list(thresholds)
    if not thresholds:
        raise ValueError("threshold grid is empty")
    if any(a >= b for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    if min_retained < 2:
        raise ValueError(f"min_retained must be >= 2, got {min_retained}")
    ids = [pid for pid in labels.labels if pid in uq_scores and pid in model_scores]
    if not ids:
        raise UndefinedMetricError("no labeled patient has both a score and a uq value")
    s = np.array([model_scores[pid] for pid in ids], dtype=float)
    y = np.array([labels.labels[pid] for pid in ids], dtype=bool)
    u = np.array([uq_scores[pid] for pid in ids], dtype=float)
    points: list[SweepPoint] = []
    for tau in thresholds:
        keep = u >= tau
        n = int(keep.sum())
        if n < min_retained:
            points.append(SweepPoint(tau, n, None, f"fewer than {min_retained} retained"))
            continue
        ys = y[keep]
        if ys.all() or not ys.any():
            points.append(SweepPoint(tau, n, None, "single-class retention"))
            continue
        points.append(SweepPoint(tau, n, mann_whitney_auc(s[keep], ys)))
    return SweepCurve(points=tuple(points))


def model_uncertainty(curve: SweepCurve, base_auc: float) -> ModelUncertainty:
    """Percentage AUC gain of the best-constrained point over the base AUC."""
    valid = curve.valid_points()
    if not valid:
        raise ValueError("sweep curve has no valid points")
    if not any(p.threshold == 0.0 for p in valid):
        raise ValueError("sweep curve needs a valid point at threshold 0")
    best = max(p.auc for p in valid)
    return ModelUncertainty(
        base_auc=base_auc,
        max_constrained_auc=best,
        uncertainty_pct=(best / base_auc - 1.0) * 100.0,
    )


# ---------------------------------------------------------------------------
# concordance index


def harrell_c_index(
    times: Sequence[float], events: Sequence[bool], risks: Sequence[float]
) -> float:
    """Harrell's C: over pairs where the earlier subject had an observed event,
    the fraction ordered correctly by risk (risk ties count 0.5)."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(events, dtype=bool)
    r = np.asarray(risks, dtype=float)
    if not (t.shape == e.shape == r.shape):
        raise ValueError("times, events and risks must be aligned")
    # pair (i, j) comparable when event_i and t_i < t_j
    comparable = e[:, None] & (t[:, None] < t[None, :])
    n_comp = int(comparable.sum())
    if n_comp == 0:
        raise UndefinedMetricError("no comparable pairs")
    higher = r[:, None] > r[None, :]
    tied = r[:, None] == r[None, :]
    concordant = float((comparable & higher).sum()) + 0.5 * float((comparable & tied).sum())
    return concordant / n_comp


# ---------------------------------------------------------------------------
# Kaplan-Meier and the IPCW integrated Brier score


@dataclass(frozen=True)
class KaplanMeierCurve:
    """Product-limit survival estimate: right-continuous step function with
    steps only at times where at least one event occurred."""

    times: tuple[float, ...]
    survival: tuple[float, ...]

    def at(self, t: float) -> float:
        """S(t), right-continuous."""
        j = bisect_right(self.times, t) - 1
        return 1.0 if j < 0 else self.survival[j]

    def before(self, t: float) -> float:
        """Left limit S(t-)."""
        j = bisect_left(self.times, t) - 1
        return 1.0 if j < 0 else self.survival[j]


def km_estimator(times: Sequence[float], events: Sequence[bool]) -> KaplanMeierCurve:
    """Kaplan-Meier estimate of S(t); flip the event flags to estimate the
    censoring distribution G(t) for IPCW weighting."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(events, dtype=bool)
    if t.size == 0:
        raise ValueError("empty sample")
    order = np.argsort(t, kind="mergesort")
    t, e = t[order], e[order]
    step_times: list[float] = []
    step_surv: list[float] = []
    s = 1.0
    n = t.size
    i = 0
    while i < n:
        j = i
        while j + 1 < n and t[j + 1] == t[i]:
            j += 1
        d = int(e[i : j + 1].sum())
        at_risk = n - i
        if d > 0:
            s *= 1.0 - d / at_risk
            step_times.append(float(t[i]))
            step_surv.append(s)
        i = j + 1
    return KaplanMeierCurve(times=tuple(step_times), survival=tuple(step_surv))


@dataclass(frozen=True)
class IbsResult:
    value: float
    truncated_at: Optional[float] = None  # last usable time when G hit zero


def integrated_brier_score(
    predictions: Mapping[str, Prediction],
    outcomes: Mapping[str, SurvivalOutcome],
    grid: TimeGrid,
) -> IbsResult:
    """IPCW Brier score averaged over the grid by trapezoidal integration.

    Per time t, an observed event before t contributes (0 - S_hat(t))^2
    weighted by 1/G(T-), a subject still at risk contributes
    (1 - S_hat(t))^2 weighted by 1/G(t), and a subject censored before t
    contributes nothing. Integration truncates where the censoring survival
    G reaches zero; the truncation point is recorded.
    """
    ids = [pid for pid in outcomes if pid in predictions]
    if not ids:
        raise ValueError("no overlapping patients between predictions and outcomes")
    for pid in ids:
        if predictions[pid].grid.times != grid.times:
            raise GridMismatchError(f"prediction for {pid!r} is not on the evaluation grid")
    t_obs = np.array([outcomes[pid].time for pid in ids], dtype=float)
    ev = np.array([outcomes[pid].event for pid in ids], dtype=bool)
    curves = np.array([predictions[pid].values for pid in ids], dtype=float)
    g = km_estimator(t_obs, ~ev)
    g_before_tobs = np.array([g.before(x) for x in t_obs])

    grid_times = np.asarray(grid.times)
    g_at = np.array([g.at(x) for x in grid_times])
    usable = int((g_at > 0).sum())  # G is non-increasing, so this is a prefix length
    if usable == 0:
        raise UndefinedMetricError("censoring survival is zero on the whole grid")
    truncated_at = float(grid_times[usable - 1]) if usable < len(grid_times) else None

    bs = np.zeros(usable)
    for j in range(usable):
        tj = grid_times[j]
        s_hat = curves[:, j]
        event_before = ev & (t_obs <= tj)
        at_risk = t_obs > tj
        contrib = np.zeros(len(ids))
        contrib[event_before] = s_hat[event_before] ** 2 / g_before_tobs[event_before]
        contrib[at_risk] = (1.0 - s_hat[at_risk]) ** 2 / g_at[j]
        bs[j] = contrib.mean()
    if usable == 1:
        return IbsResult(value=float(bs[0]), truncated_at=truncated_at)
    span = grid_times[usable - 1] - grid_times[0]
    value = float(np.trapezoid(bs, grid_times[:usable]) / span)
    return IbsResult(value=value, truncated_at=truncated_at)


def curve_to_risk(prediction: Prediction, horizon: float) -> float:
    """Scalar risk score 1 - S(horizon), using the step-function convention
    (previous grid value; clamped at both grid ends)."""
    return 1.0 - prediction.at(horizon)
