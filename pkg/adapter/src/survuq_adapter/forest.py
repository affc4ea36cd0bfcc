"""Forest-family survival curves via leaf co-occupancy Kaplan-Meier.

A random forest learns risk structure by classifying event-before-median-
follow-up; survival curves then come from a Kaplan-Meier estimate in which
each training subject is weighted by how often it shares a leaf with the
query subject across trees (the forest-kernel neighborhood). Censored
subjects contribute correctly through the KM product, so no imputation of
censored times is needed.
"""

from __future__ import annotations

import numpy as np
from sklearn.ensemble import RandomForestClassifier, RandomForestRegressor

DEFAULT_HYPERPARAMETERS = {
    "n_estimators": 200,
    "min_samples_leaf": 10,
    "max_features": "sqrt",
}


class ForestSurvival:
    def __init__(self, hyperparameters: dict | None = None, seed: int = 0):
        hp = dict(DEFAULT_HYPERPARAMETERS)
        hp.update(hyperparameters or {})
        self.hyperparameters = hp
        self.seed = seed
        self._forest = None
        self._train_leaves = None
        self._times = None
        self._events = None

    def fit(self, X: np.ndarray, times: np.ndarray, events: np.ndarray) -> "ForestSurvival":
        horizon = float(np.median(times))
        labelable = (events & (times <= horizon)) | (times >= horizon)
        y = (events & (times <= horizon)).astype(int)
        kwargs = dict(
            n_estimators=int(self.hyperparameters["n_estimators"]),
            min_samples_leaf=int(self.hyperparameters["min_samples_leaf"]),
            max_features=self.hyperparameters["max_features"],
            random_state=self.seed,
        )
        # classify event-by-median-horizon when both classes exist on the
        # labelable subset; otherwise fall back to a time regressor (we only
        # need the leaf structure, the KM weighting handles censoring)
        if labelable.sum() >= 4 and 0 < y[labelable].sum() < labelable.sum():
            forest = RandomForestClassifier(**kwargs)
            forest.fit(X[labelable], y[labelable])
        else:
            forest = RandomForestRegressor(**kwargs)
            forest.fit(X, times)
        self._forest = forest
        self._train_leaves = forest.apply(X)  # (n_train, n_trees)
        self._times = np.asarray(times, dtype=float)
        self._events = np.asarray(events, dtype=bool)
        return self

    def predict_curves(self, X: np.ndarray, grid: np.ndarray) -> np.ndarray:
        """Weighted-KM survival curves on ``grid``, one row per query subject."""
        if self._forest is None:
            raise RuntimeError("fit before predict")
        query_leaves = self._forest.apply(X)  # (m, n_trees)
        n = self._train_leaves.shape[0]
        m = query_leaves.shape[0]
        weights = np.zeros((m, n))
        for t in range(self._train_leaves.shape[1]):
            weights += query_leaves[:, t : t + 1] == self._train_leaves[None, :, t]

        order = np.argsort(self._times, kind="mergesort")
        times = self._times[order]
        events = self._events[order]
        weights = weights[:, order]

        # reverse cumulative weight = weighted number at risk
        at_risk = np.cumsum(weights[:, ::-1], axis=1)[:, ::-1]
        surv = np.ones((m, len(grid)))
        s = np.ones(m)
        boundaries = np.searchsorted(times, grid, side="right")
        start = 0
        gj = 0
        while start < n:
            stop = start
            while stop + 1 < n and times[stop + 1] == times[start]:
                stop += 1
            stop += 1
            while gj < len(grid) and boundaries[gj] <= start:
                surv[:, gj] = s
                gj += 1
            d = weights[:, start:stop] @ events[start:stop].astype(float)
            risk = at_risk[:, start]
            with np.errstate(invalid="ignore", divide="ignore"):
                factor = np.where(risk > 0, 1.0 - d / np.where(risk > 0, risk, 1.0), 1.0)
            s = s * factor
            start = stop
        while gj < len(grid):
            surv[:, gj] = s
            gj += 1
        return surv
