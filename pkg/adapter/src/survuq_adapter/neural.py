"""Neural multi-task survival model: an MLP over discrete-time hazards.

The shared grid defines time bins (t_{j-1}, t_j]; one output head per bin
predicts the conditional hazard, trained with the censored discrete-time
likelihood (masked binary cross-entropy). Survival is the running product of
(1 - hazard), so exported curves are monotone in [0, 1] by construction.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

DEFAULT_HYPERPARAMETERS = {
    "hidden": 32,
    "epochs": 300,
    "lr": 0.01,
    "weight_decay": 1e-4,
}


class NeuralSurvival:
    def __init__(self, hyperparameters: dict | None = None, seed: int = 0):
        hp = dict(DEFAULT_HYPERPARAMETERS)
        hp.update(hyperparameters or {})
        self.hyperparameters = hp
        self.seed = seed
        self._net = None
        self._grid = None
        self._mu = None
        self._sd = None

    def _bin_targets(self, times: np.ndarray, events: np.ndarray, grid: np.ndarray):
        """Per-bin hazard labels and masks under right censoring.

        A subject observed past bin j contributes label 0 there; an event in
        bin j contributes label 1 there; bins after the observation (and the
        censoring bin itself) are masked out of the loss.
        """
        k = len(grid)
        n = len(times)
        labels = np.zeros((n, k), dtype=np.float32)
        mask = np.zeros((n, k), dtype=np.float32)
        bins = np.searchsorted(grid, times, side="left")  # bin index of the observation
        for i in range(n):
            b = min(int(bins[i]), k - 1) if events[i] else int(bins[i])
            if events[i]:
                mask[i, : b + 1] = 1.0
                labels[i, b] = 1.0
            else:
                mask[i, :b] = 1.0  # survived every bin fully before censoring
        return labels, mask

    def fit(self, X: np.ndarray, times: np.ndarray, events: np.ndarray, grid: np.ndarray):
        torch.manual_seed(self.seed)
        self._grid = np.asarray(grid, dtype=float)
        X = np.asarray(X, dtype=np.float32)
        self._mu = X.mean(axis=0)
        self._sd = np.where(X.std(axis=0) > 0, X.std(axis=0), 1.0)
        Xn = (X - self._mu) / self._sd
        labels, mask = self._bin_targets(times, events, self._grid)

        hidden = int(self.hyperparameters["hidden"])
        net = nn.Sequential(
            nn.Linear(X.shape[1], hidden),
            nn.ReLU(),
            nn.Linear(hidden, len(self._grid)),
        )
        opt = torch.optim.Adam(
            net.parameters(),
            lr=float(self.hyperparameters["lr"]),
            weight_decay=float(self.hyperparameters["weight_decay"]),
        )
        xt = torch.from_numpy(Xn)
        yt = torch.from_numpy(labels)
        mt = torch.from_numpy(mask)
        bce = nn.BCEWithLogitsLoss(reduction="none")
        for _ in range(int(self.hyperparameters["epochs"])):
            opt.zero_grad()
            logits = net(xt)
            loss = (bce(logits, yt) * mt).sum() / mt.sum().clamp(min=1.0)
            loss.backward()
            opt.step()
        net.eval()
        self._net = net
        return self

    def predict_curves(self, X: np.ndarray, grid: np.ndarray) -> np.ndarray:
        if self._net is None:
            raise RuntimeError("fit before predict")
        if not np.array_equal(grid, self._grid):
            raise ValueError("prediction grid differs from the training grid")
        Xn = (np.asarray(X, dtype=np.float32) - self._mu) / self._sd
        with torch.no_grad():
            hazards = torch.sigmoid(self._net(torch.from_numpy(Xn))).numpy().astype(float)
        return np.cumprod(1.0 - hazards, axis=1)
