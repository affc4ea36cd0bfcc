"""Cox proportional hazards: Newton-Raphson partial-likelihood fitting with
Efron or Breslow tie handling, Breslow baseline cumulative hazard, and
survival-curve prediction S(t|x) = exp(-H0(t) * exp(x'b)).

The Newton iteration uses step-halving so the log partial likelihood never
decreases across accepted steps; separation (a coefficient running away) is
reported as an explicit error instead of a garbage fit.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Cohort, DataError, Prediction, SurvUqError, TimeGrid
from .io import _load_json, dump_json

TIE_METHODS = ("efron", "breslow")

# |beta| beyond this is treated as separation rather than a real estimate
_SEPARATION_BOUND = 50.0


class FitError(SurvUqError):
    """Fitting failed (no events, singular Hessian, separation, ...)."""


class ConvergenceError(FitError):
    def __init__(self, message: str, iterations: int, loglik: float):
        super().__init__(message)
        self.iterations = iterations
        self.loglik = loglik


@dataclass(frozen=True)
class CoxModel:
    coefficients: tuple[float, ...]
    covariate_names: tuple[str, ...]
    baseline_times: tuple[float, ...]
    baseline_cumhaz: tuple[float, ...]
    ties: str
    iterations: int
    log_partial_likelihood: float
    converged: bool
    categorical_levels: dict[str, list[str]]

    def cumulative_hazard(self, t: float) -> float:
        j = bisect_right(self.baseline_times, t) - 1
        return 0.0 if j < 0 else self.baseline_cumhaz[j]


def _group_by_time(times: np.ndarray, events: np.ndarray):
    """Yield (start, stop, n_events) for runs of equal time, ascending."""
    n = times.size
    i = 0
    while i < n:
        j = i
        while j + 1 < n and times[j + 1] == times[i]:
            j += 1
        yield i, j + 1, int(events[i : j + 1].sum())
        i = j + 1


def partial_likelihood_parts(
    X: np.ndarray,
    times: Sequence[float],
    events: Sequence[bool],
    beta: np.ndarray,
    ties: str = "efron",
    ridge: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Log partial likelihood with its gradient and Hessian at ``beta``.

    A ridge penalty subtracts 0.5 * ridge * ||beta||^2 from the objective
    (and adjusts the derivatives consistently).
    """
    if ties not in TIE_METHODS:
        raise ValueError(f"ties must be one of {TIE_METHODS}, got {ties!r}")
    X = np.asarray(X, dtype=float)
    t = np.asarray(times, dtype=float)
    e = np.asarray(events, dtype=bool)
    beta = np.asarray(beta, dtype=float)
    n, d = X.shape
    order = np.argsort(t, kind="mergesort")
    X, t, e = X[order], t[order], e[order]

    eta = X @ beta
    eta = np.clip(eta, -700, 700)  # exp overflow guard; separation is caught upstream
    w = np.exp(eta)
    wx = X * w[:, None]

    loglik = 0.0
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    # walk distinct times from the latest backwards, growing the risk set
    groups = list(_group_by_time(t, e))
    s0 = 0.0
    s1 = np.zeros(d)
    s2 = np.zeros((d, d))
    for start, stop, n_ev in reversed(groups):
        s0 += float(w[start:stop].sum())
        s1 += wx[start:stop].sum(axis=0)
        s2 += (X[start:stop].T * w[start:stop]) @ X[start:stop]
        if n_ev == 0:
            continue
        ev_mask = e[start:stop]
        idx = np.arange(start, stop)[ev_mask]
        loglik += float(eta[idx].sum())
        grad += X[idx].sum(axis=0)
        if ties == "breslow":
            loglik -= n_ev * math.log(s0)
            grad -= n_ev * (s1 / s0)
            hess -= n_ev * (s2 / s0 - np.outer(s1 / s0, s1 / s0))
        else:  # efron
            d0 = float(w[idx].sum())
            d1 = wx[idx].sum(axis=0)
            d2 = (X[idx].T * w[idx]) @ X[idx]
            for l in range(n_ev):
                frac = l / n_ev
                a0 = s0 - frac * d0
                a1 = s1 - frac * d1
                a2 = s2 - frac * d2
                loglik -= math.log(a0)
                grad -= a1 / a0
                hess -= a2 / a0 - np.outer(a1 / a0, a1 / a0)
    if ridge:
        loglik -= 0.5 * ridge * float(beta @ beta)
        grad -= ridge * beta
        hess -= ridge * np.eye(d)
    return loglik, grad, hess


def log_partial_likelihood(
    X, times, events, beta, ties: str = "efron", ridge: float = 0.0
) -> float:
    return partial_likelihood_parts(X, times, events, beta, ties, ridge)[0]


def fit(
    X: np.ndarray,
    times: Sequence[float],
    events: Sequence[bool],
    ties: str = "efron",
    tol: float = 1e-9,
    max_iter: int = 100,
    ridge: float = 0.0,
    standardize: bool = False,
    covariate_names: Optional[Sequence[str]] = None,
    categorical_levels: Optional[dict[str, list[str]]] = None,
) -> CoxModel:
    """Maximize the log partial likelihood by damped Newton-Raphson.

    Convergence: the largest coefficient change in an accepted step falls
    below ``tol``. Raises :class:`FitError` on no events, constant covariate
    columns, a singular Hessian (suggest a ridge), or separation.
    """
    X = np.asarray(X, dtype=float)
    t = np.asarray(times, dtype=float)
    e = np.asarray(events, dtype=bool)
    if X.ndim != 2:
        raise ValueError("X must be a 2-d matrix")
    n, d = X.shape
    if t.shape != (n,) or e.shape != (n,):
        raise ValueError("times and events must align with X rows")
    if n < d + 1:
        raise FitError(f"need at least {d + 1} subjects for {d} covariates, got {n}")
    if not e.any():
        raise FitError("no events in the data; the partial likelihood is undefined")
    const = np.all(X == X[0, :], axis=0)
    if const.any():
        bad = [i for i, c in enumerate(const) if c]
        names = covariate_names or [f"x{i}" for i in range(d)]
        raise FitError(f"constant covariate columns: {[names[i] for i in bad]}")

    mu = np.zeros(d)
    sd = np.ones(d)
    Xw = X
    if standardize:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        Xw = (X - mu) / sd

    beta = np.zeros(d)
    loglik, grad, hess = partial_likelihood_parts(Xw, t, e, beta, ties, ridge)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            if np.max(np.abs(beta)) > 10.0:
                # the likelihood plateau flattens to a numerically singular
                # Hessian once a coefficient has run away; report the cause
                raise FitError(
                    "coefficients diverged and the likelihood flattened out; "
                    "data are likely separated"
                )
            raise FitError(
                "singular Hessian; consider a ridge > 0 or removing collinear covariates"
            )
        # step-halving keeps the objective non-decreasing
        scale = 1.0
        for _ in range(40):
            candidate = beta + scale * step
            new_loglik, new_grad, new_hess = partial_likelihood_parts(
                Xw, t, e, candidate, ties, ridge
            )
            if new_loglik >= loglik or not math.isfinite(loglik):
                break
            scale *= 0.5
        else:
            raise ConvergenceError(
                "step-halving failed to improve the likelihood", iterations, loglik
            )
        delta = float(np.max(np.abs(candidate - beta)))
        beta, loglik, grad, hess = candidate, new_loglik, new_grad, new_hess
        if np.max(np.abs(beta)) > _SEPARATION_BOUND:
            raise FitError(
                f"coefficients diverged beyond |beta| > {_SEPARATION_BOUND:g}; "
                "data are likely separated"
            )
        if delta < tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"no convergence within {max_iter} iterations", iterations, loglik
        )

    if standardize:
        beta = beta / sd
        # report the likelihood in original coordinates
        loglik = log_partial_likelihood(X, t, e, beta, ties, ridge)

    h_times, h_values = _breslow_baseline(X, t, e, beta)
    names = tuple(covariate_names) if covariate_names else tuple(f"x{i}" for i in range(d))
    return CoxModel(
        coefficients=tuple(float(b) for b in beta),
        covariate_names=names,
        baseline_times=h_times,
        baseline_cumhaz=h_values,
        ties=ties,
        iterations=iterations,
        log_partial_likelihood=float(loglik),
        converged=converged,
        categorical_levels=dict(categorical_levels or {}),
    )


def _breslow_baseline(X, t, e, beta) -> tuple[tuple[float, ...], tuple[float, ...]]:
    order = np.argsort(t, kind="mergesort")
    X, t, e = X[order], t[order], e[order]
    w = np.exp(np.clip(X @ beta, -700, 700))
    out_times: list[float] = []
    out_ch: list[float] = []
    groups = list(_group_by_time(t, e))
    s0 = 0.0
    increments: list[tuple[float, float]] = []
    for start, stop, n_ev in reversed(groups):
        s0 += float(w[start:stop].sum())
        if n_ev > 0:
            increments.append((float(t[start]), n_ev / s0))
    ch = 0.0
    for time, inc in reversed(increments):
        ch += inc
        out_times.append(time)
        out_ch.append(ch)
    return tuple(out_times), tuple(out_ch)


def predict_risk(model: CoxModel, X: np.ndarray) -> np.ndarray:
    """Linear predictor x'b per subject."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    beta = np.asarray(model.coefficients)
    if X.shape[1] != beta.size:
        raise ValueError(f"expected {beta.size} covariates, got {X.shape[1]}")
    return X @ beta


def predict_survival(model: CoxModel, X: np.ndarray, grid: TimeGrid) -> list[Prediction]:
    """Predicted survival curves on ``grid``; flat beyond the last event time."""
    eta = predict_risk(model, X)
    h0 = np.array([model.cumulative_hazard(t) for t in grid.times])
    out = []
    for lin in eta:
        s = np.exp(-h0 * math.exp(min(lin, 700.0)))
        s = np.minimum.accumulate(np.clip(s, 0.0, 1.0))
        out.append(Prediction(grid=grid, values=tuple(float(v) for v in s)))
    return out


# ---------------------------------------------------------------------------
# feature encoding and model persistence


def encode_features(
    cohort: Cohort, categorical_levels: Optional[dict[str, list[str]]] = None
) -> tuple[np.ndarray, list[str], dict[str, list[str]]]:
    """Numeric design matrix from a cohort.

    Continuous and ordinal features map to one column, booleans to 0/1, and
    categorical features to one-hot columns for every level after the first
    (levels sorted; captured at fit time and reused for prediction). An
    unseen categorical level at prediction time is an error.
    """
    schema = cohort.schema
    levels = dict(categorical_levels or {})
    fitting = categorical_levels is None
    columns: list[np.ndarray] = []
    names: list[str] = []
    for j, spec in enumerate(schema.features):
        col = [p.values[j] for p in cohort.patients]
        if spec.kind == "categorical":
            if fitting:
                levels[spec.name] = sorted(set(col))
            lv = levels.get(spec.name)
            if lv is None:
                raise DataError(f"no recorded levels for categorical feature {spec.name!r}")
            unseen = sorted(set(col) - set(lv))
            if unseen:
                raise DataError(
                    f"feature {spec.name!r}: unseen categorical levels {unseen}"
                )
            for level in lv[1:]:
                columns.append(np.array([1.0 if v == level else 0.0 for v in col]))
                names.append(f"{spec.name}={level}")
        elif spec.kind == "boolean":
            columns.append(np.array([1.0 if v else 0.0 for v in col]))
            names.append(spec.name)
        else:
            columns.append(np.array(col, dtype=float))
            names.append(spec.name)
    if not columns:
        raise DataError("schema produced an empty design matrix")
    return np.column_stack(columns), names, levels


def model_to_json(model: CoxModel) -> dict:
    return {
        "model": "coxph",
        "coefficients": list(model.coefficients),
        "covariate_names": list(model.covariate_names),
        "baseline": {
            "times": list(model.baseline_times),
            "cumulative_hazard": list(model.baseline_cumhaz),
        },
        "options": {"ties": model.ties},
        "diagnostics": {
            "iterations": model.iterations,
            "log_partial_likelihood": model.log_partial_likelihood,
            "converged": model.converged,
        },
        "categorical_levels": model.categorical_levels,
    }


def save_model(model: CoxModel, path: str) -> None:
    dump_json(model_to_json(model), path)


def load_model(path: str) -> CoxModel:
    doc = _load_json(path)
    try:
        return CoxModel(
            coefficients=tuple(float(c) for c in doc["coefficients"]),
            covariate_names=tuple(doc["covariate_names"]),
            baseline_times=tuple(float(t) for t in doc["baseline"]["times"]),
            baseline_cumhaz=tuple(float(h) for h in doc["baseline"]["cumulative_hazard"]),
            ties=doc["options"]["ties"],
            iterations=int(doc["diagnostics"]["iterations"]),
            log_partial_likelihood=float(doc["diagnostics"]["log_partial_likelihood"]),
            converged=bool(doc["diagnostics"]["converged"]),
            categorical_levels={
                k: list(v) for k, v in doc.get("categorical_levels", {}).items()
            },
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model file: {exc!r}", path=path) from exc
