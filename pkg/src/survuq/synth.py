"""Seeded synthetic cohorts with known ground truth.

Event times follow a Weibull proportional-hazards model: baseline survival
exp(-(t/scale)^shape) and hazard multiplier exp(x'b) driven by standard-normal
continuous covariates. Censoring is an independent exponential draw and/or an
administrative cutoff. Because the baseline is Weibull, every subject's true
survival curve is available in closed form for oracle checks.

The generator also emits an "alignment mixture": a configurable share of
subjects whose supplied prediction equals their true curve, while the rest
receive a valid decoy curve with an independently drawn risk. Sweeping the
personalized uncertainty score on such a cohort should favour the aligned
subpopulation, which is what the acceptance checks exercise.

Reproducibility: all draws come from ``numpy.random.default_rng(seed)``
(PCG64) in a fixed order (features, event times, censoring, alignment flags,
decoy risks), so identical configs give byte-identical outputs. The cohort
draws precede the alignment draws, so two configs differing only in
``alignment_fraction`` share the same patients and outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    Binned,
    Cohort,
    Exact,
    FeatureSchema,
    FeatureSpec,
    PatientRecord,
    Prediction,
    SurvivalOutcome,
    TimeGrid,
)
from .nomogram import Condition, Criterion, NomogramSpec, Rule

_BIN_EDGES = (-0.5, 0.5)
_LEVELS = "abcdefghij"


@dataclass(frozen=True)
class SynthConfig:
    n: int
    seed: int
    beta: tuple[float, ...] = (0.5, -0.3)
    weibull_shape: float = 1.5
    weibull_scale: float = 12.0
    censoring_rate: float = 0.0  # exponential censoring-hazard rate; 0 disables
    admin_cutoff: Optional[float] = None
    n_extra_continuous: int = 0
    n_categorical: int = 2
    categorical_levels: int = 3
    alignment_fraction: float = 1.0
    grid_size: int = 32
    id_prefix: str = "p"
    # point value of one unit of |beta| in the generated nomogram
    nomogram_points_per_unit: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.beta:
            raise ValueError("beta must be non-empty")
        if self.weibull_shape <= 0 or self.weibull_scale <= 0:
            raise ValueError("weibull shape and scale must be > 0")
        if self.censoring_rate < 0:
            raise ValueError("censoring_rate must be >= 0")
        if self.admin_cutoff is not None and self.admin_cutoff <= 0:
            raise ValueError("admin_cutoff must be > 0")
        if not 0.0 <= self.alignment_fraction <= 1.0:
            raise ValueError("alignment_fraction must be in [0, 1]")
        if self.grid_size < 1:
            raise ValueError("grid_size must be >= 1")
        if self.categorical_levels < 2 or self.categorical_levels > len(_LEVELS):
            raise ValueError(f"categorical_levels must be in [2, {len(_LEVELS)}]")


@dataclass(frozen=True)
class GroundTruth:
    beta: tuple[float, ...]
    alignment: dict[str, bool]
    true_curves: dict[str, Prediction]
    linear_predictor: dict[str, float]


def _schema(config: SynthConfig) -> FeatureSchema:
    feats = []
    d = len(config.beta)
    for j in range(d + config.n_extra_continuous):
        feats.append(
            FeatureSpec(name=f"x{j + 1}", kind="continuous", comparator=Binned(_BIN_EDGES))
        )
    for j in range(config.n_categorical):
        feats.append(FeatureSpec(name=f"c{j + 1}", kind="categorical", comparator=Exact()))
    return FeatureSchema(features=tuple(feats))


def default_grid(config: SynthConfig) -> TimeGrid:
    """Evenly spaced grid up to the baseline 90th survival percentile."""
    t_max = config.weibull_scale * (-math.log(0.1)) ** (1.0 / config.weibull_shape)
    m = config.grid_size
    return TimeGrid(times=tuple(t_max * (j + 1) / m for j in range(m)))


def true_survival(config: SynthConfig, eta: float, grid: TimeGrid) -> Prediction:
    """Closed-form survival curve exp(-(t/scale)^shape * exp(eta))."""
    t = np.asarray(grid.times)
    s = np.exp(-((t / config.weibull_scale) ** config.weibull_shape) * math.exp(eta))
    return Prediction(grid=grid, values=tuple(float(v) for v in s))


def generate(config: SynthConfig) -> tuple[Cohort, GroundTruth]:
    """Draw a cohort with predictions attached (the alignment mixture)."""
    rng = np.random.default_rng(config.seed)
    n = config.n
    d = len(config.beta)
    schema = _schema(config)
    width = max(4, len(str(n)))
    ids = [f"{config.id_prefix}{i + 1:0{width}d}" for i in range(n)]

    n_cont = d + config.n_extra_continuous
    xs = rng.standard_normal((n, n_cont))
    cats = [
        [_LEVELS[v] for v in rng.integers(0, config.categorical_levels, size=n)]
        for _ in range(config.n_categorical)
    ]
    eta = xs[:, :d] @ np.asarray(config.beta)

    # inverse-transform Weibull PH event times
    exp_draws = rng.exponential(1.0, size=n)
    t_event = config.weibull_scale * (exp_draws / np.exp(eta)) ** (1.0 / config.weibull_shape)
    t_cens = np.full(n, np.inf)
    if config.censoring_rate > 0:
        t_cens = rng.exponential(1.0 / config.censoring_rate, size=n)
    if config.admin_cutoff is not None:
        t_cens = np.minimum(t_cens, config.admin_cutoff)
    observed = np.minimum(t_event, t_cens)
    event = t_event <= t_cens
    observed = np.maximum(observed, 1e-12)  # time must stay strictly positive

    grid = default_grid(config)
    n_aligned = round(config.alignment_fraction * n)
    aligned_idx = set(rng.permutation(n)[:n_aligned].tolist())
    decoy_eta = rng.normal(0.0, _eta_sd(config), size=n)

    patients = []
    outcomes = {}
    predictions = {}
    truth_curves = {}
    alignment = {}
    linpred = {}
    for i, pid in enumerate(ids):
        values: list = [float(v) for v in xs[i]]
        values += [cats[j][i] for j in range(config.n_categorical)]
        patients.append(PatientRecord(id=pid, values=tuple(values)))
        outcomes[pid] = SurvivalOutcome(time=float(observed[i]), event=bool(event[i]))
        true_curve = true_survival(config, float(eta[i]), grid)
        truth_curves[pid] = true_curve
        is_aligned = i in aligned_idx
        alignment[pid] = is_aligned
        linpred[pid] = float(eta[i])
        predictions[pid] = (
            true_curve if is_aligned else true_survival(config, float(decoy_eta[i]), grid)
        )

    cohort = Cohort(
        schema=schema, patients=tuple(patients), outcomes=outcomes, predictions=predictions
    )
    truth = GroundTruth(
        beta=config.beta,
        alignment=alignment,
        true_curves=truth_curves,
        linear_predictor=linpred,
    )
    return cohort, truth


def _eta_sd(config: SynthConfig) -> float:
    # covariates are standard normal, so the linear predictor has sd ||beta||
    return math.sqrt(sum(b * b for b in config.beta)) or 1.0


def make_nomogram(config: SynthConfig) -> NomogramSpec:
    """A point table over the hazard covariates' bins.

    Each hazard covariate gets one criterion whose bins score points in the
    covariate's risk direction, so the nomogram total is a coarse monotone
    proxy of the linear predictor. This gives the similarity loss a signal
    that matches how the synthetic outcomes were actually generated.
    """
    criteria = []
    lo, hi = _BIN_EDGES
    for j, b in enumerate(config.beta):
        name = f"x{j + 1}"
        p = max(1, round(config.nomogram_points_per_unit * abs(b)))
        ascending = [0, p, 2 * p]
        points = ascending if b > 0 else ascending[::-1]
        rules = (
            Rule(conditions=(Condition(feature=name, le=lo),), points=points[0]),
            Rule(conditions=(Condition(feature=name, gt=lo, le=hi),), points=points[1]),
            Rule(conditions=(Condition(feature=name, gt=hi),), points=points[2]),
        )
        criteria.append(Criterion(name=f"{name}_band", rules=rules))
    spec = NomogramSpec(
        name="synthetic_hazard_bands",
        criteria=tuple(criteria),
        risk_cutoff=max(1, sum(max(r.points for r in c.rules) for c in criteria) // 2),
        risk_labels=("Low Risk", "High Risk"),
    )
    return spec


def empirical_censoring_rate(cohort: Cohort) -> float:
    """Fraction of the cohort whose event flag is False."""
    if len(cohort) == 0:
        raise ValueError("empty cohort")
    return sum(1 for oc in cohort.outcomes.values() if not oc.event) / len(cohort)


_CONFIG_FIELDS = (
    "n",
    "seed",
    "beta",
    "weibull_shape",
    "weibull_scale",
    "censoring_rate",
    "admin_cutoff",
    "n_extra_continuous",
    "n_categorical",
    "categorical_levels",
    "alignment_fraction",
    "grid_size",
    "id_prefix",
    "nomogram_points_per_unit",
)


def config_from_json(doc: dict) -> SynthConfig:
    unknown = set(doc) - set(_CONFIG_FIELDS)
    if unknown:
        raise ValueError(f"unknown generator config keys: {sorted(unknown)}")
    kwargs = dict(doc)
    if "beta" in kwargs:
        kwargs["beta"] = tuple(float(b) for b in kwargs["beta"])
    return SynthConfig(**kwargs)


def config_to_json(config: SynthConfig) -> dict:
    out = {name: getattr(config, name) for name in _CONFIG_FIELDS}
    out["beta"] = list(config.beta)
    return out
