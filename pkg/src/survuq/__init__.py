"""Personalized uncertainty quantification for survival models.

Scores each patient's time-to-event prediction by comparing feature-space
similarity ranks against prediction-similarity ranks, and derives a per-model
uncertainty percentage from UQ-threshold-constrained ROC analysis. Ships with
a native Cox proportional hazards fitter, censoring-aware metrics, a
declarative nomogram engine, and a seeded synthetic-cohort generator.
"""

__version__ = "0.1.0"

from .core import (
    Binned,
    Cohort,
    DataError,
    Exact,
    FeatureSchema,
    FeatureSpec,
    PatientRecord,
    Prediction,
    SchemaError,
    SurvivalOutcome,
    SurvUqError,
    TimeGrid,
    Tolerance,
    Violation,
    validate_cohort,
)
from .nomogram import NomogramSpec, RuleCoverageError, bundled_icp_nomogram, risk_class, score_points
from .similarity import PatientSimilarity, entry_loss, nomogram_loss, patient_loss, rank_patients
from .grouping import PatientGroup, partition_by_rank
from .calibration import GroupPrediction, group_prediction, prediction_loss, rank_groups
from .uq import UqScore, personalized_uq, rank_concordance, score_cohort
from .evaluation import (
    BinaryLabelSet,
    ModelUncertainty,
    SweepCurve,
    binarize,
    curve_to_risk,
    harrell_c_index,
    integrated_brier_score,
    km_estimator,
    model_uncertainty,
    roc_auc,
    uq_sweep,
)
from .coxph import CoxModel
from .synth import SynthConfig, empirical_censoring_rate, generate

__all__ = [
    "Binned",
    "BinaryLabelSet",
    "Cohort",
    "CoxModel",
    "DataError",
    "Exact",
    "FeatureSchema",
    "FeatureSpec",
    "GroupPrediction",
    "ModelUncertainty",
    "NomogramSpec",
    "PatientGroup",
    "PatientRecord",
    "PatientSimilarity",
    "Prediction",
    "RuleCoverageError",
    "SchemaError",
    "SurvUqError",
    "SurvivalOutcome",
    "SweepCurve",
    "SynthConfig",
    "TimeGrid",
    "Tolerance",
    "UqScore",
    "Violation",
    "binarize",
    "bundled_icp_nomogram",
    "curve_to_risk",
    "empirical_censoring_rate",
    "entry_loss",
    "generate",
    "group_prediction",
    "harrell_c_index",
    "integrated_brier_score",
    "km_estimator",
    "model_uncertainty",
    "nomogram_loss",
    "partition_by_rank",
    "patient_loss",
    "personalized_uq",
    "prediction_loss",
    "rank_concordance",
    "rank_groups",
    "rank_patients",
    "risk_class",
    "roc_auc",
    "score_cohort",
    "score_points",
    "uq_sweep",
    "validate_cohort",
]
