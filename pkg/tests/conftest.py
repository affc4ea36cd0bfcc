import pytest

from survuq.core import (
    Cohort,
    Exact,
    FeatureSchema,
    FeatureSpec,
    PatientRecord,
    Prediction,
    SurvivalOutcome,
    TimeGrid,
    Tolerance,
)


@pytest.fixture
def icp_schema():
    return FeatureSchema(
        features=(
            FeatureSpec("histology", "categorical", Exact()),
            FeatureSpec("n_treated_mets", "ordinal", Exact()),
            FeatureSpec("prior_wbrt", "boolean", Exact()),
            FeatureSpec("years_dx_to_brain_mets", "continuous", Tolerance(0.5)),
        )
    )


def icp_patient(pid, histology, mets, wbrt, years):
    return PatientRecord(id=pid, values=(histology, mets, wbrt, years))


@pytest.fixture
def small_cohort(icp_schema):
    patients = (
        icp_patient("A", "melanoma", 2, False, 3.0),
        icp_patient("B", "non-melanoma", 1, True, 7.0),
        icp_patient("C", "melanoma", 4, False, 2.0),
    )
    grid = TimeGrid(times=(3.0, 6.0, 9.0, 12.0))
    outcomes = {
        "A": SurvivalOutcome(time=5.0, event=True),
        "B": SurvivalOutcome(time=11.0, event=False),
        "C": SurvivalOutcome(time=2.5, event=True),
    }
    predictions = {
        "A": Prediction(grid=grid, values=(0.9, 0.7, 0.5, 0.4)),
        "B": Prediction(grid=grid, values=(0.95, 0.9, 0.85, 0.8)),
        "C": Prediction(grid=grid, values=(0.6, 0.3, 0.2, 0.1)),
    }
    return Cohort(
        schema=icp_schema, patients=patients, outcomes=outcomes, predictions=predictions
    )
