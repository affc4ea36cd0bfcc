import math

import pytest

from survuq.core import (
    Binned,
    Cohort,
    Exact,
    FeatureSchema,
    FeatureSpec,
    PatientRecord,
    Prediction,
    SchemaError,
    SurvivalOutcome,
    TimeGrid,
    Tolerance,
    validate_cohort,
)

from conftest import icp_patient


class TestComparators:
    def test_exact(self):
        c = Exact()
        assert not c.differs("a", "a")
        assert c.differs("a", "b")
        assert not c.differs(3, 3.0)

    def test_tolerance(self):
        c = Tolerance(eps=0.5)
        assert not c.differs(54.0, 54.3)
        assert not c.differs(54.0, 54.5)
        assert c.differs(54.0, 54.6)

    def test_tolerance_rejects_negative_eps(self):
        with pytest.raises(SchemaError):
            Tolerance(eps=-0.1)

    def test_binned_bins_are_upper_inclusive(self):
        c = Binned(edges=(0.0, 10.0))
        assert c.bin_index(-5.0) == 0
        assert c.bin_index(0.0) == 0
        assert c.bin_index(0.1) == 1
        assert c.bin_index(10.0) == 1
        assert c.bin_index(10.5) == 2
        assert not c.differs(1.0, 10.0)
        assert c.differs(10.0, 10.5)

    def test_binned_rejects_unsorted_edges(self):
        with pytest.raises(SchemaError):
            Binned(edges=(1.0, 1.0))
        with pytest.raises(SchemaError):
            Binned(edges=())


class TestSchema:
    def test_duplicate_names_rejected(self):
        with pytest.raises(SchemaError, match="duplicate"):
            FeatureSchema(
                features=(
                    FeatureSpec("a", "continuous"),
                    FeatureSpec("a", "ordinal"),
                )
            )

    def test_categorical_requires_exact(self):
        with pytest.raises(SchemaError, match="exact"):
            FeatureSpec("h", "categorical", Tolerance(0.1))

    def test_unknown_kind_rejected(self):
        with pytest.raises(SchemaError):
            FeatureSpec("h", "nominal")


class TestTimeGridAndPrediction:
    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            TimeGrid(times=(1.0, 1.0))
        with pytest.raises(ValueError):
            TimeGrid(times=(2.0, 1.0))
        with pytest.raises(ValueError):
            TimeGrid(times=())
        with pytest.raises(ValueError):
            TimeGrid(times=(0.0, math.inf))

    def test_prediction_length_must_match_grid(self):
        grid = TimeGrid(times=(1.0, 2.0))
        with pytest.raises(ValueError):
            Prediction(grid=grid, values=(1.0,))

    def test_prediction_step_lookup(self):
        grid = TimeGrid(times=(2.0, 4.0, 6.0))
        pred = Prediction(grid=grid, values=(0.9, 0.6, 0.3))
        assert pred.at(1.0) == 0.9  # clamped below the grid
        assert pred.at(2.0) == 0.9
        assert pred.at(5.0) == 0.6  # previous step
        assert pred.at(100.0) == 0.3  # clamped above


class TestValidateCohort:
    def test_well_formed_cohort_has_no_violations(self, small_cohort):
        assert validate_cohort(small_cohort) == []

    def test_duplicate_patient_id(self, icp_schema):
        p = icp_patient("A", "melanoma", 1, False, 2.0)
        cohort = Cohort(
            schema=icp_schema,
            patients=(p, icp_patient("A", "non-melanoma", 1, True, 6.0)),
            outcomes={"A": SurvivalOutcome(time=1.0, event=True)},
        )
        violations = validate_cohort(cohort)
        assert [v for v in violations if v.field == "id" and v.patient_id == "A"]

    def test_prediction_out_of_range(self, icp_schema):
        grid = TimeGrid(times=(1.0,))
        p = icp_patient("A", "melanoma", 1, False, 2.0)
        cohort = Cohort(
            schema=icp_schema,
            patients=(p,),
            outcomes={"A": SurvivalOutcome(time=1.0, event=True)},
            predictions={"A": Prediction(grid=grid, values=(1.2,))},
        )
        violations = validate_cohort(cohort)
        assert any("outside [0,1]" in v.message and v.patient_id == "A" for v in violations)

    def test_prediction_must_not_increase(self, icp_schema):
        grid = TimeGrid(times=(1.0, 2.0))
        p = icp_patient("A", "melanoma", 1, False, 2.0)
        cohort = Cohort(
            schema=icp_schema,
            patients=(p,),
            outcomes={"A": SurvivalOutcome(time=1.0, event=True)},
            predictions={"A": Prediction(grid=grid, values=(0.5, 0.6))},
        )
        assert any("increase" in v.message for v in validate_cohort(cohort))

    def test_wrong_value_type_and_count(self, icp_schema):
        bad_type = PatientRecord(id="A", values=("melanoma", 1, "not-a-bool", 2.0))
        bad_count = PatientRecord(id="B", values=("melanoma", 1))
        cohort = Cohort(
            schema=icp_schema,
            patients=(bad_type, bad_count),
            outcomes={
                "A": SurvivalOutcome(time=1.0, event=True),
                "B": SurvivalOutcome(time=1.0, event=False),
            },
        )
        violations = validate_cohort(cohort)
        assert any(v.patient_id == "A" and v.field == "prior_wbrt" for v in violations)
        assert any(v.patient_id == "B" and v.field == "values" for v in violations)

    def test_nonpositive_time_flagged(self, icp_schema):
        p = icp_patient("A", "melanoma", 1, False, 2.0)
        cohort = Cohort(
            schema=icp_schema,
            patients=(p,),
            outcomes={"A": SurvivalOutcome(time=0.0, event=True)},
        )
        assert any(v.field == "time" for v in validate_cohort(cohort))

    def test_missing_and_extra_outcomes(self, icp_schema):
        p = icp_patient("A", "melanoma", 1, False, 2.0)
        cohort = Cohort(
            schema=icp_schema,
            patients=(p,),
            outcomes={"Z": SurvivalOutcome(time=1.0, event=True)},
        )
        violations = validate_cohort(cohort)
        messages = {(v.patient_id, v.field) for v in violations}
        assert ("A", "outcome") in messages
        assert ("Z", "outcome") in messages

    def test_mixed_grids_flagged(self, icp_schema):
        p1 = icp_patient("A", "melanoma", 1, False, 2.0)
        p2 = icp_patient("B", "melanoma", 1, False, 2.0)
        cohort = Cohort(
            schema=icp_schema,
            patients=(p1, p2),
            outcomes={
                "A": SurvivalOutcome(time=1.0, event=True),
                "B": SurvivalOutcome(time=1.0, event=True),
            },
            predictions={
                "A": Prediction(grid=TimeGrid(times=(1.0,)), values=(0.5,)),
                "B": Prediction(grid=TimeGrid(times=(2.0,)), values=(0.5,)),
            },
        )
        assert any(v.field == "predictions" for v in validate_cohort(cohort))

    def test_validation_is_deterministic(self, small_cohort):
        assert validate_cohort(small_cohort) == validate_cohort(small_cohort)

    def test_valid_cohort_never_fails_downstream(self):
        # a cohort that passes validation must flow through ranking,
        # grouping and calibration for every patient drawn from it
        from survuq.synth import SynthConfig, generate, make_nomogram
        from survuq.uq import personalized_uq

        for seed in (101, 102):
            cfg = SynthConfig(
                n=30, seed=seed, beta=(0.5, -0.3), censoring_rate=0.05,
                alignment_fraction=0.5, n_categorical=1,
            )
            cohort, _ = generate(cfg)
            assert validate_cohort(cohort) == []
            spec = make_nomogram(cfg)
            for poi in cohort.patients:
                res = personalized_uq(
                    poi, cohort.predictions[poi.id], cohort, spec, k=5
                )
                assert 0.0 <= res.uq <= 1.0
