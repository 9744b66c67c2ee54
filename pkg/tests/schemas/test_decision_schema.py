import pytest
from pydantic import ValidationError

from app.schemas.decision import DecisionStage, ObservedDose, ObservedTrial


def test_observed_dose_defaults_to_zero_counts():
    dose = ObservedDose()
    assert dose.stage1 == [0, 0, 0, 0]
    assert dose.stopped is None


def test_negative_counts_rejected():
    with pytest.raises(ValidationError):
        ObservedDose(stage2=[1, -1, 0, 0])


def test_cells_need_four_entries():
    with pytest.raises(ValidationError):
        ObservedDose(stage1=[1, 2, 3])


def test_trial_needs_indications():
    with pytest.raises(ValidationError):
        ObservedTrial(stage="final", indications=[])


def test_stage_parsed():
    trial = ObservedTrial(stage="interim", indications=[{}])
    assert trial.stage is DecisionStage.INTERIM
