import numpy as np
import pytest

from app.core.exceptions import ConfigMismatch
from app.core.rng import replication_streams
from app.schemas.design import DesignConfig, DesignKind, Dose, IndicationDesign, IndicationStatus, Selection
from app.schemas.monitoring import MonitoringLimits
from app.schemas.outcome import UTILITY_PRESETS
from app.schemas.scenario import ScenarioSpec
from app.services.comparator_service import _count_in_residue, comparator_service

POOL = DesignConfig(kind=DesignKind.POOL, indications=[IndicationDesign()] * 3)
INDEPENDENT = DesignConfig(kind=DesignKind.INDEPENDENT, indications=[IndicationDesign()] * 3)


def test_count_in_residue():
    assert [_count_in_residue(0, 41, k, 3) for k in range(3)] == [14, 14, 13]
    assert [_count_in_residue(41, 81, k, 3) for k in range(3)] == [13, 13, 14]
    assert _count_in_residue(5, 5, 0, 3) == 0


def test_conjugate_estimate_pools_quasi_events():
    u = UTILITY_PRESETS["indication_1"]
    tracks = [(np.array([3, 5, 1, 1]), u), (np.array([4, 4, 2, 0]), u)]
    # z = 5.6 + 6.8, n = 20
    assert comparator_service.conjugate_estimates(tracks, MonitoringLimits()) == pytest.approx(12.5 / 20.2)


class TestPool:
    def test_shared_selection_and_sizes(self, scenario_mixed):
        for rep in range(4):
            result = comparator_service.run_pool(POOL, scenario_mixed, replication_streams(6, rep)[0])
            assert len({ind.selection for ind in result.indications}) == 1
            for dose in ("high", "low"):
                total = sum(getattr(ind, dose).stage2.n for ind in result.indications)
                assert total in (41, 81)
            assert all(ind.high.stage1.n == 0 for ind in result.indications)

    def test_hopeless_basket(self):
        scenario = ScenarioSpec(name="null", phi=0.0, indications=[
            {"high": {"pi_T": 0.9, "pi_R": 0.0}, "low": {"pi_T": 0.9, "pi_R": 0.0}},
        ] * 3)
        result = comparator_service.run_pool(POOL, scenario, np.random.default_rng(0))
        assert all(ind.selection is Selection.NONE for ind in result.indications)
        assert all(ind.status is IndicationStatus.TERMINATED for ind in result.indications)
        assert result.total_n == 82

    def test_dimension_mismatch(self, scenario_mixed):
        cfg = DesignConfig(kind=DesignKind.POOL, indications=[IndicationDesign()] * 2)
        with pytest.raises(ConfigMismatch):
            comparator_service.run_pool(cfg, scenario_mixed, np.random.default_rng(0))


class TestIndependent:
    def test_sizes(self, scenario_mixed):
        result = comparator_service.run_independent(INDEPENDENT, scenario_mixed, np.random.default_rng(4))
        for ind in result.indications:
            assert ind.high.stage2.n in (7, 27)
            assert ind.low.stage2.n in (7, 27)
            assert ind.high.stage1.n == 0

    def test_odd_interim_gives_high_dose_the_extra_patient(self):
        cfg = INDEPENDENT.model_copy(update={"independent_interim": 15})
        scenario = ScenarioSpec(name="null", phi=0.0, indications=[
            {"high": {"pi_T": 0.9, "pi_R": 0.0}, "low": {"pi_T": 0.9, "pi_R": 0.0}},
        ] * 3)
        result = comparator_service.run_independent(cfg, scenario, np.random.default_rng(1))
        for ind in result.indications:
            assert (ind.high.stage2.n, ind.low.stage2.n) == (8, 7)
            assert ind.selection is Selection.NONE

    def test_good_doses_selected(self):
        scenario = ScenarioSpec(name="good", phi=0.0, indications=[
            {"high": {"pi_T": 0.05, "pi_R": 0.9}, "low": {"pi_T": 0.05, "pi_R": 0.6}, "true_obd": "H"},
        ] * 3)
        result = comparator_service.run_independent(INDEPENDENT, scenario, np.random.default_rng(2))
        for ind in result.indications:
            assert ind.selection is Selection.HIGH
            assert ind.q_high > ind.q_low
            assert ind.acceptable == {Dose.HIGH.value: True, Dose.LOW.value: True}
