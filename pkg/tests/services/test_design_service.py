import numpy as np
import pytest

from app.core.exceptions import ConfigMismatch, DegenerateData
from app.core.rng import replication_streams
from app.schemas.design import (
    DesignConfig,
    DesignKind,
    Dose,
    DoseStatus,
    IndicationDesign,
    IndicationState,
    IndicationStatus,
    Selection,
    StopReason,
)
from app.schemas.model import IndicationPosterior
from app.schemas.monitoring import MonitoringLimits
from app.schemas.scenario import ScenarioSpec
from app.services.design_service import design_service, select_dose

LIM = MonitoringLimits()


def _state(high1=(0, 0, 0, 0), high2=(0, 0, 0, 0), low2=(0, 0, 0, 0)) -> IndicationState:
    state = IndicationState(index=0)
    state.high.add(1, np.array(high1))
    state.high.add(2, np.array(high2))
    state.low.add(2, np.array(low2))
    return state


class TestSelectDose:
    def test_argmax_of_acceptable(self):
        ok = {Dose.HIGH: True, Dose.LOW: True}
        assert select_dose(ok, 0.62, 0.58) is Selection.HIGH
        assert select_dose(ok, 0.55, 0.58) is Selection.LOW

    def test_tie_goes_low(self):
        assert select_dose({Dose.HIGH: True, Dose.LOW: True}, 0.6, 0.6) is Selection.LOW

    def test_single_acceptable_dose(self):
        assert select_dose({Dose.HIGH: False, Dose.LOW: True}, None, None) is Selection.LOW
        assert select_dose({Dose.HIGH: True, Dose.LOW: False}, 0.1, 0.9) is Selection.HIGH

    def test_none_acceptable(self):
        assert select_dose({Dose.HIGH: False, Dose.LOW: False}, None, None) is Selection.NONE

    def test_two_doses_need_estimates(self):
        with pytest.raises(DegenerateData):
            select_dose({Dose.HIGH: True, Dose.LOW: True}, None, 0.5)


class TestLooks:
    def test_stage1_toxicity_drops(self):
        state = _state(high1=(0, 0, 7, 7))
        verdict = design_service.stage1_decision(state, LIM)
        assert verdict.stop and verdict.rule == "toxicity"
        assert state.status is IndicationStatus.DROPPED_STAGE1
        assert state.reason is StopReason.STAGE1_TOXICITY
        assert state.high.status is DoseStatus.STOPPED_TOXICITY

    def test_stage1_futility_drops(self):
        state = _state(high1=(0, 14, 0, 0))
        verdict = design_service.stage1_decision(state, LIM)
        assert verdict.rule == "futility"
        assert state.reason is StopReason.STAGE1_FUTILITY

    def test_toxicity_checked_first(self):
        # every patient toxic and unresponsive fires both rules
        verdict = design_service.screen(np.array([0, 0, 0, 14]), LIM, 0.95, 0.95)
        assert verdict.rule == "toxicity"
        assert verdict.tox_prob > 0.95 and verdict.fut_prob > 0.95

    def test_stage1_continues(self):
        state = _state(high1=(6, 4, 2, 2))
        assert not design_service.stage1_decision(state, LIM).stop
        assert state.status is IndicationStatus.ACTIVE

    def test_interim_pools_high_dose_toxicity(self):
        # stage-2 high-dose toxicity alone (6/10) does not fire, pooled with stage 1 (14/24) does
        state = _state(high1=(3, 3, 4, 4), high2=(3, 1, 3, 3), low2=(5, 3, 1, 1))
        alone = design_service.screen(state.high.stage2, LIM, 0.95, 0.95)
        assert not alone.stop
        verdicts = design_service.stage2_interim(state, LIM)
        assert verdicts[Dose.HIGH].rule == "toxicity"
        assert not verdicts[Dose.LOW].stop
        assert state.status is IndicationStatus.ACTIVE

    def test_interim_terminates_when_both_stop(self):
        state = _state(high1=(3, 3, 1, 1), high2=(0, 10, 0, 0), low2=(0, 10, 0, 0))
        design_service.stage2_interim(state, LIM)
        assert state.status is IndicationStatus.TERMINATED
        assert state.reason is StopReason.INTERIM_TERMINATED

    def test_stopped_dose_never_acceptable(self):
        state = _state(high1=(3, 3, 1, 1), high2=(0, 10, 0, 0), low2=(6, 2, 1, 1))
        design_service.stage2_interim(state, LIM)
        verdicts = design_service.final_acceptability(state, LIM)
        assert verdicts[Dose.HIGH].stop
        assert not verdicts[Dose.LOW].stop
        assert state.low.status is DoseStatus.COMPLETED

    def test_final_selection_follows_posterior(self):
        state = _state(high2=(6, 2, 1, 1), low2=(5, 3, 1, 1))
        assert design_service.final_selection(state, IndicationPosterior(q_high=0.7, q_low=0.6), LIM) is Selection.HIGH
        assert design_service.final_selection(state, IndicationPosterior(q_high=0.7, q_low=0.8), LIM) is Selection.LOW
        with pytest.raises(DegenerateData):
            design_service.final_selection(state, None, LIM)

    def test_stopped_dose_accrues_nothing(self):
        state = _state(high1=(0, 0, 7, 7))
        design_service.stage1_decision(state, LIM)
        with pytest.raises(RuntimeError):
            state.high.add(2, np.array([1, 0, 0, 0]))


class TestRunRomi:
    def test_dimension_mismatch(self, scenario_mixed):
        cfg = DesignConfig(kind=DesignKind.ROMI_V1, indications=[IndicationDesign()] * 2)
        with pytest.raises(ConfigMismatch):
            design_service.run_trial(cfg, scenario_mixed, np.random.default_rng(0))

    def test_trial_respects_sizes(self, romi_config, scenario_mixed):
        rng, fit_rng = replication_streams(3, 0)
        result = design_service.run_trial(romi_config, scenario_mixed, rng, fit_rng)
        assert result.design is DesignKind.ROMI_V1
        assert len(result.indications) == 3
        for ind in result.indications:
            assert ind.high.stage1.n <= 14
            assert ind.high.stage2.n <= 20 and ind.low.stage2.n <= 20
            assert ind.low.stage1.n == 0
            if ind.status is IndicationStatus.DROPPED_STAGE1:
                assert ind.selection is Selection.NONE
                assert ind.high.stage2.n == 0 and ind.low.stage2.n == 0
        assert result.total_n <= romi_config.max_total

    def test_same_streams_same_trial(self, romi_config, scenario_mixed):
        a = design_service.run_trial(romi_config, scenario_mixed, *replication_streams(5, 4))
        b = design_service.run_trial(romi_config, scenario_mixed, *replication_streams(5, 4))
        assert a == b

    def test_variants_share_trial_data(self, scenario_mixed):
        results = []
        for kind in (DesignKind.ROMI_V1, DesignKind.ROMI_V1_NC):
            cfg = DesignConfig(kind=kind, indications=[IndicationDesign()] * 3,
                               mcmc={"n_iter": 400, "n_burn": 100, "diagnostics": False})
            results.append(design_service.run_trial(cfg, scenario_mixed, *replication_streams(8, 2)))
        for a, b in zip(*(r.indications for r in results)):
            assert a.high == b.high and a.low == b.low

    def test_hopeless_indication_never_selected(self, romi_config):
        scenario = ScenarioSpec(name="null", indications=[
            {"high": {"pi_T": 0.9, "pi_R": 0.0}, "low": {"pi_T": 0.9, "pi_R": 0.0}},
        ] * 3, phi=0.0)
        for rep in range(5):
            result = design_service.run_trial(romi_config, scenario, *replication_streams(1, rep))
            assert all(ind.selection is Selection.NONE for ind in result.indications)

    def test_stage1_interim_look(self, scenario_mixed):
        cfg = DesignConfig(kind=DesignKind.ROMI_V1, indications=[IndicationDesign()] * 3, stage1_interim=True,
                           mcmc={"n_iter": 400, "n_burn": 100, "diagnostics": False})
        result = design_service.run_trial(cfg, scenario_mixed, *replication_streams(2, 0))
        assert all(ind.high.stage1.n in (7, 14) for ind in result.indications)

    def test_no_interim_when_interim_equals_stage2(self, scenario_mixed):
        ind = IndicationDesign(n_interim=20)
        cfg = DesignConfig(kind=DesignKind.ROMI_V1, indications=[ind] * 3,
                           mcmc={"n_iter": 400, "n_burn": 100, "diagnostics": False})
        result = design_service.run_trial(cfg, scenario_mixed, *replication_streams(2, 1))
        for r in result.indications:
            if r.status is IndicationStatus.FINISHED:
                assert r.high.stage2.n == 20 and r.low.stage2.n == 20

    def test_chain_dump(self, romi_config, tmp_path):
        scenario = ScenarioSpec(name="good", indications=[
            {"high": {"pi_T": 0.05, "pi_R": 0.8}, "low": {"pi_T": 0.05, "pi_R": 0.8}},
        ] * 3, phi=0.0)
        path = tmp_path / "chain.csv"
        result = design_service.run_trial(romi_config, scenario, *replication_streams(4, 0), chain_path=path)
        assert path.exists()
        assert all(r.selection is not Selection.NONE for r in result.indications)
