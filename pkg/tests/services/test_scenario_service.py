import orjson
import pytest
import yaml

from app.core.exceptions import ConfigError, InfeasibleAssociation
from app.schemas.design import Dose
from app.schemas.scenario import ScenarioSpec
from app.services.scenario_service import scenario_service


def _drifting(drift_resp):
    return ScenarioSpec(name="D", phi=0.25, indications=[
        {"high": {"pi_T": 0.25, "pi_R": 0.40}, "low": {"pi_T": 0.15, "pi_R": 0.40}, "true_obd": "L",
         "drift_resp": drift_resp},
    ])


class TestDriftApply:
    def test_no_drift_same_stages(self):
        scenario = _drifting(0.0)
        assert scenario_service.drift_apply(scenario, 1) == scenario_service.drift_apply(scenario, 2)

    def test_drift_moves_stage2_high_response_only(self):
        scenario = _drifting(-0.025)
        stage1 = scenario_service.drift_apply(scenario, 1)[0]
        stage2 = scenario_service.drift_apply(scenario, 2)[0]
        assert stage1[Dose.HIGH].pi_R == pytest.approx(0.40)
        assert stage2[Dose.HIGH].pi_R == pytest.approx(0.375)
        assert stage2[Dose.HIGH].pi_T == pytest.approx(0.25)
        assert stage1[Dose.LOW] == stage2[Dose.LOW]

    def test_bad_stage(self):
        with pytest.raises(ValueError):
            scenario_service.drift_apply(_drifting(0.0), 3)

    def test_infeasible_phi_names_scenario(self):
        scenario = ScenarioSpec(name="tight", phi=-0.9, indications=[
            {"high": {"pi_T": 0.05, "pi_R": 0.05}, "low": {"pi_T": 0.5, "pi_R": 0.5}},
        ])
        with pytest.raises(InfeasibleAssociation) as exc:
            scenario_service.drift_apply(scenario, 1)
        assert exc.value.context["scenario"] == "tight"
        assert exc.value.context["indication"] == 0


def test_cell_probabilities_shape(scenario_mixed):
    arrays = scenario_service.cell_probabilities(scenario_mixed)
    assert arrays[1].shape == (3, 2, 4) and arrays[2].shape == (3, 2, 4)
    assert arrays[2].sum(axis=2) == pytest.approx(1.0)


def test_drift_leaving_unit_interval_rejected():
    with pytest.raises(ValueError):
        _drifting(0.7)


class TestLoadScenarios:
    def test_json_list(self, scenario_file):
        scenarios = scenario_service.load_scenarios(scenario_file)
        assert [s.name for s in scenarios] == ["mixed"]
        assert scenarios[0].has_truth

    def test_yaml_single_scenario(self, tmp_path):
        path = tmp_path / "one.yaml"
        path.write_text(yaml.safe_dump({
            "name": "Y", "indications": [{"high": {"pi_T": 0.2, "pi_R": 0.3}, "low": {"pi_T": 0.1, "pi_R": 0.3}}],
        }))
        scenarios = scenario_service.load_scenarios(path)
        assert scenarios[0].name == "Y" and scenarios[0].phi == 0.25
        assert not scenarios[0].has_truth

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            scenario_service.load_scenarios(tmp_path / "absent.json")
        assert exc.value.key == "scenario_file"

    def test_error_names_dotted_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_bytes(orjson.dumps({"scenarios": [{"name": "B", "phi": 1.5, "indications": [
            {"high": {"pi_T": 0.2, "pi_R": 0.3}, "low": {"pi_T": 0.1, "pi_R": 0.3}},
        ]}]}))
        with pytest.raises(ConfigError) as exc:
            scenario_service.load_scenarios(path)
        assert exc.value.key == "scenarios.0.phi"

    def test_unparseable(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            scenario_service.load_scenarios(path)
