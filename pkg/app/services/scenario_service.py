"""
Scenario truths: stage-specific joint outcome distributions and scenario files.
"""
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import orjson
import yaml
from pydantic import ValidationError

from app.core.exceptions import ConfigError, InfeasibleAssociation
from app.core.logger import get_logger
from app.schemas.design import Dose
from app.schemas.outcome import JointOutcomeProb
from app.schemas.scenario import ScenarioSpec
from app.services.outcome_service import OutcomeService, outcome_service

logger = get_logger("scenario_service")

StageJoints = List[Dict[Dose, JointOutcomeProb]]


class ScenarioService:

    def __init__(self, outcomes: OutcomeService = outcome_service):
        self.outcomes = outcomes

    def drift_apply(self, scenario: ScenarioSpec, stage: int) -> StageJoints:
        """
        Joint outcome distributions per indication and dose for one stage.

        Stage 2 shifts the high-dose response (and toxicity) marginals by the scenario
        drift; stage 1 and the low dose are untouched.

        Raises:
            InfeasibleAssociation: if a drifted marginal cannot carry the scenario phi
        """
        if stage not in (1, 2):
            raise ValueError(f"stage must be 1 or 2, got {stage}")
        joints: StageJoints = []
        for k, ind in enumerate(scenario.indications):
            pi_T_high, pi_R_high = ind.high.pi_T, ind.high.pi_R
            if stage == 2:
                pi_T_high += ind.drift_tox
                pi_R_high += ind.drift_resp
            try:
                joints.append({
                    Dose.HIGH: self.outcomes.solve_joint(pi_T_high, pi_R_high, scenario.phi),
                    Dose.LOW: self.outcomes.solve_joint(ind.low.pi_T, ind.low.pi_R, scenario.phi),
                })
            except InfeasibleAssociation as e:
                e.context.update({"scenario": scenario.name, "indication": k, "stage": stage})
                raise
        return joints

    def cell_probabilities(self, scenario: ScenarioSpec) -> Dict[int, np.ndarray]:
        """Array of shape (K, 2 doses, 4 cells) per stage, doses ordered (H, L)."""
        arrays = {}
        for stage in (1, 2):
            joints = self.drift_apply(scenario, stage)
            arrays[stage] = np.array([[j[Dose.HIGH].as_tuple(), j[Dose.LOW].as_tuple()] for j in joints])
        return arrays

    def validate(self, scenario: ScenarioSpec) -> ScenarioSpec:
        self.cell_probabilities(scenario)
        return scenario

    def load_scenarios(self, path: Union[str, Path]) -> List[ScenarioSpec]:
        """Read a scenario file holding one scenario or a list under 'scenarios'."""
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"scenario file not found: {path}", key="scenario_file")
        raw = load_structured(path)
        items = raw.get("scenarios", [raw]) if isinstance(raw, dict) else raw
        scenarios = []
        for i, item in enumerate(items):
            try:
                scenarios.append(self.validate(ScenarioSpec(**item)))
            except ValidationError as e:
                first = e.errors()[0]
                key = ".".join(str(p) for p in ("scenarios", i, *first["loc"]))
                raise ConfigError(f"{path}: {key}: {first['msg']}", key=key) from e
        logger.debug(f"Loaded {len(scenarios)} scenarios from {path}")
        return scenarios


def load_structured(path: Path):
    """Parse a JSON or YAML file; YAML accepts JSON syntax as well."""
    text = Path(path).read_bytes()
    try:
        if Path(path).suffix.lower() == ".json":
            return orjson.loads(text)
        return yaml.safe_load(text)
    except (orjson.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot parse {path}: {e}", key=str(path)) from e


scenario_service = ScenarioService()
