import os

os.environ.setdefault("ROMI_FILE_LOGS", "false")
os.environ.setdefault("ROMI_JSON_LOGS", "false")
os.environ.setdefault("ROMI_PROGRESS", "false")
os.environ.setdefault("ROMI_WORKERS", "1")
os.environ["COLUMNS"] = "200"

from pathlib import Path

import orjson
import pytest

from app.core.config import get_settings
from app.schemas.design import DesignConfig, DesignKind, IndicationDesign
from app.schemas.model import McmcConfig
from app.schemas.scenario import ScenarioSpec

get_settings.cache_clear()

# one unresponsive indication, two where the low dose is optimal
SCENARIO_MIXED = {
    "name": "mixed",
    "phi": 0.25,
    "indications": [
        {"high": {"pi_T": 0.40, "pi_R": 0.05}, "low": {"pi_T": 0.30, "pi_R": 0.05}, "true_obd": "none"},
        {"high": {"pi_T": 0.25, "pi_R": 0.40}, "low": {"pi_T": 0.15, "pi_R": 0.40}, "true_obd": "L"},
        {"high": {"pi_T": 0.25, "pi_R": 0.40}, "low": {"pi_T": 0.15, "pi_R": 0.40}, "true_obd": "L"},
    ],
}

FAST_MCMC = McmcConfig(n_iter=600, n_burn=200, diagnostics=False)


@pytest.fixture
def scenario_mixed() -> ScenarioSpec:
    return ScenarioSpec(**SCENARIO_MIXED)


@pytest.fixture
def romi_config() -> DesignConfig:
    return DesignConfig(kind=DesignKind.ROMI_V1, indications=[IndicationDesign()] * 3, mcmc=FAST_MCMC)


@pytest.fixture
def scenario_file(tmp_path) -> Path:
    path = tmp_path / "scenarios.json"
    path.write_bytes(orjson.dumps({"scenarios": [SCENARIO_MIXED]}))
    return path


@pytest.fixture
def run_config_file(tmp_path, scenario_file) -> Path:
    path = tmp_path / "run.json"
    path.write_bytes(orjson.dumps({
        "designs": ["romi_v1", "pool", "independent"],
        "scenario_file": scenario_file.name,
        "n_reps": 2,
        "seed": 11,
        "mcmc": FAST_MCMC.model_dump(),
    }))
    return path


@pytest.fixture(scope="session")
def golden_dir(tmp_path_factory) -> Path:
    """Fixtures regenerated from the oracles once per session."""
    from app.services.validation_service import validation_service

    directory = tmp_path_factory.mktemp("golden")
    validation_service.generate_fixtures(directory, quadrature_points=401)
    return directory
