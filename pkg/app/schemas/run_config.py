from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.core.exceptions import ConfigError
from app.schemas.design import DesignConfig, DesignKind, IndicationDesign
from app.schemas.model import HierHyperparams, McmcConfig


class ReportFormat(str, Enum):
    CSV = "csv"
    MARKDOWN = "markdown"


class RunConfig(BaseModel):
    """One simulation run: designs, scenarios, model settings and run controls."""
    model_config = ConfigDict(extra="forbid")

    designs: List[DesignKind] = Field(..., min_length=1)
    scenario_file: Path
    scenarios: Optional[List[str]] = Field(None, description="Scenario names to run; all when omitted")
    n_reps: int = Field(2000, ge=1)
    seed: Optional[int] = Field(None, ge=0)
    out: Optional[Path] = None
    format: ReportFormat = ReportFormat.MARKDOWN
    chain_dump: bool = False

    indication: IndicationDesign = Field(default_factory=IndicationDesign, description="Defaults for every indication")
    indications: Optional[List[IndicationDesign]] = Field(None, description="Per-indication settings; overrides 'indication'")
    stage1_interim: bool = False
    hyper: HierHyperparams = Field(default_factory=HierHyperparams)
    mcmc: McmcConfig = Field(default_factory=lambda: McmcConfig(diagnostics=False))

    pool_max_total: Optional[int] = Field(None, ge=2)
    pool_interim_total: Optional[int] = Field(None, ge=0)
    independent_max_per_dose: Optional[int] = Field(None, ge=1)
    independent_interim: Optional[int] = Field(None, ge=0)

    @model_validator(mode="after")
    def unique_designs(self):
        if len(set(self.designs)) != len(self.designs):
            raise ValueError("designs must not repeat")
        return self

    def design_config(self, kind: DesignKind, K: int) -> DesignConfig:
        """DesignConfig for one design over K indications."""
        if self.indications is not None and len(self.indications) != K:
            raise ConfigError(
                f"config lists {len(self.indications)} indications but the scenario has {K}",
                key="indications",
            )
        indications = list(self.indications) if self.indications is not None else [self.indication] * K
        return DesignConfig(
            kind=kind,
            indications=indications,
            stage1_interim=self.stage1_interim,
            hyper=self.hyper,
            mcmc=self.mcmc,
            pool_max_total=self.pool_max_total,
            pool_interim_total=self.pool_interim_total,
            independent_max_per_dose=self.independent_max_per_dose,
            independent_interim=self.independent_interim,
        )


def dotted_key(loc) -> str:
    return ".".join(str(part) for part in loc)


def parse_run_config(raw: Dict[str, Any], base_dir: Optional[Path] = None,
                     overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Validate a config tree. Relative scenario paths resolve against base_dir.

    Raises:
        ConfigError: naming the dotted key of the first offending entry, or the
            scenario path when the file does not exist
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping", key="<root>")
    data = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    try:
        cfg = RunConfig(**data)
    except ValidationError as e:
        first = e.errors()[0]
        key = dotted_key(first["loc"])
        raise ConfigError(f"{key}: {first['msg']}", key=key) from e

    path = cfg.scenario_file
    if not path.is_absolute() and base_dir is not None and not path.exists():
        path = Path(base_dir) / path
    if not path.exists():
        raise ConfigError(f"scenario file not found: {cfg.scenario_file}", key="scenario_file")
    return cfg.model_copy(update={"scenario_file": path})


__all__ = ["ReportFormat", "RunConfig", "parse_run_config", "dotted_key"]
