from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.design import Selection


class DoseTruth(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    pi_T: float = Field(..., ge=0, le=1)
    pi_R: float = Field(..., ge=0, le=1)


class IndicationTruth(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    high: DoseTruth
    low: DoseTruth
    true_obd: Selection = Field(Selection.NONE, description="Dose scored as correct; 'none' when no dose should be selected")
    drift_resp: float = Field(0.0, description="Added to the high-dose response probability in stage 2")
    drift_tox: float = Field(0.0, description="Added to the high-dose toxicity probability in stage 2")

    @model_validator(mode="after")
    def drift_keeps_probabilities(self):
        for name, base, shift in (("pi_R", self.high.pi_R, self.drift_resp), ("pi_T", self.high.pi_T, self.drift_tox)):
            if not 0.0 <= base + shift <= 1.0:
                raise ValueError(f"stage-2 high-dose {name}={base}+{shift} leaves [0, 1]")
        return self


class ScenarioSpec(BaseModel):
    """True outcome probabilities for one simulated basket."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    phi: float = Field(0.25, gt=-1, lt=1)
    indications: List[IndicationTruth] = Field(..., min_length=1)
    description: Optional[str] = None

    @property
    def K(self) -> int:
        return len(self.indications)

    @property
    def has_truth(self) -> bool:
        return any(ind.true_obd is not Selection.NONE for ind in self.indications)


class IndicationOC(BaseModel):
    """Selection frequencies of one indication over all replications."""
    model_config = ConfigDict(frozen=True)

    index: int
    pct_high: float
    pct_low: float
    pct_none: float
    se_high: float
    se_low: float
    se_none: float
    avg_n: float
    true_obd: Selection
    stop_breakdown: Dict[str, float] = Field(default_factory=dict, description="Percent of replications per stop reason")


class OperatingCharacteristics(BaseModel):
    model_config = ConfigDict(frozen=True)

    design: str
    scenario: str
    n_reps: int
    master_seed: int
    indications: List[IndicationOC]
    csp: Optional[float] = Field(None, description="Correct selection percentage; None when no indication has a true OBD")
    avg_total_n: float
    se_total_n: float


__all__ = [
    "DoseTruth",
    "IndicationTruth",
    "ScenarioSpec",
    "IndicationOC",
    "OperatingCharacteristics",
]
