from enum import Enum
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.design import DesignKind, Selection


class DecisionStage(str, Enum):
    STAGE1 = "stage1"
    INTERIM = "interim"
    FINAL = "final"


class ObservedDose(BaseModel):
    """Accrued counts of one dose, cells ordered (0,1), (0,0), (1,1), (1,0)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    stage1: List[int] = Field(default_factory=lambda: [0, 0, 0, 0], min_length=4, max_length=4)
    stage2: List[int] = Field(default_factory=lambda: [0, 0, 0, 0], min_length=4, max_length=4)
    stopped: Optional[Literal["toxicity", "futility"]] = Field(None, description="Rule that stopped the dose at an earlier look")

    @field_validator("stage1", "stage2")
    @classmethod
    def non_negative(cls, v):
        if any(c < 0 for c in v):
            raise ValueError("cell counts must be non-negative")
        return v


class ObservedIndication(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    high: ObservedDose = Field(default_factory=ObservedDose)
    low: ObservedDose = Field(default_factory=ObservedDose)
    dropped: bool = Field(False, description="Dropped after stage 1 or terminated at the interim")


class ObservedTrial(BaseModel):
    """Contents of a counts file for the decide command."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    stage: DecisionStage
    indications: List[ObservedIndication] = Field(..., min_length=1)


class RuleCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    dose: str
    rule: str
    probability: float
    cutoff: float
    fires: bool


class IndicationDecision(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    action: str
    rules: List[RuleCheck] = Field(default_factory=list)
    acceptable: Dict[str, bool] = Field(default_factory=dict)
    q_high: Optional[float] = None
    q_low: Optional[float] = None
    selection: Optional[Selection] = None


class DecisionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    design: DesignKind
    stage: DecisionStage
    indications: List[IndicationDecision]


__all__ = [
    "DecisionStage",
    "ObservedDose",
    "ObservedIndication",
    "ObservedTrial",
    "RuleCheck",
    "IndicationDecision",
    "DecisionReport",
]
