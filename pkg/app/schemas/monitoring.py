from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class TailDirection(str, Enum):
    ABOVE = "above"
    BELOW = "below"


class MonitoringLimits(BaseModel):
    """Posterior screening limits for one indication."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    tox_limit: float = Field(0.40, gt=0, lt=1, description="Maximum acceptable toxicity probability")
    resp_floor: float = Field(0.25, gt=0, lt=1, description="Minimum acceptable response probability")
    c_tox: float = Field(0.95, gt=0, lt=1, description="Toxicity cutoff (all looks)")
    c_fut_stage1: float = Field(0.95, gt=0, lt=1, description="Futility cutoff at stage-1 and interim looks")
    c_fut_stage2: float = Field(0.95, gt=0, lt=1, description="Futility cutoff at the final analysis")
    prior_a: float = Field(0.1, gt=0)
    prior_b: float = Field(0.1, gt=0)


class CalibrationResult(BaseModel):
    """Smallest stage-1 size meeting a false-negative bound."""
    model_config = ConfigDict(frozen=True)

    n: int
    boundary: Optional[int] = Field(None, description="Largest response count that still stops for futility")
    achieved_fn: float
    pi_true: float
    max_fn: float
    n_min: int
    n_max: int


__all__ = ["TailDirection", "MonitoringLimits", "CalibrationResult"]
