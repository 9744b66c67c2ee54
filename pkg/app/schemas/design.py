from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.model import HierHyperparams, McmcConfig, ModelKind
from app.schemas.monitoring import MonitoringLimits
from app.schemas.outcome import DEFAULT_UTILITY, UTILITY_PRESETS, OutcomeCounts, UtilityTable


class DesignKind(str, Enum):
    ROMI_V1 = "romi_v1"
    ROMI_V2 = "romi_v2"
    ROMI_V1_NC = "romi_v1_nc"
    POOL = "pool"
    INDEPENDENT = "independent"

    @property
    def is_romi(self) -> bool:
        return self in (DesignKind.ROMI_V1, DesignKind.ROMI_V2, DesignKind.ROMI_V1_NC)

    @property
    def model(self) -> ModelKind:
        return {
            DesignKind.ROMI_V1: ModelKind.V1,
            DesignKind.ROMI_V2: ModelKind.V2,
            DesignKind.ROMI_V1_NC: ModelKind.NC,
        }.get(self, ModelKind.CONJUGATE)

    @property
    def label(self) -> str:
        return {
            DesignKind.ROMI_V1: "ROMI-v1",
            DesignKind.ROMI_V2: "ROMI-v2",
            DesignKind.ROMI_V1_NC: "ROMI-v1-NC",
            DesignKind.POOL: "Pool",
            DesignKind.INDEPENDENT: "Independent",
        }[self]


class Dose(str, Enum):
    HIGH = "H"
    LOW = "L"


class DoseStatus(str, Enum):
    ENROLLING = "enrolling"
    STOPPED_TOXICITY = "stopped_toxicity"
    STOPPED_FUTILITY = "stopped_futility"
    COMPLETED = "completed"


class IndicationStatus(str, Enum):
    ACTIVE = "active"
    DROPPED_STAGE1 = "dropped_stage1"
    TERMINATED = "terminated"
    FINISHED = "finished"


class Selection(str, Enum):
    HIGH = "H"
    LOW = "L"
    NONE = "none"


class StopReason(str, Enum):
    SELECTED = "selected"
    STAGE1_TOXICITY = "stage1_toxicity"
    STAGE1_FUTILITY = "stage1_futility"
    INTERIM_TERMINATED = "interim_terminated"
    NO_ACCEPTABLE_DOSE = "no_acceptable_dose"


def _resolve_utility(value):
    if isinstance(value, str):
        if value not in UTILITY_PRESETS:
            raise ValueError(f"unknown utility preset '{value}' (choose from {sorted(UTILITY_PRESETS)})")
        return UTILITY_PRESETS[value]
    return value


class IndicationDesign(BaseModel):
    """Sizes, screening limits and utilities for one indication."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_stage1: int = Field(14, ge=0, description="Stage-1 patients on the high dose")
    n_stage2: int = Field(20, ge=1, description="Maximum stage-2 patients per dose")
    n_interim: int = Field(10, ge=0, description="Per-dose stage-2 count at which the interim look fires")
    limits: MonitoringLimits = Field(default_factory=MonitoringLimits)
    utility: UtilityTable = Field(default_factory=lambda: UTILITY_PRESETS[DEFAULT_UTILITY])

    @field_validator("utility", mode="before")
    @classmethod
    def utility_preset(cls, v):
        return _resolve_utility(v)

    @model_validator(mode="after")
    def interim_within_stage2(self):
        if self.n_interim > self.n_stage2:
            raise ValueError(f"n_interim={self.n_interim} exceeds n_stage2={self.n_stage2}")
        return self

    @property
    def max_total(self) -> int:
        return self.n_stage1 + 2 * self.n_stage2


class DesignConfig(BaseModel):
    """A complete design: kind, per-indication settings and model settings."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: DesignKind
    indications: List[IndicationDesign] = Field(..., min_length=1)
    stage1_interim: bool = Field(False, description="Extra screening look halfway through stage 1")
    hyper: HierHyperparams = Field(default_factory=HierHyperparams)
    mcmc: McmcConfig = Field(default_factory=McmcConfig)

    pool_max_total: Optional[int] = Field(None, ge=2)
    pool_interim_total: Optional[int] = Field(None, ge=0)
    independent_max_per_dose: Optional[int] = Field(None, ge=1)
    independent_interim: Optional[int] = Field(None, ge=0, description="Patients enrolled in the indication at the interim")

    @property
    def K(self) -> int:
        return len(self.indications)

    def pool_sizes(self) -> Tuple[int, int]:
        """(per-dose maximum, per-dose interim count) for the Pool design."""
        total = self.pool_max_total or sum(ind.max_total for ind in self.indications)
        interim = self.pool_interim_total if self.pool_interim_total is not None else total / 2
        return total // 2, int(np.ceil(interim / 2))

    def independent_sizes(self, k: int) -> Tuple[int, int]:
        """(per-dose maximum, interim enrollment) for indication k of the Independent design."""
        ind = self.indications[k]
        per_dose = self.independent_max_per_dose or ind.max_total // 2
        interim = self.independent_interim if self.independent_interim is not None else ind.n_stage1
        return per_dose, interim

    @property
    def max_total(self) -> int:
        if self.kind is DesignKind.POOL:
            return 2 * self.pool_sizes()[0]
        if self.kind is DesignKind.INDEPENDENT:
            return sum(2 * self.independent_sizes(k)[0] for k in range(self.K))
        return sum(ind.max_total for ind in self.indications)


@dataclass
class DoseTrack:
    """Accrued cell counts for one dose in one indication."""
    status: DoseStatus = DoseStatus.ENROLLING
    stage1: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=np.int64))
    stage2: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=np.int64))

    def add(self, stage: int, cells: np.ndarray):
        if self.status in (DoseStatus.STOPPED_TOXICITY, DoseStatus.STOPPED_FUTILITY):
            raise RuntimeError("a stopped dose accrues no patients")
        if stage == 1:
            self.stage1 = self.stage1 + cells
        else:
            self.stage2 = self.stage2 + cells

    @property
    def stopped(self) -> bool:
        return self.status in (DoseStatus.STOPPED_TOXICITY, DoseStatus.STOPPED_FUTILITY)

    @property
    def pooled(self) -> np.ndarray:
        return self.stage1 + self.stage2

    @property
    def n(self) -> int:
        return int(self.pooled.sum())


@dataclass
class IndicationState:
    """Mutable trial state of one indication."""
    index: int
    status: IndicationStatus = IndicationStatus.ACTIVE
    high: DoseTrack = field(default_factory=DoseTrack)
    low: DoseTrack = field(default_factory=DoseTrack)
    reason: Optional[StopReason] = None

    def dose(self, dose: Dose) -> DoseTrack:
        return self.high if dose is Dose.HIGH else self.low

    @property
    def n(self) -> int:
        return self.high.n + self.low.n


def n_tox(cells: np.ndarray) -> int:
    return int(cells[2] + cells[3])


def n_resp(cells: np.ndarray) -> int:
    return int(cells[0] + cells[2])


class DoseCounts(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: DoseStatus
    stage1: OutcomeCounts
    stage2: OutcomeCounts


class IndicationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    selection: Selection
    reason: StopReason
    status: IndicationStatus
    high: DoseCounts
    low: DoseCounts
    q_high: Optional[float] = None
    q_low: Optional[float] = None
    acceptable: Dict[str, bool] = Field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.high.stage1.n + self.high.stage2.n + self.low.stage1.n + self.low.stage2.n


class TrialResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    design: DesignKind
    indications: List[IndicationResult]

    @property
    def total_n(self) -> int:
        return sum(ind.n for ind in self.indications)


def dose_counts(track: DoseTrack) -> DoseCounts:
    return DoseCounts(
        status=track.status,
        stage1=OutcomeCounts.from_cells(track.stage1),
        stage2=OutcomeCounts.from_cells(track.stage2),
    )


__all__ = [
    "DesignKind",
    "Dose",
    "DoseStatus",
    "IndicationStatus",
    "Selection",
    "StopReason",
    "IndicationDesign",
    "DesignConfig",
    "DoseTrack",
    "IndicationState",
    "DoseCounts",
    "IndicationResult",
    "TrialResult",
    "dose_counts",
    "n_tox",
    "n_resp",
]
