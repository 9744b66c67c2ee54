from math import isclose, sqrt
from typing import Dict, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Joint outcome cells (y_T, y_R), in the order every array in the engine uses.
CELL_ORDER: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 0), (1, 1), (1, 0))
CELL_NAMES: Tuple[str, ...] = ("01", "00", "11", "10")

PROB_TOLERANCE = 1e-12


class UtilityTable(BaseModel):
    """Elicited utilities U(y_T, y_R) on a 0-100 scale for one indication."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    u01: float = Field(100.0, description="No toxicity, response")
    u00: float = Field(..., ge=0, le=100, description="No toxicity, no response")
    u11: float = Field(..., ge=0, le=100, description="Toxicity, response")
    u10: float = Field(0.0, description="Toxicity, no response")

    @model_validator(mode="after")
    def check_ordering(self):
        if self.u01 != 100 or self.u10 != 0:
            raise ValueError("u01 must be 100 and u10 must be 0")
        if not (self.u01 >= self.u11 and self.u01 >= self.u00):
            raise ValueError("no outcome may beat (no toxicity, response)")
        if not (self.u00 >= self.u10 and self.u11 >= self.u10):
            raise ValueError("no outcome may be worse than (toxicity, no response)")
        return self

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.u01, self.u00, self.u11, self.u10)

    @property
    def is_additive(self) -> bool:
        return isclose(self.u11, self.u01 + self.u10 - self.u00, abs_tol=1e-12)


UTILITY_PRESETS: Dict[str, UtilityTable] = {
    "indication_1": UtilityTable(u01=100, u00=40, u11=60, u10=0),
    "indication_2": UtilityTable(u01=100, u00=20, u11=80, u10=0),
    "indication_3": UtilityTable(u01=100, u00=60, u11=40, u10=0),
    "indication_4": UtilityTable(u01=100, u00=30, u11=70, u10=0),
}
DEFAULT_UTILITY = "indication_1"


class JointOutcomeProb(BaseModel):
    """Joint probabilities of the four (Y_T, Y_R) outcomes for one dose, indication and stage."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    p01: float = Field(..., ge=0, le=1)
    p00: float = Field(..., ge=0, le=1)
    p11: float = Field(..., ge=0, le=1)
    p10: float = Field(..., ge=0, le=1)

    @model_validator(mode="after")
    def check_total(self):
        total = self.p01 + self.p00 + self.p11 + self.p10
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise ValueError(f"cell probabilities sum to {total!r}, not 1")
        return self

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.p01, self.p00, self.p11, self.p10)

    @property
    def pi_T(self) -> float:
        return self.p10 + self.p11

    @property
    def pi_R(self) -> float:
        return self.p01 + self.p11

    @property
    def phi(self) -> float:
        """Association recovered from the cells; 0 when a marginal is degenerate."""
        pi_T, pi_R = self.pi_T, self.pi_R
        denom = sqrt(pi_R * (1 - pi_R) * pi_T * (1 - pi_T))
        if denom == 0:
            return 0.0
        return (self.p11 - pi_T * pi_R) / denom


class OutcomeCounts(BaseModel):
    """Patient counts per joint outcome."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    x01: int = Field(0, ge=0)
    x00: int = Field(0, ge=0)
    x11: int = Field(0, ge=0)
    x10: int = Field(0, ge=0)

    @classmethod
    def from_cells(cls, cells) -> "OutcomeCounts":
        x01, x00, x11, x10 = (int(c) for c in cells)
        return cls(x01=x01, x00=x00, x11=x11, x10=x10)

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.x01, self.x00, self.x11, self.x10)

    @property
    def n(self) -> int:
        return self.x01 + self.x00 + self.x11 + self.x10

    @property
    def x_T(self) -> int:
        return self.x10 + self.x11

    @property
    def x_R(self) -> int:
        return self.x01 + self.x11

    def __add__(self, other: "OutcomeCounts") -> "OutcomeCounts":
        return OutcomeCounts(
            x01=self.x01 + other.x01,
            x00=self.x00 + other.x00,
            x11=self.x11 + other.x11,
            x10=self.x10 + other.x10,
        )


__all__ = [
    "CELL_ORDER",
    "CELL_NAMES",
    "PROB_TOLERANCE",
    "UtilityTable",
    "UTILITY_PRESETS",
    "DEFAULT_UTILITY",
    "JointOutcomeProb",
    "OutcomeCounts",
]
