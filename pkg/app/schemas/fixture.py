from enum import Enum
from typing import Any, Dict

from pydantic import BaseModel, ConfigDict, Field


class OracleKind(str, Enum):
    BETA_ENUMERATION = "beta_enumeration"
    BINOMIAL_ENUMERATION = "binomial_enumeration"
    EXHAUSTIVE_SCAN = "exhaustive_scan"
    QUADRATURE = "quadrature"
    CLOSED_FORM = "closed_form"


class GoldenFixture(BaseModel):
    """A derived reference value together with the oracle that produced it."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    oracle: OracleKind
    inputs: Dict[str, Any]
    expected: Dict[str, Any]
    provenance: str = Field("DERIVED", description="Where the expected values come from")
    tolerance: float = Field(..., ge=0)


__all__ = ["OracleKind", "GoldenFixture"]
