from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ModelKind(str, Enum):
    CONJUGATE = "conjugate"
    V1 = "v1"
    NC = "nc"
    V2 = "v2"


class InverseGammaPrior(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["inverse_gamma"] = "inverse_gamma"
    a: float = Field(1e-4, gt=0)
    b: float = Field(1e-4, gt=0)


class HalfCauchyPrior(BaseModel):
    """Half-Cauchy prior on the between-indication standard deviation tau."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["half_cauchy"] = "half_cauchy"
    scale: float = Field(1.0, gt=0)


Tau2Prior = Annotated[Union[InverseGammaPrior, HalfCauchyPrior], Field(discriminator="kind")]


class HierHyperparams(BaseModel):
    """Fixed hyperparameters of the hierarchical utility models."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    # cluster means of theta; cluster 1 means the lower dose has the higher utility
    mu0_mean: float = -0.05
    mu1_mean: float = 0.05
    mu0_sd: float = Field(0.1, gt=0)
    mu1_sd: float = Field(0.1, gt=0)
    tau2_prior: Tau2Prior = Field(default_factory=InverseGammaPrior)
    tau2_floor: float = Field(1e-8, gt=0)

    # Beta prior on the high dose quasi-probability
    q_beta_a: float = Field(0.1, gt=0)
    q_beta_b: float = Field(0.1, gt=0)
    # Beta prior on the cluster weight
    zeta_beta_a: float = Field(0.1, gt=0)
    zeta_beta_b: float = Field(0.1, gt=0)

    # drift model
    spike_var: float = Field(0.01, gt=0)
    slab_var: float = Field(0.25, gt=0)
    omega_beta_a: float = Field(1.0, gt=0)
    omega_beta_b: float = Field(1.0, gt=0)

    # single-mean model without clustering
    nc_mu_mean: float = 0.0
    nc_mu_sd: float = Field(0.1, gt=0)

    @model_validator(mode="after")
    def spike_below_slab(self):
        if not self.spike_var < self.slab_var:
            raise ValueError("spike_var must be smaller than slab_var")
        return self


class IndicationQuasiData(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    index: int = Field(..., ge=0, description="Indication number within the trial")
    z_H2: float = Field(..., ge=0)
    n_H2: int = Field(..., ge=0)
    z_L2: float = Field(..., ge=0)
    n_L2: int = Field(..., ge=0)
    z_H1: float = Field(0.0, ge=0)
    n_H1: int = Field(0, ge=0)
    active: bool = True

    @model_validator(mode="after")
    def events_within_size(self):
        for z, n, cell in ((self.z_H2, self.n_H2, "H2"), (self.z_L2, self.n_L2, "L2"), (self.z_H1, self.n_H1, "H1")):
            if z > n + 1e-9:
                raise ValueError(f"quasi-events z_{cell}={z} exceed n_{cell}={n}")
        return self


class QuasiData(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    indications: List[IndicationQuasiData]

    @property
    def active(self) -> List[IndicationQuasiData]:
        return [d for d in self.indications if d.active]


class McmcConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_iter: int = Field(6000, ge=1, description="Total iterations including burn-in")
    n_burn: int = Field(2000, ge=0)
    thin: int = Field(1, ge=1)
    proposal_sd_init: float = Field(0.5, gt=0)
    adapt_window: int = Field(50, ge=1)
    target_accept: float = Field(0.35, gt=0, lt=1)
    seed: int = Field(0, ge=0, lt=2**64)
    likelihood_on: bool = True
    diagnostics: bool = Field(True, description="Compute effective sample sizes and Monte Carlo errors")

    @model_validator(mode="after")
    def burn_below_total(self):
        if not self.n_iter > self.n_burn:
            raise ValueError(f"n_iter={self.n_iter} must exceed n_burn={self.n_burn}")
        if (self.n_iter - self.n_burn) // self.thin < 1:
            raise ValueError("thinning leaves no kept draws")
        return self

    @property
    def n_kept(self) -> int:
        return (self.n_iter - self.n_burn) // self.thin


class ConjugatePosterior(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float
    beta: float

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


class IndicationPosterior(BaseModel):
    model_config = ConfigDict(frozen=True)

    q_high: float
    q_low: float
    mcse_high: Optional[float] = None
    mcse_low: Optional[float] = None
    ess_high: Optional[float] = None
    ess_low: Optional[float] = None
    theta_mean: Optional[float] = None
    prob_low_better: Optional[float] = Field(None, description="Posterior probability of the low-dose cluster")
    drift_mean: Optional[float] = None
    spike_prob: Optional[float] = None


class PosteriorSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: ModelKind
    indications: Dict[int, IndicationPosterior]
    mu0: Optional[float] = None
    mu1: Optional[float] = None
    mu: Optional[float] = None
    tau2: Optional[float] = None
    q: Optional[float] = None
    omega: Optional[float] = None
    acceptance: Dict[str, float] = Field(default_factory=dict)
    ess: Dict[str, float] = Field(default_factory=dict)
    tau2_floor_rate: float = 0.0
    n_kept: int = 0


__all__ = [
    "ModelKind",
    "InverseGammaPrior",
    "HalfCauchyPrior",
    "Tau2Prior",
    "HierHyperparams",
    "IndicationQuasiData",
    "QuasiData",
    "McmcConfig",
    "ConjugatePosterior",
    "IndicationPosterior",
    "PosteriorSummary",
]
