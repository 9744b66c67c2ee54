"""
Posterior inference for the dose-optimisation models.

Pool and Independent use the conjugate quasi-binomial update; the ROMI designs use
the hierarchical models fitted by HierarchicalSampler.
"""
from pathlib import Path
from typing import Optional

import numpy as np

from app.core.exceptions import DegenerateData
from app.core.logger import get_logger
from app.schemas.model import (
    ConjugatePosterior,
    HierHyperparams,
    IndicationPosterior,
    McmcConfig,
    ModelKind,
    PosteriorSummary,
    QuasiData,
)
from app.services.hier_sampler import ChainDraws, HierarchicalSampler
from app.utils.mcmc import effective_sample_size, monte_carlo_se, write_chain

logger = get_logger("model_service")


class ModelService:

    def fit_conjugate(self, z: float, n: float, prior_a: float = 0.1, prior_b: float = 0.1) -> ConjugatePosterior:
        """Beta(prior_a + z, prior_b + n - z); z may be non-integer."""
        if n < 0 or not 0 <= z <= n + 1e-9:
            raise DegenerateData(f"quasi-events z={z} must lie in [0, n={n}]", context={"z": z, "n": n})
        return ConjugatePosterior(alpha=prior_a + z, beta=prior_b + n - z)

    def fit_v1(self, data: QuasiData, hyper: HierHyperparams, mcmc: McmcConfig,
               chain_path: Optional[Path] = None) -> PosteriorSummary:
        """Latent-cluster hierarchical model on stage-2 data."""
        return self._fit(ModelKind.V1, data, hyper, mcmc, chain_path)

    def fit_nc(self, data: QuasiData, hyper: HierHyperparams, mcmc: McmcConfig,
               chain_path: Optional[Path] = None) -> PosteriorSummary:
        """Hierarchical model with one common mean and no clustering."""
        return self._fit(ModelKind.NC, data, hyper, mcmc, chain_path)

    def fit_v2(self, data: QuasiData, hyper: HierHyperparams, mcmc: McmcConfig,
               chain_path: Optional[Path] = None) -> PosteriorSummary:
        """Latent-cluster model with spike-and-slab drift linking stage-1 high-dose data."""
        return self._fit(ModelKind.V2, data, hyper, mcmc, chain_path)

    def fit(self, kind: ModelKind, data: QuasiData, hyper: HierHyperparams, mcmc: McmcConfig,
            chain_path: Optional[Path] = None) -> PosteriorSummary:
        dispatch = {ModelKind.V1: self.fit_v1, ModelKind.NC: self.fit_nc, ModelKind.V2: self.fit_v2}
        return dispatch[kind](data, hyper, mcmc, chain_path)

    def sample(self, kind: ModelKind, data: QuasiData, hyper: HierHyperparams, mcmc: McmcConfig) -> ChainDraws:
        """
        Kept draws of a hierarchical fit on the active indications.

        Raises:
            DegenerateData: if no indication is active, or with the likelihood on an active
                indication has no stage-2 patients on one dose
        """
        active = data.active
        if not active:
            raise DegenerateData("no active indication to fit")
        if mcmc.likelihood_on:
            for d in active:
                if d.n_H2 == 0 or d.n_L2 == 0:
                    raise DegenerateData(
                        f"indication {d.index} has no stage-2 patients on one dose",
                        context={"index": d.index, "n_H2": d.n_H2, "n_L2": d.n_L2},
                    )

        return HierarchicalSampler(kind, active, hyper, mcmc).run()

    def _fit(self, kind: ModelKind, data: QuasiData, hyper: HierHyperparams, mcmc: McmcConfig,
             chain_path: Optional[Path]) -> PosteriorSummary:
        draws = self.sample(kind, data, hyper, mcmc)
        if chain_path is not None:
            write_chain(chain_path, draws.as_columns())
        return self.summarize(draws, mcmc.diagnostics)

    def summarize(self, draws: ChainDraws, diagnostics: bool = True) -> PosteriorSummary:
        indications = {}
        ess = {}
        for j, k in enumerate(draws.indices):
            q_high = draws.q_high[:, j]
            q_low = draws.q_low[:, j]
            entry = {
                "q_high": float(q_high.mean()),
                "q_low": float(q_low.mean()),
                "theta_mean": float(draws.theta[:, j].mean()),
            }
            if diagnostics:
                ess_h = effective_sample_size(q_high)
                ess_l = effective_sample_size(q_low)
                entry.update(
                    ess_high=ess_h,
                    ess_low=ess_l,
                    mcse_high=monte_carlo_se(q_high, ess_h),
                    mcse_low=monte_carlo_se(q_low, ess_l),
                )
                ess[f"q_high_{k}"] = ess_h
                ess[f"q_low_{k}"] = ess_l
            if draws.zeta is not None:
                entry["prob_low_better"] = float(draws.zeta[:, j].mean())
            if draws.beta is not None:
                entry["drift_mean"] = float(draws.beta[:, j].mean())
                entry["spike_prob"] = float(draws.spike[:, j].mean())
            indications[k] = IndicationPosterior(**entry)

        def _mean(values):
            return None if values is None else float(np.mean(values))

        return PosteriorSummary(
            model=draws.kind,
            indications=indications,
            mu0=_mean(draws.mu0),
            mu1=_mean(draws.mu1),
            mu=_mean(draws.mu),
            tau2=_mean(draws.tau2),
            q=_mean(draws.q),
            omega=_mean(draws.omega),
            acceptance=draws.acceptance,
            ess=ess,
            tau2_floor_rate=draws.tau2_floor_hits / max(draws.n_steps, 1),
            n_kept=int(draws.q_high.shape[0]),
        )


model_service = ModelService()
