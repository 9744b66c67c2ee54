"""
Metropolis-within-Gibbs sampler shared by the hierarchical utility models.

Parameterisation per active indication k:
    eta_k   = logit Q_{H,k}   (stage-2 high dose)
    theta_k = logit Q_{L,k} - logit Q_{H,k}
    beta_k  = logit Q_{H,k,1} - logit Q_{H,k,2}   (drift model only)

Random-walk moves on eta, theta, beta are vectorised over indications, which are
conditionally independent given the global parameters. Everything else is an exact
Gibbs draw, except tau^2 under the half-Cauchy prior (random walk on log tau^2).
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.special import expit, log_expit, logit

from app.core.logger import get_logger
from app.core.rng import make_generator
from app.schemas.model import (
    HalfCauchyPrior,
    HierHyperparams,
    IndicationQuasiData,
    McmcConfig,
    ModelKind,
)
from app.utils.mcmc import ProposalScaler

logger = get_logger("hier_sampler")


def quasi_loglik(z: np.ndarray, n: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Quasi-binomial log likelihood at logit value x; factorial terms omitted."""
    return z * log_expit(x) + (n - z) * log_expit(-x)


def _normal_logpdf(x, mean, var):
    return -0.5 * (x - mean) ** 2 / var - 0.5 * np.log(var)


@dataclass
class ChainDraws:
    """Kept draws of one fit, one row per kept iteration."""
    kind: ModelKind
    indices: List[int]
    q_high: np.ndarray
    q_low: np.ndarray
    theta: np.ndarray
    tau2: np.ndarray
    zeta: Optional[np.ndarray] = None
    mu0: Optional[np.ndarray] = None
    mu1: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    spike: Optional[np.ndarray] = None
    omega: Optional[np.ndarray] = None
    acceptance: Dict[str, float] = field(default_factory=dict)
    tau2_floor_hits: int = 0
    n_steps: int = 0

    def as_columns(self) -> Dict[str, np.ndarray]:
        columns: Dict[str, np.ndarray] = {}
        for j, k in enumerate(self.indices):
            columns[f"q_high_{k}"] = self.q_high[:, j]
            columns[f"q_low_{k}"] = self.q_low[:, j]
            columns[f"theta_{k}"] = self.theta[:, j]
            if self.zeta is not None:
                columns[f"zeta_{k}"] = self.zeta[:, j]
            if self.beta is not None:
                columns[f"beta_{k}"] = self.beta[:, j]
                columns[f"spike_{k}"] = self.spike[:, j]
        for name in ("mu0", "mu1", "mu", "tau2", "q", "omega"):
            value = getattr(self, name)
            if value is not None:
                columns[name] = value
        return columns


class HierarchicalSampler:
    """One fit of the v1, no-clustering or drift model on the active indications."""

    def __init__(
        self,
        kind: ModelKind,
        data: List[IndicationQuasiData],
        hyper: HierHyperparams,
        mcmc: McmcConfig,
    ):
        if kind not in (ModelKind.V1, ModelKind.NC, ModelKind.V2):
            raise ValueError(f"no sampler for model kind {kind}")
        self.kind = kind
        self.hyper = hyper
        self.mcmc = mcmc
        self.indices = [d.index for d in data]
        self.K = len(data)

        self.z_h = np.array([d.z_H2 for d in data], dtype=float)
        self.n_h = np.array([d.n_H2 for d in data], dtype=float)
        self.z_l = np.array([d.z_L2 for d in data], dtype=float)
        self.n_l = np.array([d.n_L2 for d in data], dtype=float)
        self.z_h1 = np.array([d.z_H1 for d in data], dtype=float)
        self.n_h1 = np.array([d.n_H1 for d in data], dtype=float)
        if not mcmc.likelihood_on:
            for arr in (self.z_h, self.n_h, self.z_l, self.n_l, self.z_h1, self.n_h1):
                arr[:] = 0.0

        self.rng = make_generator(mcmc.seed)
        self.clustered = kind in (ModelKind.V1, ModelKind.V2)
        self.drift = kind is ModelKind.V2
        self.half_cauchy = isinstance(hyper.tau2_prior, HalfCauchyPrior)

    # ---- conditional log targets -------------------------------------------------

    def _eta_target(self, eta, theta, beta):
        h = self.hyper
        out = h.q_beta_a * log_expit(eta) + h.q_beta_b * log_expit(-eta)
        out = out + quasi_loglik(self.z_h, self.n_h, eta) + quasi_loglik(self.z_l, self.n_l, eta + theta)
        if self.drift:
            out = out + quasi_loglik(self.z_h1, self.n_h1, eta + beta)
        return out

    def _theta_target(self, theta, eta, centre, tau2):
        return quasi_loglik(self.z_l, self.n_l, eta + theta) - 0.5 * (theta - centre) ** 2 / tau2

    def _beta_target(self, beta, eta, var):
        return quasi_loglik(self.z_h1, self.n_h1, eta + beta) - 0.5 * beta ** 2 / var

    def _log_tau2_target(self, lam, ss):
        scale = self.hyper.tau2_prior.scale
        tau2 = np.exp(lam)
        # half-Cauchy density on tau, Jacobian tau/2 for lam = log tau^2
        return -np.log1p(tau2 / scale ** 2) + 0.5 * lam - 0.5 * self.K * lam - 0.5 * ss / tau2

    # ---- main loop -----------------------------------------------------------------

    def run(self) -> ChainDraws:
        h, cfg, rng, K = self.hyper, self.mcmc, self.rng, self.K
        n_iter, n_burn, thin = cfg.n_iter, cfg.n_burn, cfg.thin
        n_kept = cfg.n_kept
        floor = h.tau2_floor

        eta = logit((self.z_h + 0.5) / (self.n_h + 1.0))
        theta = logit((self.z_l + 0.5) / (self.n_l + 1.0)) - eta
        beta = np.zeros(K)
        spike = np.ones(K, dtype=bool)
        zeta = (theta > 0).astype(np.int64)
        mu = np.array([h.mu0_mean, h.mu1_mean]) if self.clustered else np.array([h.nc_mu_mean])
        tau2 = 0.1
        q = 0.5
        omega = 0.5

        eta_scale = ProposalScaler(K, cfg.proposal_sd_init, cfg.target_accept, cfg.adapt_window)
        theta_scale = ProposalScaler(K, cfg.proposal_sd_init, cfg.target_accept, cfg.adapt_window)
        beta_scale = ProposalScaler(K, cfg.proposal_sd_init, cfg.target_accept, cfg.adapt_window)
        tau_scale = ProposalScaler(1, cfg.proposal_sd_init, cfg.target_accept, cfg.adapt_window)

        # draws whose distribution does not depend on the state
        eps_eta = rng.standard_normal((n_iter, K))
        eps_theta = rng.standard_normal((n_iter, K))
        log_u_eta = np.log(rng.random((n_iter, K)))
        log_u_theta = np.log(rng.random((n_iter, K)))
        u_zeta = rng.random((n_iter, K))
        eps_mu = rng.standard_normal((n_iter, 2))
        if self.half_cauchy:
            eps_tau = rng.standard_normal(n_iter)
            log_u_tau = np.log(rng.random(n_iter))
        else:
            tau_gamma = rng.standard_gamma(h.tau2_prior.a + 0.5 * K, size=n_iter)
        if self.drift:
            eps_beta = rng.standard_normal((n_iter, K))
            log_u_beta = np.log(rng.random((n_iter, K)))
            u_spike = rng.random((n_iter, K))

        out_q_high = np.empty((n_kept, K))
        out_q_low = np.empty((n_kept, K))
        out_theta = np.empty((n_kept, K))
        out_tau2 = np.empty(n_kept)
        out_zeta = np.empty((n_kept, K), dtype=np.int8) if self.clustered else None
        out_mu = np.empty((n_kept, mu.size))
        out_q = np.empty(n_kept) if self.clustered else None
        out_beta = np.empty((n_kept, K)) if self.drift else None
        out_spike = np.empty((n_kept, K), dtype=np.int8) if self.drift else None
        out_omega = np.empty(n_kept) if self.drift else None

        floor_hits = 0
        kept = 0
        for it in range(n_iter):
            if it == n_burn:
                for scaler in (eta_scale, theta_scale, beta_scale, tau_scale):
                    scaler.freeze()

            # eta
            prop = eta + eta_scale.sd * eps_eta[it]
            log_r = self._eta_target(prop, theta, beta) - self._eta_target(eta, theta, beta)
            acc = log_u_eta[it] < log_r
            eta = np.where(acc, prop, eta)
            eta_scale.record(acc)

            # theta
            centre = mu[zeta] if self.clustered else mu[0]
            prop = theta + theta_scale.sd * eps_theta[it]
            log_r = self._theta_target(prop, eta, centre, tau2) - self._theta_target(theta, eta, centre, tau2)
            acc = log_u_theta[it] < log_r
            theta = np.where(acc, prop, theta)
            theta_scale.record(acc)

            if self.clustered:
                # cluster labels
                log_w1 = np.log(q) + _normal_logpdf(theta, mu[1], tau2)
                log_w0 = np.log1p(-q) + _normal_logpdf(theta, mu[0], tau2)
                zeta = (u_zeta[it] < expit(log_w1 - log_w0)).astype(np.int64)

                # cluster means
                for g, (m0, sd0) in enumerate(((h.mu0_mean, h.mu0_sd), (h.mu1_mean, h.mu1_sd))):
                    members = theta[zeta == g]
                    prec = 1.0 / sd0 ** 2 + members.size / tau2
                    mean = (m0 / sd0 ** 2 + members.sum() / tau2) / prec
                    mu[g] = mean + eps_mu[it, g] / np.sqrt(prec)
                centre = mu[zeta]
            else:
                prec = 1.0 / h.nc_mu_sd ** 2 + K / tau2
                mean = (h.nc_mu_mean / h.nc_mu_sd ** 2 + theta.sum() / tau2) / prec
                mu[0] = mean + eps_mu[it, 0] / np.sqrt(prec)
                centre = mu[0]

            # tau^2
            ss = float(np.sum((theta - centre) ** 2))
            if self.half_cauchy:
                lam = np.log(tau2)
                lam_prop = lam + tau_scale.sd[0] * eps_tau[it]
                if np.exp(lam_prop) < floor:
                    floor_hits += 1
                    tau_scale.record(np.zeros(1))
                else:
                    accepted = log_u_tau[it] < self._log_tau2_target(lam_prop, ss) - self._log_tau2_target(lam, ss)
                    if accepted:
                        tau2 = float(np.exp(lam_prop))
                    tau_scale.record(np.array([float(accepted)]))
            else:
                tau2 = (h.tau2_prior.b + 0.5 * ss) / tau_gamma[it]
                if tau2 < floor:
                    tau2 = floor
                    floor_hits += 1

            if self.clustered:
                n1 = int(zeta.sum())
                q = rng.beta(h.zeta_beta_a + n1, h.zeta_beta_b + K - n1)
                q = min(max(q, 1e-300), 1.0 - 1e-16)

            if self.drift:
                log_s1 = np.log(omega) + _normal_logpdf(beta, 0.0, h.spike_var)
                log_s0 = np.log1p(-omega) + _normal_logpdf(beta, 0.0, h.slab_var)
                spike = u_spike[it] < expit(log_s1 - log_s0)
                var = np.where(spike, h.spike_var, h.slab_var)

                prop = beta + beta_scale.sd * eps_beta[it]
                log_r = self._beta_target(prop, eta, var) - self._beta_target(beta, eta, var)
                acc = log_u_beta[it] < log_r
                beta = np.where(acc, prop, beta)
                beta_scale.record(acc)

                n_spike = int(spike.sum())
                omega = rng.beta(h.omega_beta_a + n_spike, h.omega_beta_b + K - n_spike)
                omega = min(max(omega, 1e-300), 1.0 - 1e-16)

            if it >= n_burn and (it - n_burn) % thin == 0 and kept < n_kept:
                out_q_high[kept] = expit(eta)
                out_q_low[kept] = expit(eta + theta)
                out_theta[kept] = theta
                out_tau2[kept] = tau2
                out_mu[kept] = mu
                if self.clustered:
                    out_zeta[kept] = zeta
                    out_q[kept] = q
                if self.drift:
                    out_beta[kept] = beta
                    out_spike[kept] = spike
                    out_omega[kept] = omega
                kept += 1

        acceptance = {
            "eta": float(np.mean(eta_scale.acceptance_rate())),
            "theta": float(np.mean(theta_scale.acceptance_rate())),
        }
        if self.drift:
            acceptance["beta"] = float(np.mean(beta_scale.acceptance_rate()))
        if self.half_cauchy:
            acceptance["log_tau2"] = float(tau_scale.acceptance_rate()[0])

        draws = ChainDraws(
            kind=self.kind,
            indices=self.indices,
            q_high=out_q_high,
            q_low=out_q_low,
            theta=out_theta,
            tau2=out_tau2,
            zeta=out_zeta,
            q=out_q,
            beta=out_beta,
            spike=out_spike,
            omega=out_omega,
            acceptance=acceptance,
            tau2_floor_hits=floor_hits,
            n_steps=n_iter,
        )
        if self.clustered:
            draws.mu0 = out_mu[:, 0]
            draws.mu1 = out_mu[:, 1]
        else:
            draws.mu = out_mu[:, 0]
        logger.debug(f"{self.kind.value} fit on {K} indications: acceptance {acceptance}, tau2 floor hits {floor_hits}")
        return draws
