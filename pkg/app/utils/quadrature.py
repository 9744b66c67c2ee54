"""
Deterministic tensor-grid quadrature of single-indication posteriors.

Used to check the samplers. Nothing here calls the production kernels: log-likelihoods,
grids and prior densities are written out again with numpy, and tail constants come
from mpmath.

With one indication, q integrates to Pr(zeta = 1) = e / (e + f), each cluster mean
integrates analytically (theta | g, tau^2 ~ N(mean_g, sd_g^2 + tau^2)) and tau^2 is
integrated on a log grid. In the drift model omega integrates to equal spike/slab
weights under its uniform prior, leaving a one-dimensional integral over beta.
"""
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np

from app.schemas.model import HalfCauchyPrior, HierHyperparams, IndicationQuasiData, ModelKind

LOG_TAU2_MIN = np.log(1e-8)
LOG_TAU2_MAX = np.log(1e12)


@dataclass(frozen=True)
class QuadratureResult:
    q_high: float
    q_low: float
    prob_low_better: Optional[float] = None
    drift_mean: Optional[float] = None
    spike_prob: Optional[float] = None


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _loglik(z, n, x):
    return z * _log_sigmoid(x) + (n - z) * _log_sigmoid(-x)


def _sigmoid(x):
    return np.exp(_log_sigmoid(x))


def sinh_grid(centre: float, scale: float, half_width: float, points: int):
    """Nodes x = centre + scale * sinh(t) on a uniform t grid, with trapezoid weights in x."""
    t = np.linspace(-half_width, half_width, points)
    dt = t[1] - t[0]
    x = centre + scale * np.sinh(t)
    w = np.full(points, dt)
    w[0] = w[-1] = dt / 2
    return x, w * scale * np.cosh(t)


def _log_normal(x, mean, var):
    return -0.5 * np.log(2 * np.pi * var) - 0.5 * (x - mean) ** 2 / var


def _logsumexp(a, axis=None):
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else float(out.squeeze())


class _Tau2Density:
    """Prior density of tau^2 in log tau^2, with the mass beyond the grid as a constant."""

    def __init__(self, hyper: HierHyperparams, points: int):
        self.lam = np.linspace(LOG_TAU2_MIN, LOG_TAU2_MAX, points)
        dl = self.lam[1] - self.lam[0]
        self.log_w = np.full(points, np.log(dl))
        self.log_w[0] = self.log_w[-1] = np.log(dl / 2)

        prior = hyper.tau2_prior
        upper = mpmath.mpf(float(np.exp(LOG_TAU2_MAX)))
        if isinstance(prior, HalfCauchyPrior):
            s = prior.scale
            # density of tau is 2 / (pi s (1 + tau^2 / s^2)); Jacobian tau / 2 into log tau^2
            self.log_dens = np.log(2 / (np.pi * s)) - np.log1p(np.exp(self.lam) / s ** 2) + 0.5 * self.lam - np.log(2)

            def dens(x):
                return 2 / (mpmath.pi * s * (1 + x / s ** 2)) / (2 * mpmath.sqrt(x))
        else:
            a, b = prior.a, prior.b
            log_norm = a * np.log(b) - float(mpmath.loggamma(a))
            self.log_dens = log_norm - a * self.lam - b * np.exp(-self.lam)

            def dens(x):
                return mpmath.exp(log_norm) * x ** (-a - 1) * mpmath.exp(-b / x)

        # beyond the grid N(theta; m, v + tau^2) no longer depends on theta
        self.tail = float(mpmath.quad(lambda x: dens(x) / mpmath.sqrt(2 * mpmath.pi * x), [upper, mpmath.inf]))

    def log_marginal(self, theta, mean, var) -> np.ndarray:
        """log of the integral over tau^2 of N(theta; mean, var + tau^2) p(tau^2)."""
        tau2 = np.exp(self.lam)
        terms = _log_normal(theta[:, None], mean, var + tau2[None, :]) + self.log_dens[None, :] + self.log_w[None, :]
        body = _logsumexp(terms, axis=1)
        return np.logaddexp(body, np.log(self.tail)) if self.tail > 0 else body


def quadrature_oracle(
    data: IndicationQuasiData,
    hyper: HierHyperparams,
    kind: ModelKind = ModelKind.V1,
    points: int = 801,
    tau2_fixed: Optional[float] = None,
    zeta_fixed: Optional[int] = None,
) -> QuadratureResult:
    """
    Posterior means for one indication.

    Args:
        data: quasi-events of the single indication
        hyper: model hyperparameters
        kind: v1, nc or v2
        points: grid points per dimension (at least 400)
        tau2_fixed: condition on this tau^2 instead of integrating it
        zeta_fixed: condition on this cluster label (clustered models only)
    """
    if points < 400:
        raise ValueError("quadrature needs at least 400 points per dimension")
    if kind is ModelKind.CONJUGATE:
        raise ValueError("the conjugate model has a closed form")

    z_h, n_h, z_l, n_l = data.z_H2, data.n_H2, data.z_L2, data.n_L2
    eta, w_eta = sinh_grid(np.log((z_h + 0.5) / (n_h - z_h + 0.5)), 0.5, 40.0, points)
    theta, w_theta = sinh_grid(0.0, 0.05, 40.0, points)
    with np.errstate(divide="ignore"):
        log_w_eta = np.log(w_eta)
        log_w_theta = np.log(w_theta)

    # prior on theta, marginal over cluster label, cluster mean and tau^2
    if kind is ModelKind.NC:
        components = [(0, 1.0, hyper.nc_mu_mean, hyper.nc_mu_sd ** 2)]
    else:
        p1 = hyper.zeta_beta_a / (hyper.zeta_beta_a + hyper.zeta_beta_b)
        components = [
            (0, 1.0 - p1, hyper.mu0_mean, hyper.mu0_sd ** 2),
            (1, p1, hyper.mu1_mean, hyper.mu1_sd ** 2),
        ]
        if zeta_fixed is not None:
            components = [(g, 1.0, m, v) for g, _, m, v in components if g == zeta_fixed]

    tau2_density = None if tau2_fixed is not None else _Tau2Density(hyper, max(points, 2000))
    log_comp = []
    for g, weight, mean, var in components:
        if tau2_fixed is not None:
            lm = _log_normal(theta, mean, var + tau2_fixed)
        else:
            lm = tau2_density.log_marginal(theta, mean, var)
        log_comp.append((g, np.log(weight) + lm))
    log_prior_theta = np.logaddexp.reduce(np.stack([c for _, c in log_comp]), axis=0)

    # A(eta): Beta(c, d) prior on the high-dose quasi-probability plus its likelihood
    log_a = hyper.q_beta_a * _log_sigmoid(eta) + hyper.q_beta_b * _log_sigmoid(-eta) + _loglik(z_h, n_h, eta)

    # B(eta, theta): low-dose likelihood and theta prior
    log_b = _loglik(z_l, n_l, eta[:, None] + theta[None, :]) + log_prior_theta[None, :] + log_w_theta[None, :]
    log_b_marg = _logsumexp(log_b, axis=1)

    # C(eta): stage-1 likelihood integrated over the drift
    if kind is ModelKind.V2:
        beta, w_beta = sinh_grid(0.0, 0.05, 10.0, points)
        log_p_spike = np.log(0.5) + _log_normal(beta, 0.0, hyper.spike_var)
        log_p_slab = np.log(0.5) + _log_normal(beta, 0.0, hyper.slab_var)
        log_p_beta = np.logaddexp(log_p_spike, log_p_slab) + np.log(w_beta)
        log_c = _loglik(data.z_H1, data.n_H1, eta[:, None] + beta[None, :]) + log_p_beta[None, :]
        log_c_marg = _logsumexp(log_c, axis=1)
    else:
        log_c_marg = np.zeros_like(eta)

    log_joint_eta = log_a + log_b_marg + log_c_marg + log_w_eta
    log_z = _logsumexp(log_joint_eta)
    weights = np.exp(log_joint_eta - log_z)

    q_high = float(np.sum(weights * _sigmoid(eta)))

    # E[sigmoid(eta + theta)] needs theta inside the B integral
    cond_b = np.exp(log_b - log_b_marg[:, None])
    q_low = float(np.sum(weights * np.sum(cond_b * _sigmoid(eta[:, None] + theta[None, :]), axis=1)))

    prob_low_better = None
    if kind is not ModelKind.NC:
        comp1 = dict(log_comp).get(1)
        if comp1 is None:
            prob_low_better = float(zeta_fixed == 1)
        else:
            log_b1 = _loglik(z_l, n_l, eta[:, None] + theta[None, :]) + comp1[None, :] + log_w_theta[None, :]
            share = np.exp(_logsumexp(log_b1, axis=1) - log_b_marg)
            prob_low_better = float(np.sum(weights * share))

    drift_mean = spike_prob = None
    if kind is ModelKind.V2:
        cond_c = np.exp(log_c - log_c_marg[:, None])
        drift_mean = float(np.sum(weights * np.sum(cond_c * beta[None, :], axis=1)))
        resp_spike = np.exp(log_p_spike - np.logaddexp(log_p_spike, log_p_slab))
        spike_prob = float(np.sum(weights * np.sum(cond_c * resp_spike[None, :], axis=1)))

    return QuadratureResult(
        q_high=q_high,
        q_low=q_low,
        prob_low_better=prob_low_better,
        drift_mean=drift_mean,
        spike_prob=spike_prob,
    )
