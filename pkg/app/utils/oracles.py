"""
Independent reference computations for the screening rules and the outcome model.

Beta tails come from adaptive mpmath quadrature of the beta density and binomial
sums from exact mpmath arithmetic, so none of these share code with the
scipy-based production paths they are compared against.
"""
from typing import Dict, List

import mpmath
import numpy as np


def beta_tail_quadrature(alpha: float, beta: float, t: float, direction: str) -> float:
    """Pr(pi > t) or Pr(pi < t) under Beta(alpha, beta) by adaptive quadrature."""
    with mpmath.workdps(30):
        a, b, t = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(t)
        log_norm = mpmath.loggamma(a + b) - mpmath.loggamma(a) - mpmath.loggamma(b)

        def density(x):
            return mpmath.exp(log_norm + (a - 1) * mpmath.log(x) + (b - 1) * mpmath.log1p(-x))

        # end-point singularities of the density stay on interval ends
        if direction == "above":
            value = mpmath.quad(density, [t, (1 + t) / 2, 1])
        else:
            value = mpmath.quad(density, [0, t / 2, t])
    return float(value)


def toxicity_boundary_by_enumeration(n: int, tox_limit: float, cutoff: float,
                                     prior_a: float = 0.1, prior_b: float = 0.1) -> int:
    """Smallest x_T whose posterior toxicity tail exceeds cutoff; n + 1 when none does."""
    for x in range(n + 1):
        if beta_tail_quadrature(prior_a + x, prior_b + n - x, tox_limit, "above") > cutoff:
            return x
    return n + 1


def futility_boundary_by_enumeration(n: int, resp_floor: float, cutoff: float,
                                     prior_a: float = 0.1, prior_b: float = 0.1) -> int:
    """Largest x_R whose posterior shortfall probability exceeds cutoff; -1 when none does."""
    boundary = -1
    for x in range(n + 1):
        if beta_tail_quadrature(prior_a + x, prior_b + n - x, resp_floor, "below") > cutoff:
            boundary = x
    return boundary


def binomial_cdf_exact(k: int, n: int, p: float) -> float:
    if k < 0:
        return 0.0
    p = mpmath.mpf(p)
    return float(mpmath.fsum(mpmath.binomial(n, x) * p ** x * (1 - p) ** (n - x) for x in range(min(k, n) + 1)))


def false_negative_by_enumeration(n: int, pi_true: float, resp_floor: float, cutoff: float,
                                  prior_a: float = 0.1, prior_b: float = 0.1) -> float:
    boundary = futility_boundary_by_enumeration(n, resp_floor, cutoff, prior_a, prior_b)
    return binomial_cdf_exact(boundary, n, pi_true)


def false_negative_by_simulation(n: int, pi_true: float, boundary: int, draws: int, seed: int) -> Dict[str, float]:
    """Monte Carlo estimate of Pr(x_R <= boundary) with its binomial standard error."""
    rng = np.random.default_rng(seed)
    x = rng.binomial(n, pi_true, size=draws)
    estimate = float(np.mean(x <= boundary))
    se = float(np.sqrt(max(estimate * (1 - estimate), 1.0 / draws) / draws))
    return {"estimate": estimate, "se": se}


def calibrate_by_scan(n_min: int, n_max: int, pi_true: float, resp_floor: float, cutoff: float) -> List[Dict[str, float]]:
    """Full table of (n, false-negative probability) over the range."""
    return [
        {"n": n, "fn": false_negative_by_enumeration(n, pi_true, resp_floor, cutoff)}
        for n in range(n_min, n_max + 1)
    ]


def joint_cells_exact(pi_T: float, pi_R: float, phi: float) -> Dict[str, float]:
    """Closed-form joint cells at 30 significant digits."""
    t, r, f = mpmath.mpf(pi_T), mpmath.mpf(pi_R), mpmath.mpf(phi)
    p11 = t * r + f * mpmath.sqrt(r * (1 - r) * t * (1 - t))
    return {
        "p01": float(r - p11),
        "p00": float(1 - t - r + p11),
        "p11": float(p11),
        "p10": float(t - p11),
    }
