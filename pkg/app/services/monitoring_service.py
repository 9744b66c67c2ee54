"""
Beta-binomial posterior screening rules and exact enumeration of their error rates.
"""
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import special
from scipy.stats import binom

from app.core.exceptions import DomainError, NoFeasibleN
from app.core.logger import get_logger
from app.schemas.monitoring import CalibrationResult, MonitoringLimits, TailDirection

logger = get_logger("monitoring_service")


def beta_tail(alpha: float, beta: float, t: float, direction: TailDirection | str) -> float:
    """Pr(pi > t) or Pr(pi < t) under Beta(alpha, beta)."""
    if not 0.0 < t < 1.0:
        raise DomainError(f"threshold t={t} must lie in (0, 1)", context={"t": t})
    if alpha <= 0 or beta <= 0:
        raise DomainError(f"Beta({alpha}, {beta}) needs positive parameters", context={"alpha": alpha, "beta": beta})
    direction = TailDirection(direction)
    if direction is TailDirection.ABOVE:
        return float(special.betaincc(alpha, beta, t))
    return float(special.betainc(alpha, beta, t))


@lru_cache(maxsize=4096)
def _toxicity_boundary(n: int, tox_limit: float, cutoff: float, prior_a: float, prior_b: float) -> int:
    """Smallest x_T that stops at n patients; n + 1 when none does."""
    x = np.arange(n + 1)
    probs = special.betaincc(prior_a + x, prior_b + n - x, tox_limit)
    hits = np.flatnonzero(probs > cutoff)
    return int(hits[0]) if hits.size else n + 1


@lru_cache(maxsize=4096)
def _futility_boundary(n: int, resp_floor: float, cutoff: float, prior_a: float, prior_b: float) -> int:
    """Largest x_R that stops at n patients; -1 when none does."""
    x = np.arange(n + 1)
    probs = special.betainc(prior_a + x, prior_b + n - x, resp_floor)
    hits = np.flatnonzero(probs > cutoff)
    return int(hits[-1]) if hits.size else -1


class MonitoringService:
    """Toxicity and futility rules with cached integer stopping boundaries."""

    def toxicity_probability(self, n: int, x_T: int, lim: MonitoringLimits) -> float:
        return beta_tail(lim.prior_a + x_T, lim.prior_b + n - x_T, lim.tox_limit, TailDirection.ABOVE)

    def futility_probability(self, n: int, x_R: int, lim: MonitoringLimits) -> float:
        return beta_tail(lim.prior_a + x_R, lim.prior_b + n - x_R, lim.resp_floor, TailDirection.BELOW)

    def toxicity_boundary(self, n: int, lim: MonitoringLimits, cutoff: float) -> int:
        return _toxicity_boundary(n, lim.tox_limit, cutoff, lim.prior_a, lim.prior_b)

    def futility_boundary(self, n: int, lim: MonitoringLimits, cutoff: float) -> int:
        return _futility_boundary(n, lim.resp_floor, cutoff, lim.prior_a, lim.prior_b)

    def toxicity_stop(self, n: int, x_T: int, lim: MonitoringLimits, cutoff: float) -> bool:
        _check_count(n, x_T, "x_T")
        return x_T >= self.toxicity_boundary(n, lim, cutoff)

    def futility_stop(self, n: int, x_R: int, lim: MonitoringLimits, cutoff: float) -> bool:
        _check_count(n, x_R, "x_R")
        return x_R <= self.futility_boundary(n, lim, cutoff)

    def false_negative_prob(self, n: int, pi_true: float, lim: MonitoringLimits, cutoff: float) -> float:
        """Exact probability that the futility rule fires when the response rate is pi_true."""
        if not 0.0 <= pi_true <= 1.0:
            raise DomainError(f"pi_true={pi_true} is not a probability", context={"pi_true": pi_true})
        boundary = self.futility_boundary(n, lim, cutoff)
        if boundary < 0:
            return 0.0
        return float(binom.cdf(boundary, n, pi_true))

    def calibrate_stage1_n(
        self,
        lim: MonitoringLimits,
        delta: float,
        cutoff: float,
        max_fn: float,
        n_range: Tuple[int, int],
    ) -> CalibrationResult:
        """Smallest n in the inclusive range whose false-negative probability at resp_floor + delta is within max_fn."""
        n_min, n_max = n_range
        if n_min > n_max or n_min < 1:
            raise NoFeasibleN(f"empty sample-size range {n_min}..{n_max}", n_range=(n_min, n_max))
        if not 0.0 < max_fn <= 1.0:
            raise DomainError(f"max_fn={max_fn} must lie in (0, 1]", context={"max_fn": max_fn})

        pi_true = lim.resp_floor + delta
        for n in range(n_min, n_max + 1):
            fn = self.false_negative_prob(n, pi_true, lim, cutoff)
            if fn <= max_fn:
                boundary = self.futility_boundary(n, lim, cutoff)
                logger.debug(f"Calibrated stage-1 n={n} (fn={fn:.4g}, boundary={boundary})")
                return CalibrationResult(
                    n=n,
                    boundary=boundary if boundary >= 0 else None,
                    achieved_fn=fn,
                    pi_true=pi_true,
                    max_fn=max_fn,
                    n_min=n_min,
                    n_max=n_max,
                )

        raise NoFeasibleN(
            f"no n in {n_min}..{n_max} keeps the false-negative probability at or below {max_fn}",
            n_range=(n_min, n_max),
        )


def _check_count(n: int, x: int, name: str):
    if n < 0 or not 0 <= x <= n:
        raise DomainError(f"{name}={x} must lie in [0, n={n}]", context={name: x, "n": n})


monitoring_service = MonitoringService()
