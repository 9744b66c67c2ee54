"""
Sampler plumbing: proposal-scale adaptation, effective sample size and chain dumps.
"""
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd

from app.core.logger import get_logger

logger = get_logger("mcmc")


class ProposalScaler:
    """
    Robbins-Monro adaptation of random-walk proposal scales.

    Acceptances are counted per window during burn-in; at each window end the log
    scale moves by (rate - target) / sqrt(window number). Scales freeze once burn-in ends.
    """

    def __init__(self, size: int, init_sd: float, target: float, window: int):
        self.log_sd = np.full(size, np.log(init_sd))
        self.target = target
        self.window = window
        self._window_accepts = np.zeros(size)
        self._window_steps = 0
        self._windows_done = 0
        self.frozen = False
        self.kept_accepts = np.zeros(size)
        self.kept_steps = 0

    @property
    def sd(self) -> np.ndarray:
        return np.exp(self.log_sd)

    def record(self, accepted: np.ndarray):
        if self.frozen:
            self.kept_accepts += accepted
            self.kept_steps += 1
            return
        self._window_accepts += accepted
        self._window_steps += 1
        if self._window_steps == self.window:
            self._windows_done += 1
            rate = self._window_accepts / self._window_steps
            self.log_sd += (rate - self.target) / np.sqrt(self._windows_done)
            self._window_accepts[:] = 0.0
            self._window_steps = 0

    def freeze(self):
        self.frozen = True

    def acceptance_rate(self) -> np.ndarray:
        if self.kept_steps == 0:
            return np.full_like(self.kept_accepts, np.nan)
        return self.kept_accepts / self.kept_steps


def effective_sample_size(draws: np.ndarray) -> float:
    """Bulk ESS of a single chain."""
    import arviz as az

    draws = np.asarray(draws, dtype=float)
    if draws.size < 4 or np.ptp(draws) == 0.0:
        return float(draws.size)
    return float(az.ess(draws[np.newaxis, :]))


def monte_carlo_se(draws: np.ndarray, ess: Optional[float] = None) -> float:
    draws = np.asarray(draws, dtype=float)
    if ess is None:
        ess = effective_sample_size(draws)
    if ess <= 0:
        return float("nan")
    return float(np.std(draws, ddof=1) / np.sqrt(ess))


def write_chain(path: Path, columns: Dict[str, np.ndarray]) -> Path:
    """Write kept draws, one row per iteration, as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(columns)
    frame.index.name = "iteration"
    frame.to_csv(path)
    logger.debug(f"Chain dump written: {path} ({len(frame)} rows)")
    return path
