"""
Outcome probability model: utilities, joint bivariate binary outcomes,
quasi-probabilities, quasi-event counts and outcome sampling.
"""
from math import sqrt
from typing import Tuple

import numpy as np

from app.core.exceptions import InfeasibleAssociation
from app.core.logger import get_logger
from app.schemas.outcome import (
    CELL_NAMES,
    CELL_ORDER,
    JointOutcomeProb,
    OutcomeCounts,
    UtilityTable,
)

logger = get_logger("outcome_service")

# Cells within this distance of [0, 1] are rounding noise from the closed form.
_CELL_SLACK = 1e-13


class OutcomeService:
    """Pure functions over the outcome types; only sampling touches a caller-owned stream."""

    def solve_joint(self, pi_T: float, pi_R: float, phi: float) -> JointOutcomeProb:
        """
        Build the joint distribution with marginals (pi_T, pi_R) and association phi.

        Raises:
            InfeasibleAssociation: if a cell falls outside [0, 1]
        """
        for name, value in (("pi_T", pi_T), ("pi_R", pi_R)):
            if not 0.0 <= value <= 1.0:
                raise InfeasibleAssociation(f"{name}={value} is not a probability", cell=name, value=value)
        if not -1.0 < phi < 1.0:
            raise InfeasibleAssociation(f"phi={phi} must lie in (-1, 1)", cell="phi", value=phi)

        spread = sqrt(pi_R * (1 - pi_R) * pi_T * (1 - pi_T))
        if spread == 0.0 and phi != 0.0:
            raise InfeasibleAssociation(
                f"phi={phi} is undefined for degenerate marginals pi_T={pi_T}, pi_R={pi_R}",
                cell="11",
                value=pi_T * pi_R,
            )

        p11 = pi_T * pi_R + phi * spread
        p10 = pi_T - p11
        p01 = pi_R - p11
        p00 = 1.0 - pi_T - pi_R + p11

        cells = {"01": p01, "00": p00, "11": p11, "10": p10}
        for name, value in cells.items():
            if value < -_CELL_SLACK or value > 1.0 + _CELL_SLACK:
                raise InfeasibleAssociation(
                    f"cell p{name}={value:.6g} outside [0, 1] for pi_T={pi_T}, pi_R={pi_R}, phi={phi}",
                    cell=name,
                    value=value,
                )
            cells[name] = min(max(value, 0.0), 1.0)

        return JointOutcomeProb(p01=cells["01"], p00=cells["00"], p11=cells["11"], p10=cells["10"])

    def mean_utility(self, u: UtilityTable, p: JointOutcomeProb) -> float:
        """Probability-weighted average utility on the 0-100 scale."""
        return float(np.dot(u.as_tuple(), p.as_tuple()))

    def quasi_probability(self, u: UtilityTable, p: JointOutcomeProb) -> float:
        return self.mean_utility(u, p) / 100.0

    def quasi_events(self, u: UtilityTable, x: OutcomeCounts) -> float:
        """Utility-weighted count divided by 100; real-valued in [0, n]."""
        return float(np.dot(u.as_tuple(), x.as_tuple())) / 100.0

    def quasi_events_from_cells(self, u: UtilityTable, cells: np.ndarray) -> float:
        return float(np.dot(u.as_tuple(), cells)) / 100.0

    def sample_outcome(self, p: JointOutcomeProb, rng: np.random.Generator) -> Tuple[int, int]:
        """One categorical draw over the four cells."""
        idx = int(rng.choice(4, p=np.asarray(p.as_tuple())))
        return CELL_ORDER[idx]

    def sample_counts(self, p: JointOutcomeProb, n: int, rng: np.random.Generator) -> np.ndarray:
        """Cell counts for n patients treated under p, in cell order."""
        if n <= 0:
            return np.zeros(4, dtype=np.int64)
        return rng.multinomial(n, np.asarray(p.as_tuple())).astype(np.int64)

    def empirical_joint(self, x: OutcomeCounts) -> JointOutcomeProb:
        n = x.n
        if n == 0:
            raise ValueError("empirical distribution of zero patients is undefined")
        cells = [c / n for c in x.as_tuple()]
        # absorb rounding into the largest cell
        cells[int(np.argmax(cells))] += 1.0 - sum(cells)
        return JointOutcomeProb(**{f"p{name}": v for name, v in zip(CELL_NAMES, cells)})


outcome_service = OutcomeService()
