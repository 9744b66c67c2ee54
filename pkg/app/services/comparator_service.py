"""
Comparator designs.

Pool treats the basket as one population: every indication gets the same OBD, chosen
from pooled quasi-events under the conjugate model. Independent runs a separate
two-arm randomized trial in each indication.
"""
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.core.logger import get_logger
from app.schemas.design import (
    DesignConfig,
    DesignKind,
    Dose,
    DoseStatus,
    IndicationState,
    IndicationStatus,
    Selection,
    StopReason,
    TrialResult,
)
from app.schemas.model import IndicationPosterior
from app.schemas.monitoring import MonitoringLimits
from app.schemas.outcome import UtilityTable
from app.schemas.scenario import ScenarioSpec
from app.services.design_service import (
    DesignService,
    Verdict,
    indication_result,
    stopped_status,
    check_dimensions,
    design_service,
    select_dose,
)
from app.services.model_service import ModelService, model_service
from app.services.outcome_service import OutcomeService, outcome_service

logger = get_logger("comparator_service")

DOSES = (Dose.HIGH, Dose.LOW)


class ComparatorService:

    def __init__(
        self,
        designs: DesignService = design_service,
        models: ModelService = model_service,
        outcomes: OutcomeService = outcome_service,
    ):
        self.designs = designs
        self.models = models
        self.outcomes = outcomes

    def conjugate_estimates(self, tracks: List[Tuple[np.ndarray, UtilityTable]], lim: MonitoringLimits) -> float:
        """Posterior mean Q from quasi-events summed over (cells, utility) pairs."""
        z = sum(self.outcomes.quasi_events_from_cells(u, cells) for cells, u in tracks)
        n = sum(int(cells.sum()) for cells, _ in tracks)
        return self.models.fit_conjugate(z, n, lim.prior_a, lim.prior_b).mean

    def interim_verdicts(self, cells: Dict[Dose, np.ndarray], lim: MonitoringLimits) -> Dict[Dose, Verdict]:
        return {dose: self.designs.screen(cells[dose], lim, lim.c_tox, lim.c_fut_stage1) for dose in cells}

    def final_verdicts(self, cells: Dict[Dose, np.ndarray], lim: MonitoringLimits) -> Dict[Dose, Verdict]:
        return {dose: self.designs.screen(cells[dose], lim, lim.c_tox, lim.c_fut_stage2) for dose in cells}

    # ---- Pool ----------------------------------------------------------------------

    def run_pool(self, cfg: DesignConfig, scenario: ScenarioSpec, rng: np.random.Generator) -> TrialResult:
        """
        One randomized trial across the whole basket.

        Patients enter in blocks of two, one per dose, with blocks assigned to
        indications in turn. One interim look per dose on pooled counts; the final
        analysis uses pooled counts and pooled quasi-events.
        """
        check_dimensions(cfg, scenario)
        per_dose, interim = cfg.pool_sizes()
        interim = min(interim, per_dose)
        K = cfg.K
        lim = cfg.indications[0].limits
        probs = self.designs.scenarios.cell_probabilities(scenario)[2]
        states = [IndicationState(index=k) for k in range(K)]

        def accrue(dose_idx: int, start: int, stop: int):
            # patient j of a dose belongs to indication j mod K
            dose = DOSES[dose_idx]
            for k in range(K):
                m = _count_in_residue(start, stop, k, K)
                if m:
                    states[k].dose(dose).add(2, rng.multinomial(m, probs[k, dose_idx]))

        def pooled(dose: Dose) -> np.ndarray:
            return sum(s.dose(dose).stage2 for s in states)

        for j in range(2):
            accrue(j, 0, interim)

        if 0 < interim < per_dose:
            verdicts = self.interim_verdicts({dose: pooled(dose) for dose in DOSES}, lim)
            for dose, verdict in verdicts.items():
                if verdict.stop:
                    for s in states:
                        s.dose(dose).status = stopped_status(verdict)
            for j, dose in enumerate(DOSES):
                if not verdicts[dose].stop:
                    accrue(j, interim, per_dose)
        elif interim < per_dose:
            for j in range(2):
                accrue(j, interim, per_dose)

        stopped = {dose: states[0].dose(dose).stopped for dose in DOSES}
        if all(stopped.values()):
            for s in states:
                s.status = IndicationStatus.TERMINATED
                s.reason = StopReason.INTERIM_TERMINATED
            results = [indication_result(s, Selection.NONE, {}, None) for s in states]
            return TrialResult(design=DesignKind.POOL, indications=results)

        acceptable = {}
        final = self.final_verdicts({dose: pooled(dose) for dose in DOSES if not stopped[dose]}, lim)
        for dose in DOSES:
            acceptable[dose] = not stopped[dose] and not final[dose].stop

        post = None
        if all(acceptable.values()):
            utilities = [ind.utility for ind in cfg.indications]
            post = IndicationPosterior(
                q_high=self.conjugate_estimates([(s.high.stage2, utilities[s.index]) for s in states], lim),
                q_low=self.conjugate_estimates([(s.low.stage2, utilities[s.index]) for s in states], lim),
            )
        selection = select_dose(acceptable, post.q_high if post else None, post.q_low if post else None)

        results = []
        for s in states:
            s.status = IndicationStatus.FINISHED
            s.reason = StopReason.SELECTED if selection is not Selection.NONE else StopReason.NO_ACCEPTABLE_DOSE
            for dose in DOSES:
                if not s.dose(dose).stopped:
                    s.dose(dose).status = DoseStatus.COMPLETED
            results.append(indication_result(s, selection, acceptable, post))
        return TrialResult(design=DesignKind.POOL, indications=results)

    # ---- Independent ---------------------------------------------------------------

    def run_independent(self, cfg: DesignConfig, scenario: ScenarioSpec, rng: np.random.Generator) -> TrialResult:
        """Separate two-arm trials; one interim look once the indication has enrolled its interim count."""
        check_dimensions(cfg, scenario)
        probs = self.designs.scenarios.cell_probabilities(scenario)[2]
        results = []
        for k, ind in enumerate(cfg.indications):
            per_dose, interim_enrolled = cfg.independent_sizes(k)
            results.append(self._two_arm_trial(k, ind.limits, ind.utility, probs[k], per_dose, interim_enrolled, rng))
        return TrialResult(design=DesignKind.INDEPENDENT, indications=results)

    def _two_arm_trial(self, k, lim, utility, probs, per_dose, interim_enrolled, rng):
        state = IndicationState(index=k)
        # block randomization: the high dose takes the odd patient of a split block
        looks = {Dose.HIGH: (interim_enrolled + 1) // 2, Dose.LOW: interim_enrolled // 2}
        looks = {dose: min(m, per_dose) for dose, m in looks.items()}
        for j, dose in enumerate(DOSES):
            state.dose(dose).add(2, rng.multinomial(looks[dose], probs[j]))

        if 0 < interim_enrolled and any(looks[dose] < per_dose for dose in DOSES):
            verdicts = self.interim_verdicts({dose: state.dose(dose).stage2 for dose in DOSES}, lim)
            for dose, verdict in verdicts.items():
                if verdict.stop:
                    state.dose(dose).status = stopped_status(verdict)
            if state.high.stopped and state.low.stopped:
                state.status = IndicationStatus.TERMINATED
                state.reason = StopReason.INTERIM_TERMINATED
                return indication_result(state, Selection.NONE, {}, None)

        for j, dose in enumerate(DOSES):
            track = state.dose(dose)
            if not track.stopped and looks[dose] < per_dose:
                track.add(2, rng.multinomial(per_dose - looks[dose], probs[j]))

        final = self.final_verdicts({dose: state.dose(dose).stage2 for dose in DOSES if not state.dose(dose).stopped}, lim)
        acceptable = {dose: not state.dose(dose).stopped and not final[dose].stop for dose in DOSES}
        post: Optional[IndicationPosterior] = None
        if all(acceptable.values()):
            post = IndicationPosterior(
                q_high=self.conjugate_estimates([(state.high.stage2, utility)], lim),
                q_low=self.conjugate_estimates([(state.low.stage2, utility)], lim),
            )
        selection = select_dose(acceptable, post.q_high if post else None, post.q_low if post else None)

        state.status = IndicationStatus.FINISHED
        state.reason = StopReason.SELECTED if selection is not Selection.NONE else StopReason.NO_ACCEPTABLE_DOSE
        for dose in DOSES:
            if not state.dose(dose).stopped:
                state.dose(dose).status = DoseStatus.COMPLETED
        return indication_result(state, selection, acceptable, post)


def _count_in_residue(start: int, stop: int, k: int, K: int) -> int:
    """Number of j in [start, stop) with j mod K == k."""
    if stop <= start:
        return 0
    first = start + ((k - start) % K)
    return 0 if first >= stop else (stop - 1 - first) // K + 1


comparator_service = ComparatorService()
