"""
ROMI trial flow: stage-1 screening of the high dose, randomized stage 2 with an
interim look, and a final hierarchical-model analysis across indications.
"""
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional

import numpy as np

from app.core.exceptions import ConfigMismatch, DegenerateData
from app.core.logger import get_logger
from app.core.rng import draw_seed
from app.schemas.design import (
    DesignConfig,
    DesignKind,
    Dose,
    DoseStatus,
    IndicationResult,
    IndicationState,
    IndicationStatus,
    Selection,
    StopReason,
    TrialResult,
    dose_counts,
    n_resp,
    n_tox,
)
from app.schemas.model import IndicationPosterior, IndicationQuasiData, PosteriorSummary, QuasiData
from app.schemas.monitoring import MonitoringLimits
from app.schemas.outcome import UtilityTable
from app.schemas.scenario import ScenarioSpec
from app.services.model_service import ModelService, model_service
from app.services.monitoring_service import MonitoringService, monitoring_service
from app.services.outcome_service import OutcomeService, outcome_service
from app.services.scenario_service import ScenarioService, scenario_service

logger = get_logger("design_service")

# Q estimates closer than this count as tied; ties go to the low dose
TIE_TOLERANCE = 1e-12


class Verdict(NamedTuple):
    stop: bool
    rule: Optional[str]  # "toxicity" or "futility"
    tox_prob: float
    fut_prob: float


def select_dose(acceptable: Dict[Dose, bool], q_high: Optional[float], q_low: Optional[float]) -> Selection:
    """Argmax of Q among acceptable doses; the low dose wins exact ties."""
    ok_high, ok_low = acceptable.get(Dose.HIGH, False), acceptable.get(Dose.LOW, False)
    if ok_high and ok_low:
        if q_high is None or q_low is None:
            raise DegenerateData("two acceptable doses need posterior estimates to choose between them")
        return Selection.HIGH if q_high - q_low > TIE_TOLERANCE else Selection.LOW
    if ok_high:
        return Selection.HIGH
    if ok_low:
        return Selection.LOW
    return Selection.NONE


class DesignService:
    """Runs ROMI-v1, ROMI-v2 and ROMI-v1-NC trials."""

    def __init__(
        self,
        outcomes: OutcomeService = outcome_service,
        monitoring: MonitoringService = monitoring_service,
        models: ModelService = model_service,
        scenarios: ScenarioService = scenario_service,
    ):
        self.outcomes = outcomes
        self.monitoring = monitoring
        self.models = models
        self.scenarios = scenarios

    # ---- looks -------------------------------------------------------------------

    def screen(self, cells: np.ndarray, lim: MonitoringLimits, c_tox: float, c_fut: float,
               tox_cells: Optional[np.ndarray] = None) -> Verdict:
        """Toxicity then futility on one dose; toxicity may use a wider data set."""
        tox_cells = cells if tox_cells is None else tox_cells
        n_t, x_t = int(tox_cells.sum()), n_tox(tox_cells)
        n_r, x_r = int(cells.sum()), n_resp(cells)
        tox_prob = self.monitoring.toxicity_probability(n_t, x_t, lim)
        fut_prob = self.monitoring.futility_probability(n_r, x_r, lim)
        if self.monitoring.toxicity_stop(n_t, x_t, lim, c_tox):
            return Verdict(True, "toxicity", tox_prob, fut_prob)
        if self.monitoring.futility_stop(n_r, x_r, lim, c_fut):
            return Verdict(True, "futility", tox_prob, fut_prob)
        return Verdict(False, None, tox_prob, fut_prob)

    def stage1_decision(self, state: IndicationState, lim: MonitoringLimits) -> Verdict:
        """Drop the indication if the stage-1 high-dose data fire either rule."""
        verdict = self.screen(state.high.stage1, lim, lim.c_tox, lim.c_fut_stage1)
        if verdict.stop:
            state.status = IndicationStatus.DROPPED_STAGE1
            state.reason = StopReason.STAGE1_TOXICITY if verdict.rule == "toxicity" else StopReason.STAGE1_FUTILITY
            state.high.status = stopped_status(verdict)
        return verdict

    def stage2_interim(self, state: IndicationState, lim: MonitoringLimits) -> Dict[Dose, Verdict]:
        """
        Interim look on each enrolling dose.

        Toxicity pools stage-1 and stage-2 data for the high dose and uses stage-2 data
        for the low dose; futility uses stage-2 data only. Stage-1 cutoffs apply.
        """
        verdicts = {}
        for dose in (Dose.HIGH, Dose.LOW):
            track = state.dose(dose)
            if track.stopped:
                continue
            verdict = self.screen(track.stage2, lim, lim.c_tox, lim.c_fut_stage1, tox_cells=track.pooled)
            if verdict.stop:
                track.status = stopped_status(verdict)
            verdicts[dose] = verdict
        if state.high.stopped and state.low.stopped:
            state.status = IndicationStatus.TERMINATED
            state.reason = StopReason.INTERIM_TERMINATED
        return verdicts

    def final_acceptability(self, state: IndicationState, lim: MonitoringLimits) -> Dict[Dose, Verdict]:
        """Final toxicity rule (pooled for the high dose) and stage-2 futility rule with the final cutoff."""
        verdicts = {}
        for dose in (Dose.HIGH, Dose.LOW):
            track = state.dose(dose)
            if track.stopped:
                verdicts[dose] = Verdict(True, None, float("nan"), float("nan"))
                continue
            verdicts[dose] = self.screen(track.stage2, lim, lim.c_tox, lim.c_fut_stage2, tox_cells=track.pooled)
            track.status = DoseStatus.COMPLETED
        return verdicts

    def final_selection(self, state: IndicationState, posterior: Optional[IndicationPosterior],
                        lim: MonitoringLimits) -> Selection:
        """OBD among doses passing both final rules; a dose stopped earlier is never acceptable."""
        verdicts = self.final_acceptability(state, lim)
        acceptable = {dose: not v.stop for dose, v in verdicts.items()}
        q_high = posterior.q_high if posterior is not None else None
        q_low = posterior.q_low if posterior is not None else None
        return select_dose(acceptable, q_high, q_low)

    # ---- data for the final fit ----------------------------------------------------

    def quasi_data(self, states: List[IndicationState], utilities: List[UtilityTable]) -> QuasiData:
        items = []
        for state in states:
            u = utilities[state.index]
            items.append(IndicationQuasiData(
                index=state.index,
                z_H2=self.outcomes.quasi_events_from_cells(u, state.high.stage2),
                n_H2=int(state.high.stage2.sum()),
                z_L2=self.outcomes.quasi_events_from_cells(u, state.low.stage2),
                n_L2=int(state.low.stage2.sum()),
                z_H1=self.outcomes.quasi_events_from_cells(u, state.high.stage1),
                n_H1=int(state.high.stage1.sum()),
                active=state.status is IndicationStatus.FINISHED,
            ))
        return QuasiData(indications=items)

    # ---- full trial ----------------------------------------------------------------

    def run_trial(
        self,
        cfg: DesignConfig,
        scenario: ScenarioSpec,
        rng: np.random.Generator,
        fit_rng: Optional[np.random.Generator] = None,
        chain_path: Optional[Path] = None,
    ) -> TrialResult:
        """
        Simulate one trial of any design kind.

        Raises:
            ConfigMismatch: if the design and scenario disagree on the number of indications
        """
        from app.services.comparator_service import comparator_service

        if cfg.kind is DesignKind.POOL:
            return comparator_service.run_pool(cfg, scenario, rng)
        if cfg.kind is DesignKind.INDEPENDENT:
            return comparator_service.run_independent(cfg, scenario, rng)
        return self.run_romi(cfg, scenario, rng, fit_rng, chain_path)

    def run_romi(
        self,
        cfg: DesignConfig,
        scenario: ScenarioSpec,
        rng: np.random.Generator,
        fit_rng: Optional[np.random.Generator] = None,
        chain_path: Optional[Path] = None,
    ) -> TrialResult:
        """
        Simulate one ROMI trial.

        Args:
            cfg: design configuration (a ROMI kind)
            scenario: true outcome probabilities
            rng: stream for patient outcomes
            fit_rng: stream for the final-fit seed (defaults to rng)
            chain_path: write the final fit's draws here

        Raises:
            ConfigMismatch: if the design and scenario disagree on the number of indications
        """
        if not cfg.kind.is_romi:
            raise ConfigMismatch(f"{cfg.kind.value} is not a ROMI design", key="kind")
        check_dimensions(cfg, scenario)
        fit_rng = rng if fit_rng is None else fit_rng
        probs = self.scenarios.cell_probabilities(scenario)
        states = [IndicationState(index=k) for k in range(cfg.K)]

        # stage 1: high dose only
        for state, ind in zip(states, cfg.indications):
            n1 = ind.n_stage1
            if n1 == 0:
                continue
            p_high = probs[1][state.index, 0]
            if cfg.stage1_interim and n1 >= 2:
                first = n1 // 2
                state.high.add(1, rng.multinomial(first, p_high))
                if self.stage1_decision(state, ind.limits).stop:
                    continue
                state.high.add(1, rng.multinomial(n1 - first, p_high))
            else:
                state.high.add(1, rng.multinomial(n1, p_high))
            self.stage1_decision(state, ind.limits)

        # stage 2: 1:1 block randomization, interim once both doses reach n_interim
        for state, ind in zip(states, cfg.indications):
            if state.status is not IndicationStatus.ACTIVE:
                continue
            p_stage2 = probs[2][state.index]
            look = ind.n_interim if 0 < ind.n_interim < ind.n_stage2 else ind.n_stage2
            for j, dose in enumerate((Dose.HIGH, Dose.LOW)):
                state.dose(dose).add(2, rng.multinomial(look, p_stage2[j]))
            if look < ind.n_stage2:
                self.stage2_interim(state, ind.limits)
                if state.status is IndicationStatus.TERMINATED:
                    continue
                for j, dose in enumerate((Dose.HIGH, Dose.LOW)):
                    track = state.dose(dose)
                    if not track.stopped:
                        track.add(2, rng.multinomial(ind.n_stage2 - look, p_stage2[j]))
            state.status = IndicationStatus.FINISHED

        # final analysis
        acceptable: Dict[int, Dict[Dose, bool]] = {}
        for state, ind in zip(states, cfg.indications):
            if state.status is IndicationStatus.FINISHED:
                verdicts = self.final_acceptability(state, ind.limits)
                acceptable[state.index] = {dose: not v.stop for dose, v in verdicts.items()}

        posterior: Optional[PosteriorSummary] = None
        if any(all(ok.values()) for ok in acceptable.values()):
            data = self.quasi_data(states, [ind.utility for ind in cfg.indications])
            mcmc = cfg.mcmc.model_copy(update={"seed": draw_seed(fit_rng)})
            posterior = self.models.fit(cfg.kind.model, data, cfg.hyper, mcmc, chain_path=chain_path)

        results = []
        for state, ind in zip(states, cfg.indications):
            ok = acceptable.get(state.index, {})
            post = posterior.indications.get(state.index) if posterior is not None else None
            if state.status is IndicationStatus.FINISHED:
                selection = self.final_selection(state, post, ind.limits)
                state.reason = StopReason.SELECTED if selection is not Selection.NONE else StopReason.NO_ACCEPTABLE_DOSE
            else:
                selection = Selection.NONE
            results.append(indication_result(state, selection, ok, post))

        return TrialResult(design=cfg.kind, indications=results)


def stopped_status(verdict: Verdict) -> DoseStatus:
    return DoseStatus.STOPPED_TOXICITY if verdict.rule == "toxicity" else DoseStatus.STOPPED_FUTILITY


def check_dimensions(cfg: DesignConfig, scenario: ScenarioSpec):
    if cfg.K != scenario.K:
        raise ConfigMismatch(
            f"design has {cfg.K} indications but scenario '{scenario.name}' has {scenario.K}",
            key="indications",
            context={"design_K": cfg.K, "scenario_K": scenario.K},
        )


def indication_result(state: IndicationState, selection: Selection, acceptable: Dict[Dose, bool],
                       post: Optional[IndicationPosterior]) -> IndicationResult:
    return IndicationResult(
        index=state.index,
        selection=selection,
        reason=state.reason,
        status=state.status,
        high=dose_counts(state.high),
        low=dose_counts(state.low),
        q_high=post.q_high if post else None,
        q_low=post.q_low if post else None,
        acceptable={dose.value: ok for dose, ok in acceptable.items()},
    )


design_service = DesignService()
