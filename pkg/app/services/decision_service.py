"""
One-shot evaluation of the screening rules and the final selection on observed counts.
"""
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from app.core.exceptions import ConfigMismatch, DomainError, SchemaError
from app.core.logger import get_logger
from app.schemas.decision import (
    DecisionReport,
    DecisionStage,
    IndicationDecision,
    ObservedIndication,
    ObservedTrial,
    RuleCheck,
)
from app.schemas.design import DesignConfig, DesignKind, Dose, DoseStatus, DoseTrack, IndicationState, IndicationStatus, Selection
from app.schemas.model import IndicationPosterior
from app.schemas.monitoring import MonitoringLimits
from app.services.comparator_service import ComparatorService, comparator_service
from app.services.design_service import DesignService, Verdict, design_service, select_dose
from app.services.model_service import ModelService, model_service
from app.services.scenario_service import load_structured

logger = get_logger("decision_service")

DOSES = (Dose.HIGH, Dose.LOW)
STOPPED = {"toxicity": DoseStatus.STOPPED_TOXICITY, "futility": DoseStatus.STOPPED_FUTILITY}


def _track(observed) -> DoseTrack:
    return DoseTrack(
        status=STOPPED.get(observed.stopped, DoseStatus.ENROLLING),
        stage1=np.asarray(observed.stage1, dtype=np.int64),
        stage2=np.asarray(observed.stage2, dtype=np.int64),
    )


def _state(index: int, observed: ObservedIndication) -> IndicationState:
    return IndicationState(
        index=index,
        status=IndicationStatus.TERMINATED if observed.dropped else IndicationStatus.ACTIVE,
        high=_track(observed.high),
        low=_track(observed.low),
    )


def _rules(dose: Dose, verdict: Verdict, c_tox: float, c_fut: float) -> List[RuleCheck]:
    return [
        RuleCheck(dose=dose.value, rule="toxicity", probability=verdict.tox_prob, cutoff=c_tox, fires=verdict.tox_prob > c_tox),
        RuleCheck(dose=dose.value, rule="futility", probability=verdict.fut_prob, cutoff=c_fut, fires=verdict.fut_prob > c_fut),
    ]


def _dose_actions(verdicts: Dict[Dose, Verdict], stopped_before: Dict[Dose, bool]) -> str:
    parts = []
    for dose in DOSES:
        if stopped_before[dose]:
            parts.append(f"{dose.value}: stopped earlier")
        elif verdicts[dose].stop:
            parts.append(f"{dose.value}: stop ({verdicts[dose].rule})")
        else:
            parts.append(f"{dose.value}: continue")
    return ", ".join(parts)


def _selection_action(selection: Selection) -> str:
    return f"select {selection.value}" if selection is not Selection.NONE else "no acceptable dose"


class DecisionService:

    def __init__(
        self,
        designs: DesignService = design_service,
        comparators: ComparatorService = comparator_service,
        models: ModelService = model_service,
    ):
        self.designs = designs
        self.comparators = comparators
        self.models = models

    def load_observed(self, path: Union[str, Path]) -> ObservedTrial:
        """
        Raises:
            SchemaError: with the indication row and field of the first violation
        """
        path = Path(path)
        if not path.exists():
            raise SchemaError(f"counts file not found: {path}", field="path")
        raw = load_structured(path)
        try:
            return ObservedTrial(**raw) if isinstance(raw, dict) else ObservedTrial(indications=raw)
        except ValidationError as e:
            first = e.errors()[0]
            loc = list(first["loc"])
            row = loc[1] if len(loc) > 1 and loc[0] == "indications" and isinstance(loc[1], int) else None
            field = ".".join(str(p) for p in (loc[2:] if row is not None else loc)) or "indications"
            where = f"row {row}, " if row is not None else ""
            raise SchemaError(f"{path}: {where}field '{field}': {first['msg']}", row=row, field=field) from e

    def decide(self, cfg: DesignConfig, observed: ObservedTrial) -> DecisionReport:
        """
        Apply the looks of one stage to observed counts; deterministic given cfg and counts.

        Raises:
            ConfigMismatch: if the counts and the design disagree on the number of indications
            DomainError: for a stage-1 look on a comparator design
        """
        if len(observed.indications) != cfg.K:
            raise ConfigMismatch(
                f"counts list {len(observed.indications)} indications but the design has {cfg.K}",
                key="indications",
            )
        states = [_state(k, ind) for k, ind in enumerate(observed.indications)]
        if cfg.kind.is_romi:
            decisions = self._decide_romi(cfg, states, observed.stage)
        elif observed.stage is DecisionStage.STAGE1:
            raise DomainError(f"the {cfg.kind.label} design has no stage-1 look", context={"design": cfg.kind.value})
        elif cfg.kind is DesignKind.POOL:
            decisions = self._decide_pool(cfg, states, observed.stage)
        else:
            decisions = [self._decide_two_arm(cfg, s, observed.stage) for s in states]
        logger.debug(f"decide {cfg.kind.value} at {observed.stage.value}: {[d.action for d in decisions]}")
        return DecisionReport(design=cfg.kind, stage=observed.stage, indications=decisions)

    # ---- ROMI ----------------------------------------------------------------------

    def _decide_romi(self, cfg: DesignConfig, states: List[IndicationState], stage: DecisionStage) -> List[IndicationDecision]:
        decisions: Dict[int, IndicationDecision] = {}
        acceptable: Dict[int, Dict[Dose, bool]] = {}
        rules: Dict[int, List[RuleCheck]] = {}

        for state, ind in zip(states, cfg.indications):
            lim = ind.limits
            if state.status is IndicationStatus.TERMINATED:
                decisions[state.index] = IndicationDecision(index=state.index, action="dropped earlier")
                continue

            if stage is DecisionStage.STAGE1:
                verdict = self.designs.stage1_decision(state, lim)
                action = f"drop: {verdict.rule}" if verdict.stop else "continue"
                decisions[state.index] = IndicationDecision(
                    index=state.index, action=action, rules=_rules(Dose.HIGH, verdict, lim.c_tox, lim.c_fut_stage1),
                )

            elif stage is DecisionStage.INTERIM:
                before = {dose: state.dose(dose).stopped for dose in DOSES}
                verdicts = self.designs.stage2_interim(state, lim)
                checks = [r for dose, v in verdicts.items() for r in _rules(dose, v, lim.c_tox, lim.c_fut_stage1)]
                if state.status is IndicationStatus.TERMINATED:
                    action = "terminate: both doses stopped"
                else:
                    action = _dose_actions(verdicts, before)
                decisions[state.index] = IndicationDecision(index=state.index, action=action, rules=checks)

            else:
                state.status = IndicationStatus.FINISHED
                verdicts = self.designs.final_acceptability(state, lim)
                acceptable[state.index] = {dose: not v.stop for dose, v in verdicts.items()}
                rules[state.index] = [
                    r for dose, v in verdicts.items() if v.rule is not None or not v.stop
                    for r in _rules(dose, v, lim.c_tox, lim.c_fut_stage2)
                ]

        if stage is DecisionStage.FINAL:
            posterior = None
            if any(all(ok.values()) for ok in acceptable.values()):
                data = self.designs.quasi_data(states, [ind.utility for ind in cfg.indications])
                posterior = self.models.fit(cfg.kind.model, data, cfg.hyper, cfg.mcmc)
            for index, ok in acceptable.items():
                post = posterior.indications.get(index) if posterior is not None else None
                selection = select_dose(ok, post.q_high if post else None, post.q_low if post else None)
                decisions[index] = IndicationDecision(
                    index=index,
                    action=_selection_action(selection),
                    rules=rules[index],
                    acceptable={dose.value: v for dose, v in ok.items()},
                    q_high=post.q_high if post else None,
                    q_low=post.q_low if post else None,
                    selection=selection,
                )
        return [decisions[k] for k in sorted(decisions)]

    # ---- comparators ---------------------------------------------------------------

    def _look(self, cells: Dict[Dose, np.ndarray], stopped_before: Dict[Dose, bool], lim: MonitoringLimits,
              stage: DecisionStage, utilities_cells) -> IndicationDecision:
        """Interim or final look on (possibly pooled) stage-2 counts with conjugate estimates."""
        open_cells = {dose: c for dose, c in cells.items() if not stopped_before[dose]}
        c_fut = lim.c_fut_stage1 if stage is DecisionStage.INTERIM else lim.c_fut_stage2
        if stage is DecisionStage.INTERIM:
            verdicts = self.comparators.interim_verdicts(open_cells, lim)
        else:
            verdicts = self.comparators.final_verdicts(open_cells, lim)
        checks = [r for dose, v in verdicts.items() for r in _rules(dose, v, lim.c_tox, c_fut)]

        if stage is DecisionStage.INTERIM:
            if all(stopped_before[d] or verdicts[d].stop for d in DOSES):
                action = "terminate: both doses stopped"
            else:
                action = _dose_actions(verdicts, stopped_before)
            return IndicationDecision(index=-1, action=action, rules=checks)

        acceptable = {dose: not stopped_before[dose] and not verdicts[dose].stop for dose in DOSES}
        post: Optional[IndicationPosterior] = None
        if all(acceptable.values()):
            post = IndicationPosterior(
                q_high=self.comparators.conjugate_estimates([(c[Dose.HIGH], u) for c, u in utilities_cells], lim),
                q_low=self.comparators.conjugate_estimates([(c[Dose.LOW], u) for c, u in utilities_cells], lim),
            )
        selection = select_dose(acceptable, post.q_high if post else None, post.q_low if post else None)
        return IndicationDecision(
            index=-1,
            action=_selection_action(selection),
            rules=checks,
            acceptable={dose.value: v for dose, v in acceptable.items()},
            q_high=post.q_high if post else None,
            q_low=post.q_low if post else None,
            selection=selection,
        )

    def _decide_pool(self, cfg: DesignConfig, states: List[IndicationState], stage: DecisionStage) -> List[IndicationDecision]:
        pooled = {dose: sum(s.dose(dose).stage2 for s in states) for dose in DOSES}
        stopped_before = {dose: any(s.dose(dose).stopped for s in states) for dose in DOSES}
        per_indication = [
            ({dose: s.dose(dose).stage2 for dose in DOSES}, cfg.indications[s.index].utility) for s in states
        ]
        shared = self._look(pooled, stopped_before, cfg.indications[0].limits, stage, per_indication)
        return [shared.model_copy(update={"index": s.index}) for s in states]

    def _decide_two_arm(self, cfg: DesignConfig, state: IndicationState, stage: DecisionStage) -> IndicationDecision:
        if state.status is IndicationStatus.TERMINATED:
            return IndicationDecision(index=state.index, action="dropped earlier")
        ind = cfg.indications[state.index]
        cells = {dose: state.dose(dose).stage2 for dose in DOSES}
        stopped_before = {dose: state.dose(dose).stopped for dose in DOSES}
        decision = self._look(cells, stopped_before, ind.limits, stage, [(cells, ind.utility)])
        return decision.model_copy(update={"index": state.index})


decision_service = DecisionService()
