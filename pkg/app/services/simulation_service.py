"""
Replication driver and operating-characteristic aggregation.
"""
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from app.core.config import get_settings
from app.core.exceptions import NoTruthDefined
from app.core.logger import get_logger, log_simulation_progress
from app.core.rng import replication_streams
from app.schemas.design import DesignConfig, Selection, StopReason, TrialResult
from app.schemas.scenario import IndicationOC, OperatingCharacteristics, ScenarioSpec
from app.services.design_service import check_dimensions, design_service
from app.services.scenario_service import scenario_service

logger = get_logger("simulation_service")


def run_replication(cfg: DesignConfig, scenario: ScenarioSpec, master_seed: int, rep: int,
                    chain_dir: Optional[Path] = None) -> TrialResult:
    """One replication on its own (outcome, fit) stream pair."""
    rng, fit_rng = replication_streams(master_seed, rep)
    chain_path = None
    if chain_dir is not None and cfg.kind.is_romi:
        chain_path = Path(chain_dir) / f"{cfg.kind.value}_{scenario.name}_rep{rep:05d}.csv"
    return design_service.run_trial(cfg, scenario, rng, fit_rng=fit_rng, chain_path=chain_path)


def _run_chunk(args) -> List[TrialResult]:
    cfg, scenario, master_seed, reps, chain_dir = args
    return [run_replication(cfg, scenario, master_seed, rep, chain_dir) for rep in reps]


class SimulationService:

    def __init__(self):
        self.settings = get_settings()

    def run_replications(
        self,
        cfg: DesignConfig,
        scenario: ScenarioSpec,
        n_reps: int,
        master_seed: int,
        workers: Optional[int] = None,
        chain_dir: Optional[Path] = None,
        progress: Optional[bool] = None,
    ) -> List[TrialResult]:
        """Trial results in replication order, whatever the number of workers."""
        if n_reps < 1:
            raise ValueError("n_reps must be at least 1")
        check_dimensions(cfg, scenario)
        scenario_service.validate(scenario)
        workers = workers or self.settings.worker_count
        progress = self.settings.ROMI_PROGRESS if progress is None else progress
        label = f"{cfg.kind.label} / {scenario.name}"
        started = time.perf_counter()

        if workers <= 1:
            reps = range(n_reps)
            if progress:
                reps = tqdm(reps, desc=label, leave=False)
            results = [run_replication(cfg, scenario, master_seed, rep, chain_dir) for rep in reps]
        else:
            chunk = max(1, n_reps // (workers * 8))
            chunks = [range(start, min(start + chunk, n_reps)) for start in range(0, n_reps, chunk)]
            payloads = [(cfg, scenario, master_seed, c, chain_dir) for c in chunks]
            results = []
            with ProcessPoolExecutor(max_workers=workers) as executor:
                batches = executor.map(_run_chunk, payloads)
                if progress:
                    batches = tqdm(batches, total=len(payloads), desc=label, leave=False)
                for batch in batches:
                    results.extend(batch)

        log_simulation_progress(logger, cfg.kind.label, scenario.name, n_reps, n_reps, time.perf_counter() - started)
        return results

    def simulate(
        self,
        cfg: DesignConfig,
        scenario: ScenarioSpec,
        n_reps: int,
        master_seed: int,
        workers: Optional[int] = None,
        chain_dir: Optional[Path] = None,
        progress: Optional[bool] = None,
    ) -> OperatingCharacteristics:
        """
        Operating characteristics of a design under a scenario.

        Raises:
            ConfigMismatch: if the design and scenario disagree on the number of indications
            InfeasibleAssociation: if the scenario's phi is infeasible for some marginals
        """
        results = self.run_replications(cfg, scenario, n_reps, master_seed, workers, chain_dir, progress)
        return self.aggregate(results, scenario, cfg.kind.label, master_seed)

    def aggregate(self, results: Sequence[TrialResult], scenario: ScenarioSpec, design: str,
                  master_seed: int) -> OperatingCharacteristics:
        n_reps = len(results)
        indications = []
        for k, truth in enumerate(scenario.indications):
            selections = [r.indications[k].selection for r in results]
            counts = {s: sum(1 for x in selections if x is s) for s in Selection}
            pct_high = 100.0 * counts[Selection.HIGH] / n_reps
            pct_low = 100.0 * counts[Selection.LOW] / n_reps
            se = {s: 100.0 * float(np.sqrt((c / n_reps) * (1 - c / n_reps) / n_reps)) for s, c in counts.items()}
            reasons = [r.indications[k].reason for r in results]
            breakdown = {
                reason.value: 100.0 * sum(1 for x in reasons if x is reason) / n_reps
                for reason in StopReason
            }
            indications.append(IndicationOC(
                index=k,
                pct_high=pct_high,
                pct_low=pct_low,
                pct_none=max(100.0 - pct_high - pct_low, 0.0),
                se_high=se[Selection.HIGH],
                se_low=se[Selection.LOW],
                se_none=se[Selection.NONE],
                avg_n=float(np.mean([r.indications[k].n for r in results])),
                true_obd=truth.true_obd,
                stop_breakdown=breakdown,
            ))

        try:
            csp_value = self.csp(indications)
        except NoTruthDefined:
            csp_value = None

        totals = np.array([r.total_n for r in results], dtype=float)
        return OperatingCharacteristics(
            design=design,
            scenario=scenario.name,
            n_reps=n_reps,
            master_seed=master_seed,
            indications=indications,
            csp=csp_value,
            avg_total_n=float(totals.mean()),
            se_total_n=float(totals.std(ddof=1) / np.sqrt(n_reps)) if n_reps > 1 else 0.0,
        )

    def csp(self, indications: Sequence[IndicationOC]) -> float:
        """
        Correct selection percentage averaged over indications with a true OBD.

        Raises:
            NoTruthDefined: if no indication has a true OBD
        """
        scored = [ind for ind in indications if ind.true_obd is not Selection.NONE]
        if not scored:
            raise NoTruthDefined()
        pct: Dict[Selection, str] = {Selection.HIGH: "pct_high", Selection.LOW: "pct_low"}
        return float(np.mean([getattr(ind, pct[ind.true_obd]) for ind in scored]))


simulation_service = SimulationService()
