"""
calibrate: smallest stage-1 size meeting a false-negative bound.
"""
from pathlib import Path
from typing import Optional

import pandas as pd
import typer
from rich.table import Table

from app.cli.common import console, exit_on_error, load_run_config
from app.core.config import get_settings
from app.schemas.monitoring import MonitoringLimits
from app.schemas.run_config import ReportFormat
from app.services.monitoring_service import monitoring_service
from app.services.report_service import report_service
from app.utils.oracles import false_negative_by_simulation


def calibrate(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Run config supplying per-indication limits"),
    resp_floor: Optional[float] = typer.Option(None, "--resp-floor", help="Response floor; overrides the config"),
    delta: float = typer.Option(0.20, "--delta", help="Response margin above the floor to protect"),
    cutoff: float = typer.Option(0.95, "--cutoff", help="Futility cutoff of the stage-1 look"),
    max_fn: float = typer.Option(0.10, "--target", help="Largest acceptable false-negative probability"),
    n_min: int = typer.Option(1, "--n-min"),
    n_max: int = typer.Option(60, "--n-max"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for the Monte Carlo check"),
    reps: int = typer.Option(0, "--reps", help="Monte Carlo draws checking the achieved probability; 0 skips"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the table to this file"),
    format: ReportFormat = typer.Option(ReportFormat.CSV, "--format"),
):
    """Print N, boundary and achieved false-negative probability per indication."""
    settings = get_settings()
    with exit_on_error("calibrate"):
        if config is not None:
            run_cfg = load_run_config(config)
            limits = [ind.limits for ind in (run_cfg.indications or [run_cfg.indication])]
        else:
            limits = [MonitoringLimits()]
        if resp_floor is not None:
            limits = [lim.model_copy(update={"resp_floor": resp_floor}) for lim in limits]

        rows = []
        for k, lim in enumerate(limits):
            result = monitoring_service.calibrate_stage1_n(lim, delta, cutoff, max_fn, (n_min, n_max))
            row = {
                "indication": k + 1,
                "resp_floor": lim.resp_floor,
                "pi_true": result.pi_true,
                "n": result.n,
                "boundary": result.boundary,
                "achieved_fn": result.achieved_fn,
            }
            if reps > 0 and result.boundary is not None:
                check = false_negative_by_simulation(
                    result.n, result.pi_true, result.boundary, reps,
                    seed if seed is not None else settings.ROMI_DEFAULT_SEED,
                )
                row.update(mc_fn=check["estimate"], mc_se=check["se"])
            rows.append(row)

        frame = pd.DataFrame(rows)
        frame["boundary"] = frame["boundary"].astype("Int64")
        table = Table(title=f"Stage-1 calibration (delta {delta}, cutoff {cutoff}, target {max_fn})")
        for column in frame.columns:
            table.add_column(column, justify="right")
        for row in rows:
            table.add_row(*[
                "-" if row.get(c) is None else (f"{row[c]:.6f}" if isinstance(row.get(c), float) else str(row[c]))
                for c in frame.columns
            ])
        console.print(table)

        if out is not None:
            report_service.write_frame(frame, out, format)
            console.print(f"[green]Wrote[/green] {out}")
