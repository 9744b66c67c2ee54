"""
decide: evaluate the looks of one trial stage on observed counts.
"""
from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from app.cli.common import console, exit_on_error, load_run_config
from app.schemas.decision import DecisionStage
from app.schemas.design import DesignConfig, DesignKind, IndicationDesign
from app.schemas.model import McmcConfig
from app.schemas.run_config import ReportFormat
from app.services.decision_service import decision_service
from app.services.report_service import report_service


def decide(
    counts: Path = typer.Argument(..., help="Counts file (JSON or YAML)"),
    design: DesignKind = typer.Option(DesignKind.ROMI_V1, "--design", "-d"),
    stage: Optional[DecisionStage] = typer.Option(None, "--stage", help="Overrides the stage named in the counts file"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Run config supplying limits, utilities and model settings"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed of the final-stage fit"),
    reps: Optional[int] = typer.Option(None, "--reps", help="Iterations of the final-stage fit, burn-in included"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the decision report to this file"),
    format: ReportFormat = typer.Option(ReportFormat.MARKDOWN, "--format"),
):
    """Print rule probabilities, verdicts and, at the final stage, Q estimates and the OBD."""
    with exit_on_error("decide"):
        observed = decision_service.load_observed(counts)
        if stage is not None:
            observed = observed.model_copy(update={"stage": stage})
        K = len(observed.indications)

        if config is not None:
            cfg = load_run_config(config).design_config(design, K)
        else:
            cfg = DesignConfig(kind=design, indications=[IndicationDesign()] * K, mcmc=McmcConfig(diagnostics=False))
        mcmc_updates = {}
        if seed is not None:
            mcmc_updates["seed"] = seed
        if reps is not None:
            mcmc_updates["n_iter"] = reps
            mcmc_updates["n_burn"] = min(cfg.mcmc.n_burn, reps // 3)
        if mcmc_updates:
            cfg = cfg.model_copy(update={"mcmc": McmcConfig(**{**cfg.mcmc.model_dump(), **mcmc_updates})})

        report = decision_service.decide(cfg, observed)

        table = Table(title=f"{design.label} decision at {observed.stage.value}")
        for column in ("Indication", "Action", "Rule", "Probability", "Cutoff", "Fires", "Q H", "Q L"):
            table.add_column(column)
        for ind in report.indications:
            q_high = "-" if ind.q_high is None else f"{ind.q_high:.4f}"
            q_low = "-" if ind.q_low is None else f"{ind.q_low:.4f}"
            if not ind.rules:
                table.add_row(f"I{ind.index + 1}", ind.action, "-", "-", "-", "-", q_high, q_low)
            for j, r in enumerate(ind.rules):
                table.add_row(
                    f"I{ind.index + 1}" if j == 0 else "",
                    ind.action if j == 0 else "",
                    f"{r.dose} {r.rule}",
                    f"{r.probability:.4f}",
                    f"{r.cutoff}",
                    "yes" if r.fires else "no",
                    q_high if j == 0 else "",
                    q_low if j == 0 else "",
                )
        console.print(table)

        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            if format is ReportFormat.CSV:
                report_service.decision_frame(report).to_csv(out, index=False)
            else:
                out.write_text(report_service.render_decision_markdown(report), encoding="utf-8")
            console.print(f"[green]Wrote[/green] {out}")
