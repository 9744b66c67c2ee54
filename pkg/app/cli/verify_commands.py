"""
verify and fixtures: the oracle harness.
"""
from enum import Enum
from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from app.cli.common import console, exit_on_error
from app.core.config import get_settings
from app.services.validation_service import validation_service


class VerifyLevel(str, Enum):
    QUICK = "quick"
    FULL = "full"


def verify(
    level: VerifyLevel = typer.Argument(VerifyLevel.QUICK),
    fixtures: Optional[Path] = typer.Option(None, "--fixtures", help="Fixture directory; defaults to ROMI_FIXTURES_DIR"),
    config: Path = typer.Option(Path("configs/benchmark.json"), "--config", "-c", help="Benchmark run config (full level)"),
    reference: Path = typer.Option(Path("configs/benchmark_reference.json"), "--reference", help="Benchmark reference values"),
    drift_config: Path = typer.Option(Path("configs/drift_check.json"), "--drift-config", help="ROMI-v1 against ROMI-v2 drift run (full level)"),
    reps: Optional[int] = typer.Option(None, "--reps", help="Replications for the benchmark and drift checks"),
    workers: Optional[int] = typer.Option(None, "--workers"),
):
    """Check the production code against golden fixtures; full level adds the sampler, prior, benchmark and drift checks."""
    directory = fixtures or Path(get_settings().ROMI_FIXTURES_DIR)
    with exit_on_error("verify"):
        report = validation_service.verify(
            directory,
            level=level.value,
            benchmark_config=config if level is VerifyLevel.FULL else None,
            benchmark_reference=reference if level is VerifyLevel.FULL else None,
            drift_config=drift_config if level is VerifyLevel.FULL else None,
            n_reps=reps,
            workers=workers,
        )

    table = Table(title=f"verify {level.value} ({report.duration:.1f}s)")
    table.add_column("Check")
    table.add_column("Result")
    table.add_column("Detail")
    for check in report.checks:
        table.add_row(check.name, "[green]pass" if check.passed else "[red]FAIL", check.detail)
    console.print(table)

    if not report.passed:
        console.print(f"[red]{len(report.failed)} checks failed:[/red] {', '.join(c.name for c in report.failed)}")
        raise typer.Exit(code=2)


def fixtures(
    out: Optional[Path] = typer.Option(None, "--out", help="Fixture directory; defaults to ROMI_FIXTURES_DIR"),
):
    """Regenerate the golden fixtures from the independent oracles."""
    directory = out or Path(get_settings().ROMI_FIXTURES_DIR)
    with exit_on_error("fixtures"):
        paths = validation_service.generate_fixtures(directory)
    console.print(f"[green]Wrote[/green] {len(paths)} fixtures to {directory}")
