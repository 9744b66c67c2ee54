"""
simulate: operating characteristics for every (design, scenario) pair of a run config.
"""
from pathlib import Path
from typing import List, Optional

import typer
from rich.table import Table

from app.cli.common import console, exit_on_error, load_run_config
from app.core.config import get_settings
from app.core.exceptions import ConfigError
from app.core.logger import get_logger
from app.schemas.run_config import ReportFormat
from app.schemas.scenario import OperatingCharacteristics
from app.services.report_service import report_service
from app.services.scenario_service import scenario_service
from app.services.simulation_service import simulation_service

logger = get_logger("simulate_commands")


def _oc_table(scenario: str, rows: List[OperatingCharacteristics]) -> Table:
    table = Table(title=f"Scenario {scenario}")
    table.add_column("Design")
    for k in range(len(rows[0].indications)):
        table.add_column(f"I{k + 1} H", justify="right")
        table.add_column(f"I{k + 1} L", justify="right")
    table.add_column("CSP", justify="right")
    table.add_column("N", justify="right")
    for oc in rows:
        cells = [oc.design]
        for ind in oc.indications:
            cells += [f"{ind.pct_high:.1f}", f"{ind.pct_low:.1f}"]
        cells += ["NA" if oc.csp is None else f"{oc.csp:.1f}", f"{oc.avg_total_n:.0f}"]
        table.add_row(*cells)
    return table


def simulate(
    config: Path = typer.Option(..., "--config", "-c", help="Run config (JSON or YAML)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Master seed; overrides the config"),
    reps: Optional[int] = typer.Option(None, "--reps", help="Replications per design and scenario"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory"),
    format: Optional[ReportFormat] = typer.Option(None, "--format", help="csv, or markdown for csv plus tables"),
    chain_dump: bool = typer.Option(False, "--chain-dump", help="Write the draws of every final fit"),
    workers: Optional[int] = typer.Option(None, "--workers", help="Worker processes; defaults to ROMI_WORKERS"),
):
    """Simulate the designs of a run config over its scenarios and write the OC tables."""
    settings = get_settings()
    with exit_on_error("simulate"):
        cfg = load_run_config(config, {
            "seed": seed,
            "n_reps": reps,
            "out": out,
            "format": format,
            "chain_dump": chain_dump or None,
        })
        master_seed = cfg.seed if cfg.seed is not None else settings.ROMI_DEFAULT_SEED
        out_dir = cfg.out or Path(settings.ROMI_OUTPUT_DIR)

        scenarios = scenario_service.load_scenarios(cfg.scenario_file)
        if cfg.scenarios:
            known = {s.name for s in scenarios}
            unknown = [name for name in cfg.scenarios if name not in known]
            if unknown:
                raise ConfigError(f"unknown scenarios {unknown} in {cfg.scenario_file}", key="scenarios")
            scenarios = [s for s in scenarios if s.name in cfg.scenarios]

        chain_dir = out_dir / "chains" if cfg.chain_dump else None
        logger.info(
            f"Simulating {len(cfg.designs)} designs x {len(scenarios)} scenarios, "
            f"{cfg.n_reps} replications, seed {master_seed}"
        )

        results = []
        for scenario in scenarios:
            rows = []
            for kind in cfg.designs:
                rows.append(simulation_service.simulate(
                    cfg.design_config(kind, scenario.K),
                    scenario,
                    cfg.n_reps,
                    master_seed,
                    workers=workers,
                    chain_dir=chain_dir,
                ))
            console.print(_oc_table(scenario.name, rows))
            results.extend(rows)

        outputs = [report_service.write_csv(results, out_dir / "operating_characteristics.csv")]
        if cfg.format is ReportFormat.MARKDOWN:
            outputs.append(report_service.write_markdown(results, out_dir / "operating_characteristics.md"))
        run_config = cfg.model_dump(mode="json")
        run_config["seed"] = master_seed
        manifest_path = report_service.write_manifest(
            report_service.manifest(run_config, master_seed, outputs), out_dir / "manifest.json",
        )
        console.print(f"[green]Wrote[/green] {', '.join(str(p) for p in outputs)} and {manifest_path}")
