"""
Shared CLI plumbing: consoles, error-to-exit-code mapping and config loading.
"""
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Optional

import typer
from rich.console import Console
from rich.panel import Panel
from rich.pretty import Pretty

from app.core.exceptions import ConfigError, RomiError
from app.core.logger import get_logger, log_error_with_context
from app.schemas.run_config import RunConfig, parse_run_config
from app.services.scenario_service import load_structured

logger = get_logger("cli")

console = Console()
err_console = Console(stderr=True)


@contextmanager
def exit_on_error(command: str):
    """Print RomiError payloads and exit with the error's status code."""
    try:
        yield
    except RomiError as e:
        logger.warning(f"{command} failed: {e.message}", extra={"extra_data": {"command": command, **e.context}})
        err_console.print(Panel(Pretty(e.to_payload()), title=f"[red]{command} failed", border_style="red"))
        raise typer.Exit(code=e.exit_code)
    except (OSError, ValueError) as e:
        log_error_with_context(logger, e, {"command": command})
        err_console.print(f"[red]{command} failed:[/red] {e}")
        raise typer.Exit(code=2)


def load_run_config(path: Path, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    raw = load_structured(path) if path.exists() else None
    if raw is None:
        raise ConfigError(f"config file not found or empty: {path}", key="config")
    return parse_run_config(raw, base_dir=path.parent, overrides=overrides)
