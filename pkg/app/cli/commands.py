import typer

from app.cli import calibrate_commands, decide_commands, simulate_commands, verify_commands
from app.core.config import get_settings
from app.core.logger import configure_logging


cli = typer.Typer(
    name="romi",
    help="Randomized two-stage basket trial simulation and decision engine",
    no_args_is_help=True,
    add_completion=False,
)


@cli.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level")):
    configure_logging(get_settings(), verbose=verbose)


cli.command("simulate")(simulate_commands.simulate)
cli.command("calibrate")(calibrate_commands.calibrate)
cli.command("decide")(decide_commands.decide)
cli.command("verify")(verify_commands.verify)
cli.command("fixtures")(verify_commands.fixtures)
