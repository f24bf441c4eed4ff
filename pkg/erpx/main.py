"""
Main CLI Entry Point.
This file builds the Typer application and wires the subcommand modules
(form, benchmark, simulate, predict, compare) into one `erpx` command.

HOW TO RUN LOCALLY:
python -m erpx form --data octane.csv --base lasso --out-dir out/
"""
import typer

from . import __version__, commands

app = typer.Typer(
    name="erpx",
    help="Ensembles of regression phalanxes: formation, benchmarks and synthetic data.",
    no_args_is_help=True,
    add_completion=False,
)


def _version(value: bool) -> None:
    if value:
        typer.echo(__version__)
        raise typer.Exit()


@app.callback()
def root(
    version: bool = typer.Option(False, "--version", callback=_version, is_eager=True, help="Show the version and exit."),
):
    """Ensembles of regression phalanxes."""


# ==========================================
# COMMAND INTEGRATION
# ==========================================

app.command("form")(commands.form)
app.command("benchmark")(commands.benchmark)
app.command("simulate")(commands.simulate)
app.command("predict")(commands.predict)
app.command("compare")(commands.compare)
