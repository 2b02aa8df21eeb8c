import typer

from riglht.commands import contrasts, emit_data, simulate, test
from riglht.utils.logging import set_verbose

app = typer.Typer(
    name="riglht",
    help="Random-integration L2 tests for linear hypotheses on high-dimensional mean vectors",
    no_args_is_help=True,
)


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug output to stderr"),
):
    set_verbose(verbose)


app.add_typer(test.app, name="test", help="Test a linear hypothesis on grouped CSV data")
app.add_typer(simulate.app, name="simulate", help="Run size and power simulations")
app.add_typer(contrasts.app, name="contrasts", help="Test every pairwise group contrast")
app.add_typer(emit_data.app, name="emit-data", help="Write a simulated replicate as CSV")

if __name__ == "__main__":
    app()
