import json
from itertools import combinations
from pathlib import Path

import typer
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from riglht.config.manager import ConfigManager
from riglht.core.contrast import ContrastInput, build_contrast, pairwise_contrast
from riglht.core.errors import RiglhtError
from riglht.core.io import read_grouped_csv
from riglht.core.statistic import run_test

app = typer.Typer()
console = Console(stderr=True)


@app.callback(invoke_without_command=True)
def pairwise_contrasts(
    ctx: typer.Context,
    data: Path = typer.Option(..., "--data", "-d", help="Grouped CSV dataset"),
    config: Path = typer.Option(
        None, "--config", "-c", help="JSON run configuration (weights, exponent_mode)"
    ),
    table: bool = typer.Option(False, "--table", help="Also show a table on stderr"),
):
    """Test mu_a = mu_b for every unordered pair of groups."""
    if ctx.invoked_subcommand is not None:
        return

    config_manager = ConfigManager()

    try:
        run = config_manager.load_run_config(config)
        sample = read_grouped_csv(data)
        weights = config_manager.resolve_weights(run, sample.p)
        index = {label: i for i, label in enumerate(sample.labels)}

        rows = []
        for first, second in combinations(sorted(sample.labels), 2):
            contrast_input = ContrastInput(
                pairwise_contrast(sample.k, index[first], index[second]), run.exponent_mode
            )
            result = run_test(sample, build_contrast(contrast_input, sample.n_sizes), weights)
            rows.append(
                {
                    "first": first,
                    "second": second,
                    "statistic": result.t_n,
                    "sigma_hat_sq": result.sigma_hat_sq,
                    "z": result.z,
                    "p_value": result.p_value,
                    "degenerate_variance": result.degenerate_variance,
                }
            )
    except RiglhtError as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        raise typer.Exit(2) from None

    if table:
        _show_table(rows)
    typer.echo(json.dumps({"exponent_mode": run.exponent_mode.value, "pairs": rows}, indent=2))


def _show_table(rows: list[dict]):
    table = Table(title="Pairwise contrast tests")
    table.add_column("Contrast", style="cyan")
    table.add_column("Statistic", justify="right")
    table.add_column("p-value", justify="right", style="green")

    for row in rows:
        p_value = "n/a" if row["p_value"] is None else f"{row['p_value']:.4g}"
        table.add_row(
            escape(f"{row['first']} vs {row['second']}"), f"{row['statistic']:.4g}", p_value
        )

    console.print(table)
