from pathlib import Path

import typer
from rich.console import Console
from rich.markup import escape

from riglht.config.manager import ConfigManager
from riglht.core.datagen import gen_sample
from riglht.core.errors import RiglhtError
from riglht.core.io import write_grouped_csv

app = typer.Typer()
console = Console(stderr=True)


@app.callback(invoke_without_command=True)
def emit_data(
    ctx: typer.Context,
    config: Path = typer.Option(None, "--config", "-c", help="JSON run configuration"),
    out_dir: Path = typer.Option(Path("riglht-out"), "--out-dir", "-o", help="Output directory"),
    seed: int = typer.Option(None, "--seed", min=0, help="Master seed (overrides config)"),
    replicate: int = typer.Option(1, "--replicate", min=1, help="Replicate id to generate"),
):
    """Write one simulated replicate as a grouped CSV dataset."""
    if ctx.invoked_subcommand is not None:
        return

    config_manager = ConfigManager(out_dir)

    try:
        run = config_manager.load_run_config(config)
        sim = config_manager.simulation_config(run, seed=seed, threads=1)
        sample = gen_sample(
            sim.p,
            sim.n_sizes,
            sim.covariances,
            sim.distribution,
            sim.means(),
            sim.seed,
            replicate,
        )
    except RiglhtError as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        raise typer.Exit(2) from None

    path = config_manager.ensure_out_dir() / f"replicate_{replicate}.csv"
    write_grouped_csv(sample, path)
    console.print(
        f"[green]✓ Wrote replicate {replicate} (seed {sim.seed}, "
        f"n={list(sim.n_sizes)}, p={sim.p})[/green]"
    )
    typer.echo(str(path))
