from pathlib import Path

import pandas as pd
import typer
from rich.console import Console
from rich.markup import escape

from riglht.config.manager import ConfigManager, RunConfig
from riglht.core.errors import ConfigError, RiglhtError
from riglht.core.montecarlo import (
    SimulationConfig,
    power_curve,
    records_table,
    run_replicates,
    size_grid,
    size_table,
)

app = typer.Typer()
console = Console(stderr=True)


@app.callback(invoke_without_command=True)
def simulate(
    ctx: typer.Context,
    config: Path = typer.Option(..., "--config", "-c", help="JSON run configuration"),
    out_dir: Path = typer.Option(Path("riglht-out"), "--out-dir", "-o", help="Output directory"),
    seed: int = typer.Option(None, "--seed", min=0, help="Master seed (overrides config)"),
    threads: int = typer.Option(
        None, "--threads", "-j", min=1, help="Worker budget (default: RIGLHT_THREADS or 1)"
    ),
    level: float = typer.Option(None, "--level", help="Nominal level (default 0.05)"),
):
    """Run a replicated size/power experiment and write its artefacts."""
    if ctx.invoked_subcommand is not None:
        return

    config_manager = ConfigManager(out_dir)

    # everything is validated before the first replicate runs
    try:
        run = config_manager.load_run_config(config)
        sim = config_manager.simulation_config(run, seed=seed, threads=threads, level=level)
        grid = _size_grid_configs(config_manager, run, sim)
        if run.power_grid is not None and run.power_grid.p and sim.weights is not None:
            raise ConfigError("power_grid.p needs default weights; explicit weights fix p")
    except RiglhtError as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        raise typer.Exit(2) from None

    console.print(
        f"\n[bold]Simulating {sim.replicates} replicates[/bold] "
        f"[dim](p={sim.p}, n={list(sim.n_sizes)}, seed={sim.seed}, threads={sim.threads})[/dim]"
    )
    report = run_replicates(sim)
    config_manager.write_json(
        "report.json", {"config": _describe(run, sim), "report": report.to_dict()}
    )
    console.print(
        f"[green]✓[/green] rejection rate {report.rejection_rate:.4f} "
        f"(± {report.standard_error:.4f}, {report.degenerate_count} degenerate)"
    )

    if run.records:
        config_manager.write_table("replicates.csv", records_table(report))

    if grid:
        table = size_table(grid)
        for row in table.itertuples(index=False):
            console.print(
                f"  {row.case} {row.model} p={row.p}: size {row.rejection_rate:.4f} "
                f"(± {row.standard_error:.4f})"
            )
        config_manager.write_table("size_table.csv", table)

    if run.power_grid is not None:
        curve = power_curve(sim, run.power_grid.r, run.power_grid.t, run.power_grid.p)
        for row in curve.itertuples(index=False):
            console.print(
                f"  r={row.r} t={row.t} p={row.p}: power {row.empirical_power:.4f} "
                f"(predicted {_fmt(row.predicted_power)})"
            )
        config_manager.write_table("power_curve.csv", curve)

    console.print(f"[dim]Artefacts written to {escape(str(config_manager.out_dir))}[/dim]")


def _size_grid_configs(
    config_manager: ConfigManager, run: RunConfig, sim: SimulationConfig
) -> list[SimulationConfig]:
    if run.size_grid is None:
        return []
    contrast = None
    if run.contrast is not None:
        labels = tuple(str(i + 1) for i in range(len(sim.n_sizes)))
        contrast = config_manager.resolve_contrast(run, labels)
    try:
        configs = size_grid(
            run.size_grid.p,
            run.size_grid.models,
            run.size_grid.cases,
            sim.n_sizes,
            replicates=sim.replicates,
            level=sim.level,
            seed=sim.seed,
            threads=sim.threads,
            contrast=contrast,
            exponent_mode=run.exponent_mode,
        )
        for grid_config in configs:
            grid_config.validate()
    except ConfigError:
        raise
    except RiglhtError as e:
        raise ConfigError(str(e)) from None
    return configs


def _describe(run: RunConfig, sim: SimulationConfig) -> dict:
    """Run parameters for report.json; the thread budget is not recorded."""
    alternative = None
    if sim.alternative is not None:
        alternative = {
            "r": sim.alternative.r,
            "t": sim.alternative.t,
            "target_group": sim.alternative.target_group + 1,
        }
    return {
        "p": sim.p,
        "n_sizes": list(sim.n_sizes),
        "contrast": sim.contrast.g_tilde.tolist(),
        "exponent_mode": sim.contrast.exponent_mode.value,
        "covariance": run.covariance,
        "distribution": sim.model_name,
        "alternative": alternative,
        "weights": "default" if sim.weights is None else sim.weights.to_dict(),
        "replicates": sim.replicates,
        "level": sim.level,
        "seed": sim.seed,
    }


def _fmt(value) -> str:
    return "n/a" if pd.isna(value) else f"{value:.4f}"
