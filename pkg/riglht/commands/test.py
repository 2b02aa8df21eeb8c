import json
from pathlib import Path

import typer
from rich.console import Console
from rich.markup import escape

from riglht.config.manager import ConfigManager
from riglht.core.contrast import build_contrast
from riglht.core.errors import ConfigError, RiglhtError
from riglht.core.io import read_grouped_csv
from riglht.core.statistic import run_test
from riglht.utils.logging import get_logger

app = typer.Typer()
console = Console(stderr=True)
logger = get_logger(__name__)

DEFAULT_LEVEL = 0.05


@app.callback(invoke_without_command=True)
def test_hypothesis(
    ctx: typer.Context,
    data: Path = typer.Option(..., "--data", "-d", help="Grouped CSV dataset"),
    config: Path = typer.Option(None, "--config", "-c", help="JSON run configuration"),
    level: float = typer.Option(None, "--level", help="Significance level (default 0.05)"),
):
    """Test a general linear hypothesis on the group mean vectors."""
    if ctx.invoked_subcommand is not None:
        return

    config_manager = ConfigManager()

    try:
        run = config_manager.load_run_config(config)
        level = level if level is not None else run.level or DEFAULT_LEVEL
        if not 0.0 < level < 1.0:
            raise ConfigError(f"level must lie in (0, 1), got {level}")

        sample = read_grouped_csv(data)
        contrast_input = config_manager.resolve_contrast(run, sample.labels)
        weights = config_manager.resolve_weights(run, sample.p)
        contrast = build_contrast(contrast_input, sample.n_sizes)
        result = run_test(sample, contrast, weights)
    except RiglhtError as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        raise typer.Exit(2) from None

    if result.degenerate_variance:
        console.print("[yellow]⚠ Variance estimate is not positive; no p-value reported[/yellow]")

    payload = result.to_dict()
    payload["level"] = level
    payload["rejected"] = result.p_value is not None and result.p_value <= level
    logger.debug("test on %s: statistic=%r", data, result.t_n)
    typer.echo(json.dumps(payload, indent=2))
