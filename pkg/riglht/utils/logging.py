import logging
import os

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

_ROOT = "riglht"
_configured = False


def _configure_root():
    """Attach a stderr RichHandler to the package root logger once."""
    global _configured
    if _configured:
        return

    load_dotenv()
    level = logging.getLevelName(os.environ.get("RIGLHT_LOG_LEVEL", "WARNING").upper())
    if not isinstance(level, int):
        level = logging.WARNING

    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
    )
    handler.setFormatter(logging.Formatter("%(message)s"))

    root = logging.getLogger(_ROOT)
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False
    _configured = True


def get_logger(name: str) -> logging.Logger:
    """Get a logger below the ``riglht`` namespace."""
    _configure_root()
    if not name.startswith(_ROOT):
        name = f"{_ROOT}.{name}"
    return logging.getLogger(name)


def set_verbose(verbose: bool):
    """Switch the package loggers to DEBUG (or back to the configured level)."""
    _configure_root()
    if verbose:
        logging.getLogger(_ROOT).setLevel(logging.DEBUG)
