"""
Logging setup.

Modules log through `logging.getLogger(__name__)`; the CLI calls
`configure_logging` once so records render through rich on stderr.
Warnings that a report may need to pick up are written as `key=value` pairs
after an `event=` tag.
"""
import logging

from rich.console import Console
from rich.logging import RichHandler

_configured = False


def configure_logging(level: str = "INFO") -> None:
    global _configured
    root = logging.getLogger("erpx")
    root.setLevel(level.upper())
    if not _configured:
        handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(message)s"))
        root.addHandler(handler)
        root.propagate = False
        _configured = True


def kv(event: str, **fields: object) -> str:
    """Renders a structured log message: `event=<event> k1=v1 k2=v2`."""
    parts = [f"event={event}"] + [f"{k}={v}" for k, v in fields.items()]
    return " ".join(parts)
