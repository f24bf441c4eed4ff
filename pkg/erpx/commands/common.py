"""
Shared plumbing for the subcommands: typed CLI options, config building,
dataset loading, output directories and error-to-exit-code translation.
"""
import functools
import logging
from collections.abc import Callable
from pathlib import Path
from typing import Annotated, Optional, TypeVar

import typer
from rich.console import Console

from ..config import RunConfig, load_run_config
from ..core import Dataset
from ..database import append_runs, get_engine
from ..exceptions import ConfigError, ErpxError
from ..ingest import IngestOptions, TransformStep, load_csv
from ..log import configure_logging, kv
from ..models import FormationRun
from ..schemas import BaseKind, TraceRow

logger = logging.getLogger(__name__)

console = Console()
err_console = Console(stderr=True)

F = TypeVar("F", bound=Callable)

# ==========================================
# COMMON OPTIONS
# ==========================================
# Every flag defaults to None so that an unset flag never masks the config file.

ConfigFile = Annotated[Optional[Path], typer.Option("--config", help="dotenv file of key=value lines (ERPX_ prefix optional)")]
DataPath = Annotated[Optional[Path], typer.Option("--data", help="CSV with a header row")]
Response = Annotated[Optional[str], typer.Option("--response", help="response column (default: first column)")]
Base = Annotated[Optional[BaseKind], typer.Option("--base", case_sensitive=False)]
Alpha = Annotated[Optional[float], typer.Option("--alpha", help="screening level, in (0, 1)")]
Seed = Annotated[Optional[int], typer.Option("--seed")]
Groups = Annotated[Optional[str], typer.Option("--groups", help="none | name | cluster:<d>")]
Reps = Annotated[Optional[int], typer.Option("--reps", help="number of runs")]
OutDir = Annotated[Optional[Path], typer.Option("--out-dir")]
Threads = Annotated[Optional[int], typer.Option("--threads", help="worker threads (default: logical cores)")]
Ledger = Annotated[Optional[str], typer.Option("--ledger", help="SQLAlchemy URL of the run ledger")]
LogLevel = Annotated[Optional[str], typer.Option("--log-level")]
ExcludeRows = Annotated[Optional[str], typer.Option("--exclude-rows", help="1-based case numbers, e.g. 25,26,36-39")]
LogOffset = Annotated[Optional[float], typer.Option("--log-offset", help="replace y by log(y + offset)")]
TopVariance = Annotated[Optional[int], typer.Option("--top-variance", help="keep the k highest-variance features")]


def parse_rows(spec: Optional[str]) -> Optional[list[int]]:
    """'25,26,36-39' -> [25, 26, 36, 37, 38, 39]."""
    if spec is None:
        return None
    rows: list[int] = []
    for part in filter(None, (p.strip() for p in spec.split(","))):
        try:
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-", 1))
                rows.extend(range(lo, hi + 1))
            else:
                rows.append(int(part))
        except ValueError as exc:
            raise ConfigError(f"cannot parse row list '{spec}'") from exc
    return rows


def build_config(config_file: Optional[Path], **flags) -> RunConfig:
    flags["exclude_rows"] = parse_rows(flags.pop("exclude_rows", None))
    cfg = load_run_config(config_file, **flags)
    configure_logging(cfg.log_level)
    return cfg


def ingest_options(cfg: RunConfig) -> IngestOptions:
    steps = []
    if cfg.log_offset is not None:
        steps.append(TransformStep(name="log_offset", params={"offset": cfg.log_offset}))
    if cfg.top_variance is not None:
        steps.append(TransformStep(name="top_variance", params={"k": cfg.top_variance}))
    return IngestOptions(
        response=cfg.response if cfg.response is not None else 0,
        exclude_rows=tuple(cfg.exclude_rows),
        transforms=tuple(steps),
    )


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.data is None:
        raise ConfigError("--data is required")
    return load_csv(cfg.data, ingest_options(cfg))


def output_dir(cfg: RunConfig) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir


def record_runs(cfg: RunConfig, rows: list[TraceRow], seeds: list[int]) -> None:
    """Appends the rows to the run ledger when one is configured."""
    if not cfg.ledger_url:
        return
    engine = get_engine(cfg.ledger_url)
    written = append_runs(
        engine, [FormationRun.from_trace(row, seed=seed, config_hash=cfg.config_hash()) for row, seed in zip(rows, seeds)]
    )
    logger.info(kv("ledger_append", rows=written, url=cfg.ledger_url))


def handle_errors(fn: F) -> F:
    """Turns an ErpxError into a red message on stderr and the error's exit code."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ErpxError as exc:
            err_console.print(f"[bold red]error:[/bold red] {exc.detail}", highlight=False)
            raise typer.Exit(code=exc.exit_code)
    return wrapper
