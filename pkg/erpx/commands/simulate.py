"""
`erpx simulate`: write synthetic replicates emulating a reference dataset,
each as a CSV plus a JSON recipe sidecar with the signal columns,
coefficients and scale used for its response.
"""
from typing import Annotated, Optional

import orjson
import typer

from ..artifacts import metadata_line, run_metadata
from ..config import Design, NoiseLevel
from ..ingest import save_csv
from ..simulate import SimulationConfig, generate_replicates
from .common import (
    ConfigFile, DataPath, ExcludeRows, LogLevel, OutDir, Response, Seed, Threads,
    build_config, console, handle_errors, load_dataset, output_dir,
)


@handle_errors
def simulate(
    config: ConfigFile = None,
    data: DataPath = None,
    response: Response = None,
    seed: Seed = None,
    out_dir: OutDir = None,
    threads: Threads = None,
    log_level: LogLevel = None,
    exclude_rows: ExcludeRows = None,
    design: Annotated[Optional[Design], typer.Option("--design")] = None,
    noise: Annotated[Optional[NoiseLevel], typer.Option("--noise")] = None,
    replicates: Annotated[Optional[int], typer.Option("--replicates")] = None,
    n_signals: Annotated[Optional[int], typer.Option("--n-signals")] = None,
):
    """Generate replicate datasets from the MVN emulation of --data."""
    cfg = build_config(
        config, data=data, response=response, seed=seed, out_dir=out_dir, threads=threads, log_level=log_level,
        exclude_rows=exclude_rows, design=design, noise=noise, replicates=replicates, n_signals=n_signals,
    )
    reference = load_dataset(cfg)
    out = output_dir(cfg)
    kind = cfg.design or Design.LINEAR
    sim = SimulationConfig(
        reference=reference, noise_level=cfg.noise, n_signals=cfg.n_signals, response_kind=kind,
        n_replicates=cfg.replicates, seed=cfg.seed,
    )
    meta = run_metadata(cfg.seed, cfg.config_hash(), design=kind.value, noise=cfg.noise.value)

    for r, (dataset, recipe) in enumerate(generate_replicates(sim, threads=cfg.threads)):
        stem = f"replicate_{r + 1:03d}"
        save_csv(dataset, out / f"{stem}.csv", metadata=metadata_line({**meta, "replicate": r + 1}))
        (out / f"{stem}.recipe.json").write_bytes(
            orjson.dumps({"meta": {**meta, "replicate": r + 1}, "recipe": recipe.model_dump(mode="json")},
                         option=orjson.OPT_INDENT_2)
        )
    console.print(f"wrote {cfg.replicates} {kind.value}/{cfg.noise.value} replicate(s) to {out}")
