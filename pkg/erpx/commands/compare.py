"""
`erpx compare`: the two base regressors side by side on the same data,
Lasso by repeated K-fold CV-MSE and Random Forest by OOB-MSE, over --reps
runs.
"""
import numpy as np
import pandas as pd

from ..artifacts import quantile_table, run_metadata, write_frame, write_report
from ..formation import base_assessment
from ..regress import AssessmentCache
from ..schemas import BaseKind
from ..utils import derive_seed
from .common import (
    ConfigFile, DataPath, ExcludeRows, LogLevel, LogOffset, OutDir, Reps, Response, Seed, Threads, TopVariance,
    build_config, console, handle_errors, load_dataset, output_dir,
)


@handle_errors
def compare(
    config: ConfigFile = None,
    data: DataPath = None,
    response: Response = None,
    seed: Seed = None,
    reps: Reps = None,
    out_dir: OutDir = None,
    threads: Threads = None,
    log_level: LogLevel = None,
    exclude_rows: ExcludeRows = None,
    log_offset: LogOffset = None,
    top_variance: TopVariance = None,
):
    """Compare the Lasso and Random Forest base models on --data."""
    cfg = build_config(
        config, data=data, response=response, seed=seed, reps=reps, out_dir=out_dir, threads=threads,
        log_level=log_level, exclude_rows=exclude_rows, log_offset=log_offset, top_variance=top_variance,
    )
    dataset = load_dataset(cfg)
    out = output_dir(cfg)
    meta = run_metadata(cfg.seed, cfg.config_hash())
    cache = AssessmentCache()

    records = []
    for r in range(cfg.reps):
        run_seed = derive_seed(cfg.seed, "run", r)
        row = {"run": r + 1}
        for kind in BaseKind:
            value, _ = base_assessment(
                dataset, cfg.regressor_spec(kind), run_seed, cfg.cv_repetitions, cache=cache, threads=cfg.threads,
            )
            row[f"{kind.value}_mse"] = value
        records.append(row)

    frame = pd.DataFrame(records, columns=["run", "lasso_mse", "forest_mse"])
    write_frame(frame, out / "compare.csv", meta)
    write_frame(
        quantile_table({(kind.value, "train"): frame[f"{kind.value}_mse"].tolist() for kind in BaseKind}),
        out / "quantiles.csv", meta,
    )
    lines = [
        f"{'runs':<20}{cfg.reps:>8}",
        f"{'mean Lasso CV-MSE':<20}{np.mean(frame['lasso_mse']):>16.6g}",
        f"{'mean forest OOB-MSE':<20}{np.mean(frame['forest_mse']):>16.6g}",
    ]
    write_report(lines, out / "compare.txt", meta)
    for line in lines:
        console.print(line, highlight=False)
