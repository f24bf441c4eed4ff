"""
`erpx benchmark`: ERPX against its bare base model over repeated runs.

Three protocols share the command:
  - plain: every run re-forms ERPX on the same data with a fresh seed;
  - simulation (--design): --data is the reference, run r uses replicate r;
  - train/test (--n-train): every run splits the data with its own seed and
    also reports test-set MSE for both methods.
"""
import logging
from typing import Annotated, Optional

import numpy as np
import typer

from ..artifacts import quantile_table, run_metadata, write_frame, write_report, write_trace_rows
from ..config import Design, NoiseLevel, RunConfig
from ..core import Dataset, mse
from ..formation import FormationConfig, base_assessment, ensemble_assessment, form_erpx, predict_erpx
from ..ingest import train_test_split
from ..log import kv
from ..regress import AssessmentCache, predict
from ..schemas import TraceRow
from ..simulate import SimulationConfig, generate_replicates
from ..utils import derive_seed
from .common import (
    Alpha, Base, ConfigFile, DataPath, ExcludeRows, Groups, Ledger, LogLevel, LogOffset, OutDir, Reps, Response,
    Seed, Threads, TopVariance, build_config, console, handle_errors, load_dataset, output_dir, record_runs,
)

logger = logging.getLogger(__name__)


def run_once(cfg: RunConfig, data: Dataset, run: int, run_seed: int) -> TraceRow:
    """One ERPX-vs-base comparison; test columns are filled under the train/test protocol."""
    test: Optional[Dataset] = None
    if cfg.n_train is not None:
        data, test = train_test_split(data, cfg.n_train, derive_seed(run_seed, "split"))

    cache = AssessmentCache()
    spec = cfg.regressor_spec(cfg.base)
    model = form_erpx(data, FormationConfig.from_settings(cfg, seed=run_seed), cache=cache)
    erpx_mse = ensemble_assessment(model, data, derive_seed(run_seed, "assessment"), cfg.cv_repetitions, cache=cache)
    base_mse, base_model = base_assessment(
        data, spec, derive_seed(run_seed, "assessment"), cfg.cv_repetitions, cache=cache, threads=cfg.threads,
    )
    erpx_test = base_test = None
    if test is not None:
        erpx_test = mse(test.y, predict_erpx(model, test.X))
        base_test = mse(test.y, predict(base_model, test.X))

    trace = model.trace
    logger.info(kv("benchmark_run", run=run, h=trace.h, erpx=f"{erpx_mse:.6g}", base=f"{base_mse:.6g}"))
    return TraceRow(
        dataset=data.name, base=cfg.base, run=run,
        D=trace.D, d=trace.d, s=trace.s, e=trace.e, h=trace.h,
        erpx_mse=erpx_mse, base_mse=base_mse, erpx_test_mse=erpx_test, base_test_mse=base_test,
    )


def summary_lines(rows: list[TraceRow]) -> list[str]:
    erpx = np.array([r.erpx_mse for r in rows])
    base = np.array([r.base_mse for r in rows])
    lines = [
        f"{'runs':<28}{len(rows):>8}",
        f"{'mean screened groups (s)':<28}{np.mean([r.s for r in rows]):>12.2f}",
        f"{'mean final phalanxes (h)':<28}{np.mean([r.h for r in rows]):>12.2f}",
        f"{'mean ERPX MSE':<28}{erpx.mean():>16.6g}",
        f"{'mean base MSE':<28}{base.mean():>16.6g}",
        f"{'ERPX wins':<28}{float(np.mean(erpx < base)):>12.2f}",
    ]
    if rows and rows[0].erpx_test_mse is not None:
        lines.append(f"{'mean ERPX test MSE':<28}{np.mean([r.erpx_test_mse for r in rows]):>16.6g}")
        lines.append(f"{'mean base test MSE':<28}{np.mean([r.base_test_mse for r in rows]):>16.6g}")
    return lines


@handle_errors
def benchmark(
    config: ConfigFile = None,
    data: DataPath = None,
    response: Response = None,
    base: Base = None,
    alpha: Alpha = None,
    seed: Seed = None,
    groups: Groups = None,
    reps: Reps = None,
    out_dir: OutDir = None,
    threads: Threads = None,
    ledger: Ledger = None,
    log_level: LogLevel = None,
    exclude_rows: ExcludeRows = None,
    log_offset: LogOffset = None,
    top_variance: TopVariance = None,
    design: Annotated[Optional[Design], typer.Option("--design", help="simulate from --data as reference")] = None,
    noise: Annotated[Optional[NoiseLevel], typer.Option("--noise")] = None,
    n_train: Annotated[Optional[int], typer.Option("--n-train", help="train/test protocol: training rows")] = None,
):
    """Run ERPX and the bare base model --reps times each and compare them."""
    cfg = build_config(
        config, data=data, response=response, base=base, alpha=alpha, seed=seed, groups=groups, reps=reps,
        out_dir=out_dir, threads=threads, ledger_url=ledger, log_level=log_level, exclude_rows=exclude_rows,
        log_offset=log_offset, top_variance=top_variance, design=design, noise=noise, n_train=n_train,
    )
    dataset = load_dataset(cfg)
    out = output_dir(cfg)
    meta = run_metadata(cfg.seed, cfg.config_hash())

    if cfg.design is not None:
        replicates = generate_replicates(
            SimulationConfig(
                reference=dataset, noise_level=cfg.noise, n_signals=cfg.n_signals, response_kind=cfg.design,
                n_replicates=cfg.reps, seed=derive_seed(cfg.seed, "simulate"),
            ),
            threads=cfg.threads,
        )
        sources = [replica for replica, _ in replicates]
    else:
        sources = [dataset] * cfg.reps

    seeds = [derive_seed(cfg.seed, "run", r) for r in range(cfg.reps)]
    rows = [run_once(cfg, source, r + 1, run_seed) for r, (source, run_seed) in enumerate(zip(sources, seeds))]

    samples = {("erpx", "train"): [r.erpx_mse for r in rows], ("base", "train"): [r.base_mse for r in rows]}
    if cfg.n_train is not None:
        samples[("erpx", "test")] = [r.erpx_test_mse for r in rows]
        samples[("base", "test")] = [r.base_test_mse for r in rows]

    write_trace_rows(rows, out / "benchmark.csv", meta)
    write_frame(quantile_table(samples), out / "quantiles.csv", meta)
    lines = summary_lines(rows)
    write_report(lines, out / "summary.txt", meta)
    record_runs(cfg, rows, seeds)

    for line in lines:
        console.print(line, highlight=False)
