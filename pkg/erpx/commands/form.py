"""
`erpx form`: form an ensemble of regression phalanxes on one dataset.

Writes, under --out-dir:
  model.json   the final phalanxes and their fitted base models
  trace.csv    one run-table row (D, d, s, e, h and the ERPX MSE)
  report.txt   the stage counts and selection path in readable form
  run.meta     key=value run metadata, including the ingest transform chain
"""
from ..artifacts import run_metadata, save_model, stage_report, write_meta, write_report, write_trace_rows
from ..formation import FormationConfig, ensemble_assessment, form_erpx
from ..ingest import response_name
from ..regress import AssessmentCache
from ..schemas import TraceRow
from ..utils import derive_seed
from .common import (
    Alpha, Base, ConfigFile, DataPath, ExcludeRows, Groups, Ledger, LogLevel, LogOffset, OutDir, Response, Seed,
    Threads, TopVariance, build_config, console, handle_errors, ingest_options, load_dataset, output_dir, record_runs,
)


@handle_errors
def form(
    config: ConfigFile = None,
    data: DataPath = None,
    response: Response = None,
    base: Base = None,
    alpha: Alpha = None,
    seed: Seed = None,
    groups: Groups = None,
    out_dir: OutDir = None,
    threads: Threads = None,
    ledger: Ledger = None,
    log_level: LogLevel = None,
    exclude_rows: ExcludeRows = None,
    log_offset: LogOffset = None,
    top_variance: TopVariance = None,
):
    """Form an ERPX model and write the model, its trace row and a stage report."""
    cfg = build_config(
        config, data=data, response=response, base=base, alpha=alpha, seed=seed, groups=groups,
        out_dir=out_dir, threads=threads, ledger_url=ledger, log_level=log_level,
        exclude_rows=exclude_rows, log_offset=log_offset, top_variance=top_variance,
    )
    dataset = load_dataset(cfg)
    out = output_dir(cfg)
    meta = run_metadata(cfg.seed, cfg.config_hash())

    # Step 1: formation
    cache = AssessmentCache()
    model = form_erpx(dataset, FormationConfig.from_settings(cfg), cache=cache)

    # Step 2: the reported training metric
    erpx_mse = ensemble_assessment(
        model, dataset, derive_seed(cfg.seed, "assessment"), cfg.cv_repetitions, cache=cache,
    )
    trace = model.trace
    row = TraceRow(
        dataset=dataset.name, base=cfg.base, run=1,
        D=trace.D, d=trace.d, s=trace.s, e=trace.e, h=trace.h, erpx_mse=erpx_mse,
    )

    # Step 3: artifacts
    save_model(model, out / "model.json", {**meta, "response": response_name(cfg.data, ingest_options(cfg).response)})
    write_trace_rows([row], out / "trace.csv", meta)
    write_report(stage_report(trace, erpx_mse), out / "report.txt", meta)
    write_meta(out / "run.meta", {
        **meta, "dataset": dataset.name, "base": cfg.base.value, "groups": cfg.groups,
        "transforms": [step.describe() for step in ingest_options(cfg).chain()],
    })
    record_runs(cfg, [row], [cfg.seed])

    console.print(
        f"[bold]{dataset.name}[/bold]  D={trace.D} d={trace.d} s={trace.s} e={trace.e} h={trace.h}  "
        f"ERPX MSE={erpx_mse:.6g}"
    )

