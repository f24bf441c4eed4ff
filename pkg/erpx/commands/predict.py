"""
`erpx predict`: apply a saved ERPX model to a feature file.

Columns are matched by feature name, rows keep their order. When the file
also carries the model's response column, the test MSE is reported.
"""
from pathlib import Path
from typing import Annotated, Optional

import typer

from ..artifacts import load_model, run_metadata, write_predictions
from ..core import mse
from ..exceptions import ConfigError
from ..formation import predict_erpx
from ..ingest import load_matrix
from .common import ConfigFile, DataPath, LogLevel, OutDir, Response, build_config, console, handle_errors, output_dir


@handle_errors
def predict(
    config: ConfigFile = None,
    model: Annotated[Optional[Path], typer.Option("--model", help="model.json written by `erpx form`")] = None,
    data: DataPath = None,
    response: Response = None,
    out_dir: OutDir = None,
    log_level: LogLevel = None,
):
    """Predict every row of --data with the ensemble in --model."""
    cfg = build_config(config, model=model, data=data, response=response, out_dir=out_dir, log_level=log_level)
    if cfg.model is None or cfg.data is None:
        raise ConfigError("--model and --data are required")
    erpx_model, model_meta = load_model(cfg.model)
    response_column = cfg.response or model_meta.get("response")
    X, y = load_matrix(cfg.data, erpx_model.feature_names, response=response_column)

    values = predict_erpx(erpx_model, X)
    out = output_dir(cfg)
    meta = run_metadata(erpx_model.seed, model_meta.get("config_hash", ""), rows=len(values))
    write_predictions(values, out / "predictions.csv", meta)

    console.print(f"predicted {len(values)} row(s) with h={erpx_model.h} phalanx model(s)")
    if y is not None and len(y):
        console.print(f"test MSE={mse(y, values):.6g}")
