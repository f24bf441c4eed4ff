"""
Artifact writers and readers.

Every artifact carries the same metadata (tool version, root seed, config
hash): as a `# key=value,...` first line in CSV files, as a header block in
text reports, and under "meta" in model JSON. Floats are written with 17
significant digits so a table row read back is the exact value computed.
"""
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import orjson
import pandas as pd

from . import __version__
from .exceptions import DataError
from .formation import ErpxModel, Grouping
from .regress import FittedModel, ForestModel, LassoModel, RegressionTree
from .schemas import BaseKind, BaseRegressorSpec, FormationTrace, TraceRow

FLOAT_FORMAT = "%.17g"
QUANTILE_COLUMNS = ("min", "q1", "median", "q3", "max")


def run_metadata(seed: int, config_hash: str, **extra: Any) -> dict[str, Any]:
    return {"tool_version": __version__, "seed": seed, "config_hash": config_hash, **extra}


def metadata_line(meta: Mapping[str, Any]) -> str:
    return ",".join(f"{k}={v}" for k, v in meta.items())


def write_frame(frame: pd.DataFrame, path: Union[str, Path], meta: Mapping[str, Any]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"# {metadata_line(meta)}\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_frame(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


# ==========================================
# TABLES
# ==========================================

def write_trace_rows(rows: Sequence[TraceRow], path: Union[str, Path], meta: Mapping[str, Any]) -> Path:
    """The run table: one row per run with the stage counts and the MSE columns."""
    columns = list(TraceRow.model_fields)
    frame = pd.DataFrame([row.model_dump(mode="json") for row in rows], columns=columns)
    return write_frame(frame, path, meta)


def quantile_table(samples: Mapping[tuple[str, str], Sequence[float]]) -> pd.DataFrame:
    """min/q1/median/q3/max per (method, metric), the text stand-in for a boxplot."""
    records = []
    for (method, metric), values in samples.items():
        values = np.asarray([v for v in values if v is not None], dtype=float)
        if values.size == 0:
            continue
        stats = np.quantile(values, [0.0, 0.25, 0.5, 0.75, 1.0])
        records.append({"method": method, "metric": metric, **dict(zip(QUANTILE_COLUMNS, stats))})
    return pd.DataFrame(records, columns=["method", "metric", *QUANTILE_COLUMNS])


def write_predictions(values: np.ndarray, path: Union[str, Path], meta: Mapping[str, Any]) -> Path:
    return write_frame(pd.DataFrame({"prediction": np.asarray(values, dtype=float)}), path, meta)


def write_report(lines: Sequence[str], path: Union[str, Path], meta: Mapping[str, Any]) -> Path:
    path = Path(path)
    header = [f"{k}: {v}" for k, v in meta.items()]
    path.write_text("\n".join(header + [""] + list(lines)) + "\n", encoding="utf-8")
    return path


def write_meta(path: Union[str, Path], meta: Mapping[str, Any]) -> Path:
    """Plain `key=value` lines; sequences are joined with `;`."""
    path = Path(path)
    lines = []
    for key, value in meta.items():
        if isinstance(value, (list, tuple)):
            value = ";".join(str(v) for v in value)
        lines.append(f"{key}={value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def stage_report(trace: FormationTrace, erpx_mse: Optional[float] = None) -> list[str]:
    lines = [
        f"{'variables (D)':<24}{trace.D:>8}",
        f"{'initial groups (d)':<24}{trace.d:>8}",
        f"{'screened groups (s)':<24}{trace.s:>8}",
        f"{'candidates (e)':<24}{trace.e:>8}",
        f"{'final phalanxes (h)':<24}{trace.h:>8}",
    ]
    if trace.p_alpha is not None:
        lines.append(f"{'p_alpha':<24}{trace.p_alpha:>16.6g}")
        lines.append(f"{'q_upper':<24}{trace.q_upper:>16.6g}")
    lines.append(f"{'training MSE (path)':<24}{trace.ensemble_mse:>16.6g}")
    if erpx_mse is not None:
        lines.append(f"{'ERPX MSE':<24}{erpx_mse:>16.6g}")
    lines.append("")
    lines.append("selection path: " + " ".join(
        f"{label}={value:.6g}" for label, value in zip(trace.selection_path, trace.path_mse)
    ))
    return lines


# ==========================================
# MODEL JSON
# ==========================================

def _encode_model(model: FittedModel) -> dict[str, Any]:
    if isinstance(model, LassoModel):
        return {
            "kind": BaseKind.LASSO.value, "feature_subset": list(model.feature_subset),
            "intercept": model.intercept, "coef": model.coef, "lam": model.lam,
        }
    return {
        "kind": BaseKind.FOREST.value, "feature_subset": list(model.feature_subset),
        "trees": [
            {"feature": t.feature, "threshold": t.threshold, "left": t.left, "right": t.right, "value": t.value}
            for t in model.trees
        ],
    }


def _decode_model(payload: Mapping[str, Any]) -> FittedModel:
    subset = tuple(int(i) for i in payload["feature_subset"])
    if payload["kind"] == BaseKind.LASSO.value:
        return LassoModel(subset, float(payload["intercept"]), np.asarray(payload["coef"], dtype=float), float(payload["lam"]))
    trees = tuple(
        RegressionTree(
            np.asarray(t["feature"], dtype=np.intp), np.asarray(t["threshold"], dtype=float),
            np.asarray(t["left"], dtype=np.intp), np.asarray(t["right"], dtype=np.intp),
            np.asarray(t["value"], dtype=float),
        )
        for t in payload["trees"]
    )
    return ForestModel(subset, trees, None)


def save_model(model: ErpxModel, path: Union[str, Path], meta: Mapping[str, Any]) -> Path:
    """Writes the ensemble as JSON; forests lose their in-bag records."""
    payload = {
        "meta": dict(meta),
        "feature_names": list(model.feature_names),
        "seed": model.seed,
        "spec": model.spec.model_dump(mode="json"),
        "final_phalanxes": model.final_phalanxes.model_dump(mode="json"),
        "trace": model.trace.model_dump(mode="json"),
        "fitted": [_encode_model(m) for m in model.fitted],
    }
    path = Path(path)
    path.write_bytes(orjson.dumps(payload, option=orjson.OPT_SERIALIZE_NUMPY))
    return path


def load_model(path: Union[str, Path]) -> tuple[ErpxModel, dict[str, Any]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    try:
        payload = orjson.loads(path.read_bytes())
        model = ErpxModel(
            final_phalanxes=Grouping.model_validate(payload["final_phalanxes"]),
            fitted=tuple(_decode_model(m) for m in payload["fitted"]),
            spec=BaseRegressorSpec.model_validate(payload["spec"]),
            trace=FormationTrace.model_validate(payload["trace"]),
            feature_names=tuple(payload["feature_names"]),
            seed=int(payload["seed"]),
        )
    except (orjson.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: not a valid erpx model file ({exc})") from exc
    return model, dict(payload.get("meta", {}))
