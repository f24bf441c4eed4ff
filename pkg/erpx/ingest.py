"""
Dataset loading and preprocessing.

CSV files are comma-delimited UTF-8 with a header row; lines starting with
`#` are metadata comments and are skipped. Every cell must be numeric. The
preprocessing steps (case exclusion, log-offset scaling of the response,
top-variance feature filtering, train/test splitting) are pure
Dataset -> Dataset functions, so a chain of them can be recorded in run
metadata and replayed.
"""
import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from .core import Dataset, FeatureKind, infer_kinds
from .exceptions import ContractViolation, DataError
from .log import kv

logger = logging.getLogger(__name__)


class TransformStep(BaseModel):
    """One named preprocessing step with its parameters, e.g. `top_variance(k=5000)`."""
    model_config = ConfigDict(frozen=True)

    name: Literal["drop_rows", "log_offset", "top_variance"]
    params: dict[str, Any] = {}

    def describe(self) -> str:
        args = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}({args})"


class IngestOptions(BaseModel):
    """
    How to turn a CSV file into a Dataset.

    `response` is a column name or a 0-based column position. `kinds`
    overrides the inferred binary/continuous kind of named feature columns.
    `exclude_rows` holds 1-based case numbers dropped right after loading,
    before the `transforms` chain runs.
    """
    model_config = ConfigDict(frozen=True)

    response: Union[str, int] = 0
    kinds: dict[str, FeatureKind] = {}
    exclude_rows: tuple[int, ...] = ()
    transforms: tuple[TransformStep, ...] = ()
    name: Optional[str] = None

    def chain(self) -> tuple[TransformStep, ...]:
        steps = self.transforms
        if self.exclude_rows:
            steps = (TransformStep(name="drop_rows", params={"rows": list(self.exclude_rows)}),) + steps
        return steps


# ==========================================
# CSV I/O
# ==========================================

def _read_numeric_frame(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    try:
        raw = pd.read_csv(path, comment="#", dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path}: no header row") from exc
    except pd.errors.ParserError as exc:
        raise DataError(f"{path}: malformed CSV ({exc})") from exc
    if len(set(raw.columns)) != len(raw.columns):
        raise DataError(f"{path}: duplicate column names")

    frame = pd.DataFrame(index=raw.index)
    for col in raw.columns:
        text = raw[col].str.strip()
        missing = np.flatnonzero((text == "").to_numpy())
        if missing.size:
            raise DataError(f"{path}: missing value at row {missing[0] + 1}, column '{col}'")
        values = pd.to_numeric(text, errors="coerce")
        bad = np.flatnonzero(~np.isfinite(values.to_numpy(dtype=float)))
        if bad.size:
            row = bad[0]
            raise DataError(f"{path}: non-numeric value '{text.iloc[row]}' at row {row + 1}, column '{col}'")
        frame[col] = values.astype(float)
    return frame


def _response_column(frame: pd.DataFrame, response: Union[str, int]) -> str:
    columns = list(frame.columns)
    if isinstance(response, int):
        if not 0 <= response < len(columns):
            raise DataError(f"response column index {response} out of range for {len(columns)} columns")
        return columns[response]
    if response not in columns:
        raise DataError(f"response column '{response}' not found")
    return response


def response_name(path: Union[str, Path], response: Union[str, int] = 0) -> str:
    """Header name of the response column, read without loading the data rows."""
    if not Path(path).is_file():
        raise DataError(f"file not found: {path}")
    header = pd.read_csv(path, comment="#", nrows=0)
    return _response_column(header, response)


def load_csv(path: Union[str, Path], options: IngestOptions = IngestOptions()) -> Dataset:
    """Reads a CSV into a Dataset, then applies the options' row exclusion and transform chain."""
    frame = _read_numeric_frame(path)
    target = _response_column(frame, options.response)
    features = frame.drop(columns=[target])
    if features.shape[1] == 0:
        raise DataError(f"{path}: no feature columns besides the response '{target}'")
    if frame.shape[0] == 0:
        raise DataError(f"{path}: no data rows")

    names = tuple(str(c) for c in features.columns)
    X = features.to_numpy(dtype=float)
    kinds = list(infer_kinds(X))
    for name, kind in options.kinds.items():
        if name not in names:
            raise DataError(f"kind override for unknown column '{name}'")
        kinds[names.index(name)] = FeatureKind(kind)

    data = Dataset(
        y=frame[target].to_numpy(dtype=float), X=X, feature_names=names, feature_kinds=tuple(kinds),
        name=options.name or Path(path).stem,
    )
    data, record = apply_transforms(data, options.chain())
    logger.info(kv("loaded", dataset=data.name, n=data.n, D=data.D, transforms=";".join(record) or "none"))
    return data


def save_csv(data: Dataset, path: Union[str, Path], *, response_name: str = "y", metadata: Optional[str] = None) -> Path:
    """
    Writes the response (first column) and the features with 17 significant digits.

    `metadata` becomes a leading `# ...` comment line, which `load_csv`
    skips.
    """
    if response_name in data.feature_names:
        raise ContractViolation(f"response name '{response_name}' collides with a feature name")
    path = Path(path)
    frame = pd.DataFrame(data.X, columns=list(data.feature_names))
    frame.insert(0, response_name, data.y)
    with path.open("w", encoding="utf-8", newline="") as handle:
        if metadata:
            handle.write(f"# {metadata}\n")
        frame.to_csv(handle, index=False, float_format="%.17g", lineterminator="\n")
    return path


def load_matrix(
    path: Union[str, Path],
    feature_names: Sequence[str],
    response: Optional[str] = None,
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Reads a prediction matrix whose columns are selected and ordered by name.

    Returns (X, y); y is the `response` column when the file has one, else
    None. A file with a header and no rows yields a 0 x D matrix.
    """
    frame = _read_numeric_frame(path)
    missing = [name for name in feature_names if name not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing feature columns: {', '.join(missing)}")
    X = frame[list(feature_names)].to_numpy(dtype=float).reshape(frame.shape[0], len(feature_names))
    y = None
    if response is not None and response in frame.columns:
        y = frame[response].to_numpy(dtype=float)
    return X, y


# ==========================================
# TRANSFORMS
# ==========================================

def drop_rows(data: Dataset, indices: Sequence[int], one_based: bool = True) -> Dataset:
    """Removes the given cases; with `one_based` (default) index 1 is the first row."""
    indices = [int(i) for i in indices]
    if not indices:
        return data
    offset = 1 if one_based else 0
    lo, hi = offset, data.n - 1 + offset
    bad = [i for i in indices if not lo <= i <= hi]
    if bad:
        raise ContractViolation(f"row indices {bad} out of range [{lo}, {hi}]")
    drop = {i - offset for i in indices}
    keep = [r for r in range(data.n) if r not in drop]
    if not keep:
        raise DataError(f"dropping rows {sorted(indices)} leaves dataset '{data.name}' empty")
    return data.take_rows(keep)


def log_offset_transform(y: np.ndarray, offset: float, base: Optional[float] = None) -> np.ndarray:
    """log(y + offset), natural log unless `base` is given."""
    shifted = np.asarray(y, dtype=float) + offset
    if np.any(shifted <= 0):
        raise DataError(f"log transform needs y + offset > 0; smallest shifted value is {shifted.min():.6g}")
    out = np.log(shifted)
    if base is not None:
        if base <= 0 or base == 1:
            raise ContractViolation(f"log base must be positive and not 1, got {base}")
        out = out / np.log(base)
    return out


def top_variance_filter(data: Dataset, k: int) -> Dataset:
    """Keeps the k features with the largest sample variance, in their original column order."""
    if not 1 <= k <= data.D:
        raise ContractViolation(f"k must lie in [1, {data.D}], got {k}")
    variance = data.X.var(axis=0, ddof=1 if data.n > 1 else 0)
    top = np.argsort(-variance, kind="stable")[:k]
    return data.take_columns(sorted(int(j) for j in top))


def train_test_split(data: Dataset, n_train: int, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded random split into n_train training rows and n - n_train test rows, each kept in file order."""
    if not 1 <= n_train < data.n:
        raise ContractViolation(f"n_train must lie in [1, {data.n - 1}], got {n_train}")
    order = np.random.default_rng(seed).permutation(data.n)
    train = np.sort(order[:n_train])
    test = np.sort(order[n_train:])
    return data.take_rows(train), data.take_rows(test)


def apply_transforms(data: Dataset, steps: Sequence[TransformStep]) -> tuple[Dataset, tuple[str, ...]]:
    """Runs a transform chain in order and returns the result plus a description of each step."""
    record = []
    for step in steps:
        params = step.params
        if step.name == "drop_rows":
            data = drop_rows(data, params.get("rows", []), one_based=params.get("one_based", True))
        elif step.name == "log_offset":
            data = data.with_response(log_offset_transform(data.y, float(params["offset"]), params.get("base")))
        else:
            data = top_variance_filter(data, int(params["k"]))
        record.append(step.describe())
    return data, tuple(record)
