"""
Pytest Configuration and Global Fixtures.
This file acts as the 'Control Center' for all tests.
KEY COMPONENTS:
- Synthetic Data: Small seeded datasets (linear signal, correlated pairs, binary features, octane-like).
- Regressor Specs: Lasso and forest specs sized so a full formation runs in seconds.
- Scripted Assessor: A mock base regressor whose prediction vectors are fixed in advance,
  used by the brute-force formation oracles.
- Ledger Session: An in-memory SQLite run ledger with fresh tables per test.
- CLI Runner: A Typer CliRunner plus a helper that writes a dataset to CSV.
"""
import numpy as np
import pytest
from sqlalchemy.pool import StaticPool
from sqlmodel import Session, SQLModel, create_engine
from typer.testing import CliRunner

from erpx.core import Dataset, PredictionVector, Provenance, mse
from erpx.ingest import save_csv
from erpx.regress import Assessment
from erpx.schemas import BaseKind, BaseRegressorSpec, ForestParams, LassoParams


# ==========================================
# DATASETS
# ==========================================

def make_linear(n=40, D=8, signals=(0, 1), seed=0, noise=0.1) -> Dataset:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, D))
    y = X[:, list(signals)].sum(axis=1) + noise * rng.normal(size=n)
    return Dataset(y=y, X=X, name="linear")


@pytest.fixture
def linear_data():
    """40 rows, 8 independent features; y depends on x1 and x2."""
    return make_linear()


@pytest.fixture
def one_feature_data():
    rng = np.random.default_rng(3)
    x = rng.normal(size=30)
    return Dataset(y=2.0 * x + 0.1 * rng.normal(size=30), X=x.reshape(-1, 1), name="one")


@pytest.fixture
def paired_data():
    """Four features forming two perfectly correlated pairs: (x1, x2) and (x3, x4)."""
    rng = np.random.default_rng(7)
    a = rng.normal(size=20)
    b = rng.normal(size=20)
    X = np.column_stack([a, 2 * a + 1, b, -3 * b])
    return Dataset(y=a + b, X=X, name="pairs")


@pytest.fixture
def binary_data():
    rng = np.random.default_rng(11)
    X = (rng.random(size=(30, 6)) < 0.4).astype(float)
    return Dataset(y=X[:, 0] + X[:, 3] + 0.1 * rng.normal(size=30), X=X, name="binary")


@pytest.fixture
def octane_like():
    """Smooth 'spectra': 33 rows x 30 wavelengths driven by three latent factors."""
    rng = np.random.default_rng(5)
    grid = np.linspace(0.0, 1.0, 30)
    bands = np.vstack([np.exp(-((grid - c) ** 2) / 0.02) for c in (0.2, 0.5, 0.8)])
    scores = rng.normal(size=(33, 3))
    X = scores @ bands + 0.01 * rng.normal(size=(33, 30))
    y = 88.0 + scores @ np.array([1.0, -0.5, 0.3]) + 0.05 * rng.normal(size=33)
    names = tuple(f"nm{1100 + 10 * j}" for j in range(30))
    return Dataset(y=y, X=X, feature_names=names, name="octane_like")


# ==========================================
# REGRESSOR SPECS
# ==========================================

@pytest.fixture
def lasso_spec():
    return BaseRegressorSpec(kind=BaseKind.LASSO, lasso=LassoParams(n_folds=3, path_length=20, lambda_ratio=1e-3))


@pytest.fixture
def forest_spec():
    return BaseRegressorSpec(
        kind=BaseKind.FOREST, forest=ForestParams(n_trees_formation=30, n_trees_final=60, min_node_size=3),
    )


# ==========================================
# SCRIPTED ASSESSOR
# ==========================================

class ScriptedAssessor:
    """
    Mock base regressor.

    Every group's prediction vector is given up front; the prediction for a
    union of groups comes from `union_rule(subset, parts)`, where `parts`
    holds the vectors of the scripted pieces inside `subset`, in key order.
    Calls are counted per subset.
    """

    def __init__(self, pieces: dict[tuple[int, ...], np.ndarray], union_rule):
        self.pieces = {tuple(sorted(k)): np.asarray(v, dtype=float) for k, v in pieces.items()}
        self.union_rule = union_rule
        self.calls: dict[tuple[int, ...], int] = {}

    def vector(self, subset: tuple[int, ...]) -> np.ndarray:
        subset = tuple(sorted(subset))
        if subset in self.pieces:
            return self.pieces[subset]
        parts = [v for k, v in sorted(self.pieces.items()) if set(k) <= set(subset)]
        return np.asarray(self.union_rule(subset, parts), dtype=float)

    def __call__(self, data: Dataset, subset: tuple[int, ...]) -> Assessment:
        subset = tuple(sorted(subset))
        self.calls[subset] = self.calls.get(subset, 0) + 1
        preds = PredictionVector(self.vector(subset), Provenance.DIRECT)
        return Assessment(mse(data.y, preds.values), preds)


@pytest.fixture
def scripted():
    return ScriptedAssessor


# ==========================================
# LEDGER & CLI
# ==========================================

@pytest.fixture(name="ledger_session")
def ledger_session_fixture():
    """
    Clean-slate ledger for every test: an in-memory SQLite engine with the
    tables created from the SQLModel metadata.
    """
    engine = create_engine("sqlite://", connect_args={"check_same_thread": False}, poolclass=StaticPool)
    SQLModel.metadata.create_all(engine)
    with Session(engine) as session:
        yield session
    SQLModel.metadata.drop_all(engine)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def csv_file(tmp_path):
    """Writes a Dataset to a CSV in tmp_path and returns the path."""
    def write(data: Dataset, name: str = "data.csv"):
        return save_csv(data, tmp_path / name)
    return write
