"""
Command-line tests: every subcommand end to end on small CSVs, exit codes
for bad input and byte-identical artifacts across thread counts.
"""
import numpy as np
import orjson
import pytest

from erpx.artifacts import load_model, read_frame
from erpx.commands.common import parse_rows
from erpx.config import load_run_config
from erpx.database import get_engine, runs_for
from erpx.exceptions import ConfigError
from erpx.main import app


@pytest.fixture
def small_config(tmp_path):
    """Settings that keep every subcommand to a few seconds."""
    path = tmp_path / "erpx.env"
    path.write_text(
        "ERPX_PATH_LENGTH=20\n"
        "ERPX_LAMBDA_RATIO=0.001\n"
        "ERPX_N_FOLDS=3\n"
        "ERPX_CV_REPETITIONS=2\n"
        "ERPX_N_TREES_FORMATION=20\n"
        "ERPX_N_TREES_FINAL=40\n"
        "ERPX_LOG_LEVEL=WARNING\n",
        encoding="utf-8",
    )
    return path


def invoke(runner, *args):
    return runner.invoke(app, [str(a) for a in args])


# ==========================================
# FORM & PREDICT
# ==========================================

def test_form_writes_all_artifacts(runner, csv_file, linear_data, small_config, tmp_path):
    data = csv_file(linear_data)
    out = tmp_path / "out"
    result = invoke(runner, "form", "--config", small_config, "--data", data, "--alpha", 0.2, "--seed", 3,
                    "--out-dir", out, "--threads", 1, "--exclude-rows", "1")
    assert result.exit_code == 0, result.output

    for name in ("model.json", "trace.csv", "report.txt", "run.meta"):
        assert (out / name).is_file()
    trace = read_frame(out / "trace.csv")
    assert len(trace) == 1
    row = trace.iloc[0]
    assert row["D"] == 8 and row["D"] >= row["d"] >= row["s"] >= row["e"] >= row["h"] >= 1
    assert (out / "trace.csv").read_text().startswith("# tool_version=")

    model, meta = load_model(out / "model.json")
    assert model.h == row["h"]
    assert meta["response"] == "y"
    assert "transforms=drop_rows(rows=[1])" in (out / "run.meta").read_text()


def test_form_is_identical_across_thread_counts(runner, csv_file, linear_data, small_config, tmp_path):
    data = csv_file(linear_data)
    for threads in (1, 4):
        result = invoke(runner, "form", "--config", small_config, "--data", data, "--seed", 8,
                        "--out-dir", tmp_path / f"t{threads}", "--threads", threads)
        assert result.exit_code == 0, result.output
    assert (tmp_path / "t1" / "trace.csv").read_bytes() == (tmp_path / "t4" / "trace.csv").read_bytes()
    assert (tmp_path / "t1" / "model.json").read_bytes() == (tmp_path / "t4" / "model.json").read_bytes()


def test_predict_round_trip(runner, csv_file, linear_data, small_config, tmp_path):
    data = csv_file(linear_data)
    out = tmp_path / "out"
    assert invoke(runner, "form", "--config", small_config, "--data", data, "--out-dir", out).exit_code == 0

    preds_dir = tmp_path / "preds"
    result = invoke(runner, "predict", "--model", out / "model.json", "--data", data, "--out-dir", preds_dir,
                    "--log-level", "WARNING")
    assert result.exit_code == 0, result.output
    assert "test MSE" in result.output
    predictions = read_frame(preds_dir / "predictions.csv")
    assert len(predictions) == linear_data.n
    assert np.isfinite(predictions["prediction"]).all()


def test_predict_needs_a_model(runner, csv_file, linear_data, tmp_path):
    result = invoke(runner, "predict", "--data", csv_file(linear_data), "--out-dir", tmp_path)
    assert result.exit_code == 2


def test_predict_with_missing_columns(runner, csv_file, linear_data, small_config, tmp_path):
    data = csv_file(linear_data)
    out = tmp_path / "out"
    assert invoke(runner, "form", "--config", small_config, "--data", data, "--out-dir", out).exit_code == 0
    other = tmp_path / "other.csv"
    other.write_text("x1,x2\n1,2\n", encoding="utf-8")
    result = invoke(runner, "predict", "--model", out / "model.json", "--data", other, "--out-dir", tmp_path / "p")
    assert result.exit_code == 1


# ==========================================
# BENCHMARK, COMPARE, SIMULATE
# ==========================================

def test_benchmark_plain_protocol(runner, csv_file, linear_data, small_config, tmp_path):
    out = tmp_path / "bench"
    result = invoke(runner, "benchmark", "--config", small_config, "--data", csv_file(linear_data), "--reps", 2,
                    "--alpha", 0.2, "--out-dir", out)
    assert result.exit_code == 0, result.output
    table = read_frame(out / "benchmark.csv")
    assert list(table["run"]) == [1, 2]
    assert (table["erpx_mse"] > 0).all() and (table["base_mse"] > 0).all()
    quantiles = read_frame(out / "quantiles.csv")
    assert set(zip(quantiles["method"], quantiles["metric"])) == {("erpx", "train"), ("base", "train")}
    assert (out / "summary.txt").is_file()


def test_benchmark_train_test_protocol(runner, csv_file, linear_data, small_config, tmp_path):
    out = tmp_path / "bench"
    result = invoke(runner, "benchmark", "--config", small_config, "--data", csv_file(linear_data), "--reps", 2,
                    "--n-train", 30, "--out-dir", out)
    assert result.exit_code == 0, result.output
    table = read_frame(out / "benchmark.csv")
    assert table["erpx_test_mse"].notna().all() and table["base_test_mse"].notna().all()
    assert len(read_frame(out / "quantiles.csv")) == 4


def test_benchmark_writes_the_ledger(runner, csv_file, linear_data, small_config, tmp_path):
    url = f"sqlite:///{tmp_path / 'runs.db'}"
    result = invoke(runner, "benchmark", "--config", small_config, "--data", csv_file(linear_data), "--reps", 2,
                    "--out-dir", tmp_path / "bench", "--ledger", url)
    assert result.exit_code == 0, result.output
    runs = runs_for(get_engine(url), "data")
    assert [r.run for r in runs] == [1, 2]
    assert runs[0].seed != runs[1].seed
    assert all(r.base == "lasso" and r.base_mse is not None for r in runs)


def test_compare(runner, csv_file, paired_data, small_config, tmp_path):
    out = tmp_path / "cmp"
    result = invoke(runner, "compare", "--config", small_config, "--data", csv_file(paired_data), "--reps", 2,
                    "--out-dir", out)
    assert result.exit_code == 0, result.output
    table = read_frame(out / "compare.csv")
    assert list(table.columns) == ["run", "lasso_mse", "forest_mse"]
    assert len(table) == 2


def test_simulate(runner, csv_file, octane_like, small_config, tmp_path):
    out = tmp_path / "sim"
    result = invoke(runner, "simulate", "--config", small_config, "--data", csv_file(octane_like),
                    "--replicates", 2, "--n-signals", 5, "--noise", "medium", "--design", "mixture", "--out-dir", out)
    assert result.exit_code == 0, result.output
    for r in (1, 2):
        assert (out / f"replicate_{r:03d}.csv").is_file()
        sidecar = orjson.loads((out / f"replicate_{r:03d}.recipe.json").read_bytes())
        assert sidecar["meta"]["replicate"] == r
        assert len(sidecar["recipe"]["signal_indices"]) == 5
    replica = read_frame(out / "replicate_001.csv")
    assert replica.shape == (octane_like.n, octane_like.D + 1)


# ==========================================
# ERRORS & OPTIONS
# ==========================================

def test_bad_alpha_is_a_config_error(runner, csv_file, linear_data, tmp_path):
    result = invoke(runner, "form", "--data", csv_file(linear_data), "--alpha", 1.5, "--out-dir", tmp_path)
    assert result.exit_code == 2


def test_missing_data_file(runner, tmp_path):
    result = invoke(runner, "form", "--data", tmp_path / "absent.csv", "--out-dir", tmp_path, "--log-level", "WARNING")
    assert result.exit_code == 1


def test_missing_data_option(runner, tmp_path):
    assert invoke(runner, "form", "--out-dir", tmp_path).exit_code == 2


def test_unknown_key_in_config_file(runner, csv_file, linear_data, tmp_path):
    config = tmp_path / "bad.env"
    config.write_text("ERPX_ALPHAA=0.1\n", encoding="utf-8")
    result = invoke(runner, "form", "--config", config, "--data", csv_file(linear_data), "--out-dir", tmp_path)
    assert result.exit_code == 2


def test_config_file_keys_need_no_prefix(tmp_path, monkeypatch):
    config = tmp_path / "plain.env"
    config.write_text("alpha=0.1\nERPX_N_FOLDS=3\nLambda_Rule=min\nexclude_rows=[1, 2]\n", encoding="utf-8")
    monkeypatch.setenv("ERPX_ALPHA", "0.3")
    cfg = load_run_config(config)
    assert cfg.alpha == 0.1
    assert cfg.n_folds == 3
    assert cfg.lambda_rule.value == "min"
    assert cfg.exclude_rows == [1, 2]
    assert load_run_config(config, alpha=0.2, n_folds=None).alpha == 0.2


@pytest.mark.parametrize("line", ["alpha=1.5", "alphaa=0.1", "exclude_rows=[1,"])
def test_bad_plain_config_lines_exit_2(runner, csv_file, linear_data, tmp_path, line):
    config = tmp_path / "plain.env"
    config.write_text(line + "\n", encoding="utf-8")
    result = invoke(runner, "form", "--config", config, "--data", csv_file(linear_data), "--out-dir", tmp_path)
    assert result.exit_code == 2


def test_version(runner):
    result = invoke(runner, "--version")
    assert result.exit_code == 0
    assert result.output.strip() == "0.1.0"


@pytest.mark.parametrize("text, rows", [
    ("25,26,36-39", [25, 26, 36, 37, 38, 39]),
    ("3", [3]),
    ("", []),
    (None, None),
])
def test_parse_rows(text, rows):
    assert parse_rows(text) == rows


def test_parse_rows_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_rows("1,x")
