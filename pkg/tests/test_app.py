import json

import pandas as pd
import pytest

from src.core.app import BenchApp
from src.core.bench import BenchConfig
from src.core.data_processor import DataProcessor


@pytest.fixture
def app(tmp_path):
    settings = tmp_path / "settings.json"
    settings.write_text(json.dumps({
        "output_dir": str(tmp_path / "results"),
        "db_path": str(tmp_path / "history.db"),
    }))
    return BenchApp(str(settings))


def _reproducible_text(path):
    """CSV text without the wall-clock columns and elapsed_s box rows; fields stay as written."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    return DataProcessor().without_timing(df).to_csv(index=False)


def test_bench_csvs_are_reproducible_from_the_seed(app, tmp_path):
    config = BenchConfig(example="example52", dimension=5, lambda_grid=(0.06, 0.3), trials=5, seed=424242)
    first = app.bench(config, out=tmp_path / "a")
    second = app.bench(config.with_overrides(workers=3), out=tmp_path / "b")

    for name in ("summary", "trials", "box"):
        a, b = first.paths[name], second.paths[name]
        assert a.name == b.name
        assert _reproducible_text(a) == _reproducible_text(b), name


def test_summary_keeps_timing_columns_last(app, tmp_path):
    config = BenchConfig(example="example52", dimension=3, lambda_grid=(0.2,), trials=2, seed=1)
    outcome = app.bench(config, out=tmp_path / "s")
    header = outcome.paths["summary"].read_text().splitlines()[0]
    assert header == "method,lambda,mean_iter,std_iter,mean_time_s,std_time_s"
    assert _reproducible_text(outcome.paths["summary"]).splitlines()[0] == "method,lambda,mean_iter,std_iter"


def test_different_seeds_change_the_trials(app, tmp_path):
    config = BenchConfig(example="example52", dimension=5, lambda_grid=(0.1,), trials=4, seed=1)
    a = app.bench(config, out=tmp_path / "a").paths["trials"]
    b = app.bench(config.with_overrides(seed=2), out=tmp_path / "b").paths["trials"]
    assert _reproducible_text(a) != _reproducible_text(b)
