from pathlib import Path

import numpy as np
import pytest

from src.core.bench import (
    BenchConfig,
    default_lambda_grid,
    load_bench_config,
    make_rng,
    parse_bench_config,
    run_grid,
    sample_init,
    trial_seed,
)
from src.core.equilibrium import ResolventVariant, example52
from src.core.errors import ConfigError, InvalidParameterError
from src.core.solvers import Method, RunStatus, iteration_count_oracle

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"

SMALL = """
[problem]
bifunction = example52
dimension = 3

[solver]
methods = both
lambda_grid = 0.1, 0.3
tol = 1e-8

[bench]
trials = 4
lo = 5
hi = 20
seed = 99
"""


def test_default_lambda_grid():
    grid = default_lambda_grid()
    assert len(grid) == 10
    assert grid[0] == pytest.approx(0.03)
    assert grid[-1] == pytest.approx(0.30)
    assert all(b > a for a, b in zip(grid, grid[1:]))


def test_sample_init_bounds_and_reproducibility():
    a = sample_init(make_rng(42), 3, 5, 20)
    b = sample_init(make_rng(42), 3, 5, 20)
    np.testing.assert_array_equal(a.coords, b.coords)
    assert np.all((a.coords >= 5) & (a.coords <= 20))
    assert np.all(a.coords == np.round(a.coords))

    rng = make_rng(1)
    first, second = sample_init(rng, 3, 5, 20), sample_init(rng, 3, 5, 20)
    assert first.dim == second.dim == 3


def test_sample_init_invalid_bounds():
    for lo, hi in [(5, 5), (1, 1), (20, 5), (0, 5), (1.5, 4)]:
        with pytest.raises(InvalidParameterError):
            sample_init(make_rng(0), 3, lo, hi)


def test_sample_init_distribution():
    draws = sample_init(make_rng(7), 100000, 5, 20).coords
    assert draws.mean() == pytest.approx(12.5, abs=0.1)
    assert set(np.unique(draws)) == set(range(5, 21))


def test_trial_seed():
    assert trial_seed(99, 0) == 99
    assert trial_seed(99, 3) == 99 ^ 3
    assert trial_seed(2 ** 64 - 1, 1) == 2 ** 64 - 2


def test_parse_config():
    config = parse_bench_config(SMALL)
    assert config.example == "example52"
    assert config.methods == (Method.REMB, Method.REMD)
    assert config.lambda_grid == (0.1, 0.3)
    assert config.trials == 4 and config.seed == 99
    assert config.variant is ResolventVariant.CHARACTERIZATION


def test_parse_config_default_grid_and_matrix():
    config = parse_bench_config("""
[problem]
bifunction = matrix
dimension = 2
matrix = 2, 0,
         0, 3
[solver]
methods = remd
lambda_grid = default
""")
    assert config.lambda_grid == default_lambda_grid()
    assert config.methods == (Method.REMD,)
    F, _ = config.build_problem()
    np.testing.assert_array_equal(F.A, [[2.0, 0.0], [0.0, 3.0]])


@pytest.mark.parametrize("text", [
    "[problem]\nbifunction = example52\ncolour = red\n",
    "[extras]\nx = 1\n",
    "[bench]\ntrials = 0\n",
    "[bench]\nlo = 5\nhi = 5\n",
    "[bench]\ninit = fixed\n",
    "[bench]\ninit = sometimes\n",
    "[solver]\nmethods = newton\n",
    "[solver]\nvariant = exact\n",
    "[solver]\nlambda_grid = 0.1, -0.2\n",
    "[solver]\ntol = abc\n",
    "no section header\n",
])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_bench_config(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_bench_config(tmp_path / "missing.ini")


def test_bundled_configs_parse():
    assert load_bench_config(CONFIG_DIR / "example51.ini").variant is ResolventVariant.PAPER_LITERAL_EX51
    assert load_bench_config(CONFIG_DIR / "example52.ini").dimension == 1000
    assert load_bench_config(CONFIG_DIR / "figures51.ini").tol == 1e-16
    negated = load_bench_config(CONFIG_DIR / "negated.ini")
    assert not negated.build_problem()[0].is_monotone


def test_overrides():
    config = parse_bench_config(SMALL).with_overrides(seed=5, methods=("remd",), variant=None)
    assert config.seed == 5
    assert config.methods == (Method.REMD,)
    with pytest.raises(ConfigError):
        BenchConfig(trials=0)


def test_run_grid_order_and_oracle():
    config = parse_bench_config(SMALL)
    results = run_grid(config)
    assert len(results) == 2 * 2 * 4
    keys = [(r.method, r.lam, r.trial) for r in results]
    assert keys == sorted(keys, key=lambda k: (list(Method).index(k[0]), k[1], k[2]))
    F = example52(3)
    for r in results:
        assert r.status is RunStatus.CONVERGED
        assert r.seed == 99 ^ r.trial
        assert r.iterations == iteration_count_oracle(F, r.method, r.lam, r.x0, config.tol)


def test_run_grid_is_deterministic_across_workers():
    config = parse_bench_config(SMALL)
    serial = run_grid(config)
    threaded = run_grid(config.with_overrides(workers=4))
    assert [(r.method, r.lam, r.trial, r.iterations) for r in serial] == \
        [(r.method, r.lam, r.trial, r.iterations) for r in threaded]
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a.solution.coords, b.solution.coords)


def test_run_grid_progress():
    calls = []
    config = parse_bench_config(SMALL).with_overrides(trials=1)
    run_grid(config, progress=lambda cur, total, msg: calls.append((cur, total)))
    assert calls == [(1, 4), (2, 4), (3, 4), (4, 4)]


def test_fixed_init():
    config = BenchConfig(example="example52", dimension=2, init="fixed", point=(1.0, 1.0), trials=2,
                         lambda_grid=(0.2,), methods=("remb",))
    results = run_grid(config)
    assert [r.iterations for r in results] == [0, 0]
