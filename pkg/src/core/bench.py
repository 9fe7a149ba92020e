"""
Experiment grid: configuration files, seeded initial points and the trial runner.

Initial points come from numpy's Philox counter-based generator keyed with
``seed XOR trial``; integers are drawn with ``Generator.integers(lo, hi,
endpoint=True)`` (uniform on [lo, hi]). Only the distribution is contracted,
not the stream of any other generator.
"""
from __future__ import annotations

import configparser
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np

from .equilibrium import LogAffineBifunction, ResolventVariant, build_bifunction
from .errors import ConfigError, EquilibriumError, InvalidParameterError
from .manifold import LogOrthant, Manifold, Point, manifold_from_name
from .solvers import DEFAULT_MAX_ITER, IterateTrace, Method, RunStatus, SolverConfig, StepSchedule, solve

log = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1


def default_lambda_grid() -> Tuple[float, ...]:
    """3 * linspace(0.01, 0.1, 10), i.e. 0.03, 0.06, ..., 0.30."""
    return tuple(float(v) for v in 3.0 * np.linspace(0.01, 0.1, 10))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & SEED_MASK))


def trial_seed(seed: int, trial: int) -> int:
    return (int(seed) ^ int(trial)) & SEED_MASK


def sample_init(rng: np.random.Generator, n: int, lo: int, hi: int, manifold: Optional[Manifold] = None) -> Point:
    """Point with independent uniform integer coordinates in [lo, hi]."""
    if int(lo) != lo or int(hi) != hi:
        raise InvalidParameterError(f"bounds must be integers, got lo={lo}, hi={hi}")
    if not lo < hi:
        raise InvalidParameterError(f"need lo < hi, got lo={lo}, hi={hi}")
    if lo < 1:
        raise InvalidParameterError(f"need lo >= 1 for points of the log-orthant, got lo={lo}")
    manifold = manifold or LogOrthant(n)
    return manifold.point(rng.integers(int(lo), int(hi), size=int(n), endpoint=True).astype(float))


@dataclass(frozen=True)
class BenchConfig:
    example: str = "example52"
    dimension: int = 3
    methods: Tuple[Method, ...] = (Method.REMB, Method.REMD)
    variant: ResolventVariant = ResolventVariant.CHARACTERIZATION
    lambda_grid: Tuple[float, ...] = dataclasses.field(default_factory=default_lambda_grid)
    trials: int = 30
    init: str = "random"
    lo: int = 5
    hi: int = 20
    point: Optional[Tuple[float, ...]] = None
    tol: float = 1e-8
    max_iter: int = DEFAULT_MAX_ITER
    seed: int = 0
    matrix: Optional[Tuple[float, ...]] = None
    manifold: str = LogOrthant.name
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(Method.parse(m) for m in self.methods))
        object.__setattr__(self, "variant", ResolventVariant.parse(self.variant))
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.dimension < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.dimension}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.lambda_grid or any(not v > 0 for v in self.lambda_grid):
            raise ConfigError(f"lambda_grid must be a non-empty list of positive reals, got {self.lambda_grid}")
        if self.init == "random":
            if not self.lo < self.hi:
                raise ConfigError(f"random init needs lo < hi, got lo={self.lo}, hi={self.hi}")
            if self.manifold == LogOrthant.name and self.lo < 1:
                raise ConfigError(f"random init on the log-orthant needs lo >= 1, got {self.lo}")
        elif self.init == "fixed":
            if self.point is None or len(self.point) != self.dimension:
                raise ConfigError(f"fixed init needs a point of length {self.dimension}")
        else:
            raise ConfigError(f"init must be 'random' or 'fixed', got '{self.init}'")
        if not self.tol > 0 or self.max_iter < 1:
            raise ConfigError("tol must be > 0 and max_iter >= 1")

    def with_overrides(self, **overrides) -> "BenchConfig":
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def build_problem(self) -> Tuple[LogAffineBifunction, Manifold]:
        m = manifold_from_name(self.manifold, self.dimension)
        return build_bifunction(self.example, self.dimension, self.matrix, m), m

    def solver_config(self, record_trace: bool = True) -> SolverConfig:
        return SolverConfig(tol=self.tol, max_iter=self.max_iter, variant=self.variant, record_trace=record_trace)

    def initial_point(self, trial: int, manifold: Manifold) -> Tuple[Point, int]:
        if self.init == "fixed":
            return manifold.point(self.point), self.seed
        seed = trial_seed(self.seed, trial)
        return sample_init(make_rng(seed), self.dimension, self.lo, self.hi, manifold), seed


CONFIG_KEYS = {
    "problem": {"bifunction", "dimension", "matrix", "manifold"},
    "solver": {"methods", "variant", "lambda_grid", "tol", "max_iter"},
    "bench": {"trials", "init", "lo", "hi", "point", "seed", "workers"},
}


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in text.replace("\n", ",").split(",") if item.strip())


def _methods(text: str) -> Tuple[Method, ...]:
    text = text.strip().lower()
    if text == "both":
        return (Method.REMB, Method.REMD)
    return tuple(Method.parse(item) for item in text.split(",") if item.strip())


def parse_bench_config(text: str, source: str = "<string>") -> BenchConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from e

    values = {}
    for section in parser.sections():
        if section not in CONFIG_KEYS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        unknown = set(parser[section]) - CONFIG_KEYS[section]
        if unknown:
            raise ConfigError(f"{source}: unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
        values.update({key: parser[section][key] for key in parser[section]})

    converters = {
        "bifunction": ("example", lambda s: s.strip().lower()),
        "dimension": ("dimension", int),
        "matrix": ("matrix", _floats),
        "manifold": ("manifold", lambda s: s.strip().lower()),
        "methods": ("methods", _methods),
        "variant": ("variant", ResolventVariant.parse),
        "lambda_grid": ("lambda_grid", lambda s: default_lambda_grid() if s.strip() == "default" else _floats(s)),
        "tol": ("tol", float),
        "max_iter": ("max_iter", lambda s: int(float(s))),
        "trials": ("trials", int),
        "init": ("init", lambda s: s.strip().lower()),
        "lo": ("lo", int),
        "hi": ("hi", int),
        "point": ("point", _floats),
        "seed": ("seed", int),
        "workers": ("workers", int),
    }
    kwargs = {}
    for key, raw in values.items():
        field_name, convert = converters[key]
        try:
            kwargs[field_name] = convert(raw)
        except (ValueError, EquilibriumError) as e:
            raise ConfigError(f"{source}: bad value for '{key}': {raw!r} ({e})") from e
    try:
        return BenchConfig(**kwargs)
    except ConfigError as e:
        raise ConfigError(f"{source}: {e}") from e
    except EquilibriumError as e:
        raise ConfigError(f"{source}: {e}") from e


def load_bench_config(path) -> BenchConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_bench_config(path.read_text(), source=str(path))


@dataclass
class TrialResult:
    method: Method
    lam: float
    trial: int
    seed: int
    iterations: int
    status: RunStatus
    stop_reason: str
    elapsed_s: float
    x0: Point
    solution: Point


def run_trial(config: BenchConfig, F: LogAffineBifunction, m: Manifold, method: Method, lam: float,
              trial: int, record_trace: bool = False) -> Tuple[TrialResult, IterateTrace]:
    x0, seed = config.initial_point(trial, m)
    solution, trace = solve(method, F, m, x0, StepSchedule.constant(lam), config.solver_config(record_trace))
    result = TrialResult(method, lam, trial, seed, trace.iterations, trace.status, trace.stop_reason,
                         trace.elapsed_s, x0, solution)
    return result, trace


def run_grid(config: BenchConfig, progress: Optional[Callable[[int, int, str], None]] = None) -> List[TrialResult]:
    """All (method, lam, trial) runs, ordered by method, lam, then trial index."""
    F, m = config.build_problem()
    tasks = [(method, lam, trial)
             for method in config.methods
             for lam in config.lambda_grid
             for trial in range(config.trials)]
    total = len(tasks)

    def work(task):
        method, lam, trial = task
        return run_trial(config, F, m, method, lam, trial)[0]

    results = []
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for i, result in enumerate(pool.map(work, tasks), start=1):
                results.append(result)
                if progress:
                    progress(i, total, f"{result.method.value} lambda={result.lam:g} trial={result.trial}")
    else:
        for i, task in enumerate(tasks, start=1):
            results.append(work(task))
            if progress:
                progress(i, total, f"{task[0].value} lambda={task[1]:g} trial={task[2]}")
    log.debug("grid finished: %d runs", total)
    return results
