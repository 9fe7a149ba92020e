import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .bench import BenchConfig, TrialResult, load_bench_config, run_grid, run_trial
from .data_processor import DataProcessor
from .diagnostics import DiagnosticsSummary, SolutionRef, diagnose, kernel_projection_solution
from .equilibrium import LogAffineBifunction, ResolventVariant
from .errors import ConfigError
from .manifold import Point
from .services.property_suite import PropertySuite, SuiteReport
from .settings import Settings
from .solvers import IterateTrace, StepSchedule
from .storage import (
    Storage,
    write_box_csv,
    write_report_csv,
    write_series_csv,
    write_summary_csv,
    write_trace_csv,
    write_trials_csv,
)

log = logging.getLogger(__name__)

FIGURE_POINTS = ((1.0, 2.0, 3.0), (5.0, 5.0, 5.0))


@dataclass
class RunOutcome:
    result: TrialResult
    trace: IterateTrace
    diagnostics: Optional[DiagnosticsSummary]
    paths: Dict[str, Path] = field(default_factory=dict)


@dataclass
class BenchOutcome:
    trials: object
    summary: object
    box: object
    paths: Dict[str, Path] = field(default_factory=dict)


def solution_reference(F: LogAffineBifunction, x0: Point) -> Optional[SolutionRef]:
    """Known solution for the diagnostics, when one follows from the matrix alone."""
    beta = F.strong_monotonicity_modulus
    if beta is not None:
        # strongly monotone: the unique solution is the chart origin
        return SolutionRef(F.manifold.point_from_chart(np.zeros(F.dimension)), beta=beta)
    if F.is_monotone and np.allclose(F.A, F.A.T):
        return SolutionRef(kernel_projection_solution(F, x0))
    return None


class BenchApp:
    def __init__(self, config_path="config/settings.json"):
        self.settings = Settings(config_path)
        self.storage = Storage(self.settings.db_path)
        self.processor = DataProcessor()
        self._observers = []

    def add_observer(self, observer_callback):
        """
        Add a callback function to receive progress updates.
        Callback signature: callback(current, total, message)
        """
        self._observers.append(observer_callback)

    def _notify(self, current, total, message):
        for callback in self._observers:
            callback(current, total, message)

    def load_config(self, path=None, **overrides) -> BenchConfig:
        """Bench config from an INI file (or the defaults) with CLI overrides applied."""
        if path is None:
            config = BenchConfig(seed=self.settings.default_seed, workers=self.settings.workers)
        else:
            config = load_bench_config(path)
        try:
            return config.with_overrides(**overrides)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def out_dir(self, out=None) -> Path:
        path = Path(out) if out else self.settings.output_dir
        path.mkdir(parents=True, exist_ok=True)
        return path

    def record(self, command, config_path, seed, out_dir, status):
        self.storage.save_run(command, config_path, seed, out_dir, status)

    def run(self, config: BenchConfig, out=None, trial: int = 0) -> RunOutcome:
        """One solve with the first method and lambda of the config."""
        F, m = config.build_problem()
        method, lam = config.methods[0], config.lambda_grid[0]
        result, trace = run_trial(config, F, m, method, lam, trial, record_trace=True)
        self._notify(1, 1, f"{method.value} lambda={lam:g}: {result.status.value} after {result.iterations} iterations")

        out_dir = self.out_dir(out)
        stem = f"{method.value}_lambda{lam:g}"
        paths = {"trace": write_trace_csv(trace, out_dir / f"trace_{stem}.csv")}

        diagnostics = None
        sol = solution_reference(F, result.x0) if config.variant is ResolventVariant.CHARACTERIZATION else None
        if sol is not None and trace.rows > 0:
            diagnostics = diagnose(trace, sol, StepSchedule.constant(lam))
            paths["report"] = write_report_csv(diagnostics.report_frame(), diagnostics.verdicts(),
                                               out_dir / f"report_{stem}.csv")
        return RunOutcome(result, trace, diagnostics, paths)

    def bench(self, config: BenchConfig, out=None) -> BenchOutcome:
        results = run_grid(config, progress=self._notify)
        trials = self.processor.trials_frame(results)
        summary = self.processor.summarize(trials)
        box = self.processor.box_stats(trials)

        out_dir = self.out_dir(out)
        paths = {
            "summary": write_summary_csv(summary, out_dir / "summary.csv"),
            "trials": write_trials_csv(trials, out_dir / "trials.csv"),
            "box": write_box_csv(box, out_dir / "box.csv"),
        }
        for method in summary["method"].unique():
            if not self.processor.is_strictly_decreasing(summary, method):
                log.info("mean iterations of %s are not strictly decreasing in lambda", method)
        return BenchOutcome(trials, summary, box, paths)

    def verify(self, config: Optional[BenchConfig] = None, out=None, seed=None) -> SuiteReport:
        bifunction = config.build_problem()[0] if config is not None else None
        if seed is None:
            seed = config.seed if config is not None else self.settings.default_seed
        suite = PropertySuite(self.settings.verify, seed=seed, bifunction=bifunction, progress=self._notify)
        report = suite.run()
        self.storage.export_json(report.to_dict(), self.out_dir(out) / "verify.json")
        return report

    def trace_export(self, config: BenchConfig, out=None) -> Dict[str, Path]:
        """
        Er(n) series of every (method, lambda) for the figure initial points,
        one wide CSV per (method, initial point).
        """
        F, m = config.build_problem()
        if config.init == "fixed":
            points = (tuple(config.point),)
        elif config.dimension == 3:
            points = FIGURE_POINTS
        else:
            raise ConfigError("trace-export needs init = fixed unless the dimension is 3")

        out_dir = self.out_dir(out)
        paths = {}
        total = len(points) * len(config.methods) * len(config.lambda_grid)
        done = 0
        for point in points:
            fixed = config.with_overrides(init="fixed", point=point, trials=1)
            label = "-".join(f"{c:g}" for c in point)
            for method in config.methods:
                series = {}
                for lam in config.lambda_grid:
                    _, trace = run_trial(fixed, F, m, method, lam, 0)
                    series[f"lambda={lam:g}"] = trace.er
                    done += 1
                    self._notify(done, total, f"{method.value} x0=({label}) lambda={lam:g}")
                key = f"{method.value}_x0_{label}"
                paths[key] = write_series_csv(series, out_dir / f"figure_{key}.csv")
        return paths

    def get_history(self, limit=None):
        return self.storage.get_history(limit)
