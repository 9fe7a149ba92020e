import logging

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

TRIAL_COLUMNS = ["method", "lambda", "trial", "seed", "iterations", "status", "elapsed_s"]
SUMMARY_COLUMNS = ["method", "lambda", "mean_iter", "std_iter", "mean_time_s", "std_time_s"]
BOX_COLUMNS = ["method", "lambda", "metric", "min", "q1", "median", "q3", "max"]
BOX_METRICS = ("iterations", "elapsed_s")
# wall-clock columns; everything else in the bench CSVs is reproducible from the seed
NONDETERMINISTIC_COLUMNS = ["elapsed_s", "mean_time_s", "std_time_s"]

# Reference mean iterations for example51 with the printed resolvent (tol 1e-16, lambda = 0.03 .. 0.30)
REFERENCE_EX51 = {
    "remb": [202, 110, 78, 62, 51, 45, 40, 36, 34, 31],
    "remd": [204, 106, 72, 55, 44, 37, 32, 28, 25, 22],
}
# Reference mean iterations for example52, N=1000 (tol 1e-8)
REFERENCE_EX52_N1000 = {
    "remb": {0.06: 226, 0.18: 80, 0.30: 51},
    "remd": {0.06: 219, 0.18: 73, 0.30: 44},
}


class DataProcessor:
    """
    Core component for Pandas DataFrame manipulations.
    Turns per-trial results into the summary, box statistics and reference comparisons.
    """

    def __init__(self):
        pass

    def trials_frame(self, results) -> pd.DataFrame:
        """One row per run, in the order the runner returned them."""
        if not results:
            return pd.DataFrame(columns=TRIAL_COLUMNS)
        rows = [{
            "method": r.method.value,
            "lambda": r.lam,
            "trial": r.trial,
            "seed": r.seed,
            "iterations": r.iterations,
            "status": r.status.value,
            "elapsed_s": r.elapsed_s,
        } for r in results]
        return pd.DataFrame(rows, columns=TRIAL_COLUMNS)

    def summarize(self, df: pd.DataFrame) -> pd.DataFrame:
        """
        Mean and sample standard deviation (n-1) of iterations and time per (method, lambda).
        A single trial has standard deviation 0.
        """
        if df is None or df.empty:
            return pd.DataFrame(columns=SUMMARY_COLUMNS)

        grouped = df.groupby(["method", "lambda"], sort=False)
        summary = grouped.agg(
            mean_iter=("iterations", "mean"),
            std_iter=("iterations", lambda s: s.std(ddof=1)),
            mean_time_s=("elapsed_s", "mean"),
            std_time_s=("elapsed_s", lambda s: s.std(ddof=1)),
        ).reset_index()
        summary[["std_iter", "std_time_s"]] = summary[["std_iter", "std_time_s"]].fillna(0.0)

        for row in summary.itertuples(index=False):
            log.info("%s lambda=%.2f mean_iter=%.2f std_iter=%.2f", row.method, row[1], row.mean_iter, row.std_iter)
        return summary[SUMMARY_COLUMNS]

    def box_stats(self, df: pd.DataFrame) -> pd.DataFrame:
        """Quartiles per (method, lambda) of the iteration counts and of the wall time."""
        if df is None or df.empty:
            return pd.DataFrame(columns=BOX_COLUMNS)

        frames = []
        for metric in BOX_METRICS:
            grouped = df.groupby(["method", "lambda"], sort=False)[metric]
            box = grouped.agg(
                min="min",
                q1=lambda s: s.quantile(0.25),
                median="median",
                q3=lambda s: s.quantile(0.75),
                max="max",
            ).reset_index()
            box.insert(2, "metric", metric)
            frames.append(box)
        return pd.concat(frames, ignore_index=True)[BOX_COLUMNS]

    def without_timing(self, df: pd.DataFrame) -> pd.DataFrame:
        """Drop wall-clock columns and rows; what remains is reproducible from the seed."""
        df = df.drop(columns=[c for c in NONDETERMINISTIC_COLUMNS if c in df.columns])
        if "metric" in df.columns:
            df = df[~df["metric"].isin(NONDETERMINISTIC_COLUMNS)]
        return df.reset_index(drop=True)

    def is_strictly_decreasing(self, summary: pd.DataFrame, method: str, column: str = "mean_iter") -> bool:
        rows = summary[summary["method"] == method].sort_values("lambda")
        values = rows[column].to_numpy()
        return bool(np.all(np.diff(values) < 0))

    def compare_to_reference(self, summary: pd.DataFrame, reference: dict) -> pd.DataFrame:
        """
        Join mean iterations with reference counts. ``reference`` maps method to
        either a list aligned with the sorted lambda grid or a {lambda: count} dict.
        """
        rows = []
        for method, expected in reference.items():
            mine = summary[summary["method"] == method].sort_values("lambda")
            if mine.empty:
                continue
            if isinstance(expected, dict):
                lookup = {round(k, 6): v for k, v in expected.items()}
                pairs = [(lam, it, lookup.get(round(lam, 6))) for lam, it in zip(mine["lambda"], mine["mean_iter"])]
            else:
                pairs = list(zip(mine["lambda"], mine["mean_iter"], list(expected) + [None] * len(mine)))
            for lam, mean_iter, ref in pairs:
                if ref is None:
                    continue
                rows.append({
                    "method": method,
                    "lambda": lam,
                    "mean_iter": mean_iter,
                    "reference": float(ref),
                    "ratio": mean_iter / float(ref),
                })
        return pd.DataFrame(rows, columns=["method", "lambda", "mean_iter", "reference", "ratio"])
