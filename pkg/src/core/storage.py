import json
import sqlite3
from datetime import datetime
from io import StringIO
from pathlib import Path

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.17g"
HISTORY_COLUMNS = ['timestamp', 'command', 'config', 'seed', 'out_dir', 'status']


class Storage:
    def __init__(self, db_path="data/history.db"):
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._init_db()

    def _init_db(self):
        """Initialize SQLite database with the run history table."""
        conn = sqlite3.connect(self.db_path)
        cursor = conn.cursor()
        cursor.execute('''
            CREATE TABLE IF NOT EXISTS run_history (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                timestamp TEXT,
                command TEXT,
                config TEXT,
                seed INTEGER,
                out_dir TEXT,
                status TEXT
            )
        ''')
        conn.commit()
        conn.close()

    def save_run(self, command, config, seed, out_dir, status):
        """Append one CLI invocation to the run history."""
        df = pd.DataFrame([{
            'timestamp': datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
            'command': command,
            'config': str(config) if config else '',
            'seed': None if seed is None else int(seed),
            'out_dir': str(out_dir) if out_dir else '',
            'status': status,
        }], columns=HISTORY_COLUMNS)
        self.save_history(df)

    def save_history(self, df):
        """Save run history rows to SQLite."""
        if df.empty:
            return

        df = df.copy()
        for col in HISTORY_COLUMNS:
            if col not in df.columns:
                df[col] = None

        conn = sqlite3.connect(self.db_path)
        df[HISTORY_COLUMNS].to_sql('run_history', conn, if_exists='append', index=False)
        conn.close()

    def get_history(self, limit=None):
        """Retrieve history as DataFrame, most recent first."""
        conn = sqlite3.connect(self.db_path)
        query = "SELECT * FROM run_history ORDER BY id DESC"
        if limit:
            query += f" LIMIT {int(limit)}"
        df = pd.read_sql_query(query, conn)
        conn.close()
        return df

    def export_json(self, data, path):
        """Export a frame (records) or a plain dict to JSON."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(data, pd.DataFrame):
            data.to_json(path, orient='records', indent=4)
        else:
            with open(path, 'w') as f:
                json.dump(data, f, indent=4, default=_jsonable)
        return path


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def _write_frame(df, path, trailer=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        df.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        if trailer:
            f.write(trailer + '\n')
    return path


def write_trace_csv(trace, path):
    """Per-iteration rows followed by a ``solution`` record."""
    coords = ",".join(FLOAT_FORMAT % c for c in trace.solution.coords)
    return _write_frame(trace.to_frame(), path, trailer=f"solution,{coords}")


def read_trace_csv(path):
    """Inverse of ``write_trace_csv``: (rows frame, solution coordinates)."""
    lines = Path(path).read_text().splitlines()
    solution = None
    if lines and lines[-1].startswith("solution,"):
        solution = np.array([float(v) for v in lines[-1].split(",")[1:]])
        lines = lines[:-1]
    df = pd.read_csv(StringIO("\n".join(lines) + "\n"), float_precision="round_trip")
    return df, solution


def write_summary_csv(summary, path):
    return _write_frame(summary, path)


def write_trials_csv(trials, path):
    return _write_frame(trials, path)


def write_box_csv(box, path):
    return _write_frame(box, path)


def write_report_csv(report, verdicts, path):
    """Diagnostics rows plus a ``# summary`` line of key=value verdicts."""
    summary = " ".join(f"{k}={v:.17g}" if isinstance(v, float) else f"{k}={v}" for k, v in verdicts.items())
    return _write_frame(report, path, trailer=f"# summary {summary}")


def write_series_csv(series, path):
    """Wide Er(n) table: one column per series, shorter series padded with blanks."""
    return _write_frame(pd.DataFrame({k: pd.Series(v, dtype=float) for k, v in series.items()}).rename_axis("n")
                        .reset_index(), path)
