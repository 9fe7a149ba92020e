import json
import runpy
import sys
from pathlib import Path

import pandas as pd
import pytest

from src.interfaces.cli.cli_main import run

ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = ROOT / "config"


@pytest.fixture
def env(tmp_path):
    settings = tmp_path / "settings.json"
    settings.write_text(json.dumps({
        "output_dir": str(tmp_path / "results"),
        "db_path": str(tmp_path / "history.db"),
        "log_level": "WARNING",
        "log_format": "text",
        "default_seed": 11,
        "verify": {
            "geometry_cases": 20,
            "busemann_triples": 20,
            "resolvent_inputs": 10,
            "vi_samples": 20,
            "probe_trials": 100,
            "fejer_runs_ex52": 20,
            "fejer_runs_ex51": 4,
        },
    }))
    return tmp_path, ["--settings", str(settings)]


def test_run_writes_trace_and_report(env, capsys):
    tmp_path, common = env
    out = tmp_path / "run"
    assert run(["run", *common, "--out", str(out), "--method", "remb", "--lambda", "0.3"]) == 0
    text = capsys.readouterr().out
    assert "remb lambda=0.3: converged (tolerance)" in text
    assert '"fejer": "holds"' in text
    assert (out / "trace_remb_lambda0.3.csv").exists()
    report = (out / "report_remb_lambda0.3.csv").read_text().splitlines()
    assert report[-1].startswith("# summary fejer=holds")


def test_run_from_the_solution_prints_valid_json(env, capsys):
    tmp_path, common = env
    cfg = tmp_path / "at_solution.ini"
    cfg.write_text("[problem]\nbifunction = example52\ndimension = 3\n"
                   "[solver]\nmethods = remb\nlambda_grid = 0.3\n"
                   "[bench]\ninit = fixed\npoint = 1, 1, 1\n")
    assert run(["run", *common, "--config", str(cfg), "--out", str(tmp_path / "fixed")]) == 0
    lines = [line for line in capsys.readouterr().out.splitlines() if line.startswith("{")]
    assert len(lines) == 1
    verdicts = json.loads(lines[0])
    assert verdicts["empirical_rate"] is None
    assert verdicts["fejer"] == "holds"
    assert isinstance(verdicts["theorem_rate"], float)


def test_run_printed_variant(env, capsys):
    tmp_path, common = env
    out = tmp_path / "literal"
    argv = ["run", *common, "--config", str(CONFIG_DIR / "figures51.ini"), "--out", str(out),
            "--method", "remd", "--lambda", "0.09", "--variant", "paper-literal"]
    assert run(argv) == 0
    assert (out / "trace_remd_lambda0.09.csv").exists()
    assert not (out / "report_remd_lambda0.09.csv").exists()


def test_bench_writes_summaries(env):
    tmp_path, common = env
    cfg = tmp_path / "small.ini"
    cfg.write_text("[problem]\nbifunction = example52\ndimension = 4\n"
                   "[solver]\nmethods = both\nlambda_grid = 0.1, 0.2\n[bench]\ntrials = 3\n")
    out = tmp_path / "bench"
    assert run(["bench", *common, "--config", str(cfg), "--out", str(out), "--seed", "5"]) == 0
    summary = pd.read_csv(out / "summary.csv")
    assert len(summary) == 4
    trials = pd.read_csv(out / "trials.csv")
    assert len(trials) == 12
    assert set(trials["seed"]) == {5 ^ t for t in range(3)}
    assert (out / "box.csv").exists()


def test_trace_export_figure_points(env):
    tmp_path, common = env
    out = tmp_path / "figs"
    assert run(["trace-export", *common, "--out", str(out), "--method", "remb"]) == 0
    for label in ("1-2-3", "5-5-5"):
        df = pd.read_csv(out / f"figure_remb_x0_{label}.csv")
        assert df.columns[0] == "n"
        assert len(df.columns) == 11


def test_verify_passes_with_default_bifunction(env, capsys):
    tmp_path, common = env
    assert run(["verify", *common, "--out", str(tmp_path / "v")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["passed"] is True
    assert summary["findings"]
    assert (tmp_path / "v" / "verify.json").exists()


def test_verify_non_monotone_exits_1(env, capsys):
    tmp_path, common = env
    with pytest.raises(SystemExit) as exc:
        run(["verify", *common, "--config", str(CONFIG_DIR / "negated.ini"), "--out", str(tmp_path / "v")])
    assert exc.value.code == 1
    summary = json.loads(capsys.readouterr().out)
    assert any(name.startswith("probes.monotone") for name in summary["hard_failures"])


def test_bad_config_exits_1(env, capsys):
    tmp_path, common = env
    with pytest.raises(SystemExit) as exc:
        run(["bench", *common, "--config", str(tmp_path / "missing.ini")])
    assert exc.value.code == 1
    assert "Error:" in capsys.readouterr().err


def test_invalid_seed_is_rejected(env):
    _, common = env
    with pytest.raises(SystemExit) as exc:
        run(["run", *common, "--seed", "-3"])
    assert exc.value.code == 2


def test_history_lists_previous_runs(env, capsys):
    tmp_path, common = env
    run(["history", *common])
    assert "No runs recorded yet." in capsys.readouterr().out

    run(["run", *common, "--out", str(tmp_path / "r"), "--lambda", "0.2"])
    with pytest.raises(SystemExit):
        run(["bench", *common, "--config", str(tmp_path / "missing.ini")])
    capsys.readouterr()

    run(["history", *common, "--limit", "5"])
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3
    assert "bench" in lines[1] and "error" in lines[1]
    assert "run" in lines[2] and "ok" in lines[2]


def test_launcher_script(env, capsys, monkeypatch):
    _, common = env
    monkeypatch.setattr(sys, "argv", ["run_cli.py", "history", *common])
    with pytest.raises(SystemExit) as exc:
        runpy.run_path(str(ROOT / "Code" / "run_cli.py"), run_name="__main__")
    assert exc.value.code == 0
    assert "No runs recorded yet." in capsys.readouterr().out
