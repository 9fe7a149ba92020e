import argparse
import json
import logging
import math
import sys

from ...core.app import BenchApp
from ...core.errors import EquilibriumError
from ...core.log_setup import configure_logging

log = logging.getLogger(__name__)

METHOD_CHOICES = ["remb", "remd", "both"]
VARIANT_CHOICES = ["characterization", "paper-literal"]


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment description (INI file)")
    common.add_argument("--seed", type=_u64, help="Base seed (overrides the config)")
    common.add_argument("--out", help="Output directory (default: output_dir from settings)")
    common.add_argument("--method", choices=METHOD_CHOICES, help="Solver(s) to run")
    common.add_argument("--variant", choices=VARIANT_CHOICES, help="Resolvent variant")
    common.add_argument("--lambda", dest="lam", type=float, help="Single step size instead of the config grid")
    common.add_argument("--settings", default="config/settings.json", help="Application settings file")

    parser = argparse.ArgumentParser(description="Extragradient equilibrium solvers on Hadamard manifolds")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="Solve once and write the trace CSV")
    sub.add_parser("bench", parents=[common], help="Run the (method, lambda, trial) grid and write summaries")
    sub.add_parser("verify", parents=[common], help="Run the property suites; exit 1 on a hard failure")
    sub.add_parser("trace-export", parents=[common], help="Write Er(n) series for the figure initial points")
    history = sub.add_parser("history", parents=[common], help="List previous invocations")
    history.add_argument("--limit", type=int, default=20)
    return parser


def _overrides(args):
    overrides = {"seed": args.seed, "variant": args.variant}
    if args.method:
        overrides["methods"] = ("remb", "remd") if args.method == "both" else (args.method,)
    if args.lam is not None:
        overrides["lambda_grid"] = (args.lam,)
    return overrides


def _jsonable(verdicts):
    # NaN and inf are not JSON; print them as null
    return {k: None if isinstance(v, float) and not math.isfinite(v) else v for k, v in verdicts.items()}


def _print_progress(current, total, message):
    log.debug("[%d/%d] %s", current, total, message)


def _dispatch(app, args):
    if args.command == "history":
        df = app.get_history(args.limit)
        if df.empty:
            print("No runs recorded yet.")
        else:
            print(df.to_string(index=False))
        return 0

    config = app.load_config(args.config, **_overrides(args))

    if args.command == "run":
        outcome = app.run(config, out=args.out)
        r = outcome.result
        print(f"{r.method.value} lambda={r.lam:g}: {r.status.value} ({outcome.trace.stop_reason}) "
              f"after {r.iterations} iterations")
        print(f"solution: {r.solution!r}")
        if outcome.diagnostics is not None:
            print(json.dumps(_jsonable(outcome.diagnostics.verdicts()), default=str, allow_nan=False))
        for name, path in outcome.paths.items():
            print(f"{name}: {path}")
        return 0

    if args.command == "bench":
        outcome = app.bench(config, out=args.out)
        print(outcome.summary.to_string(index=False))
        for name, path in outcome.paths.items():
            print(f"{name}: {path}")
        return 0

    if args.command == "verify":
        report = app.verify(config if args.config else None, out=args.out, seed=args.seed)
        print(json.dumps({
            "passed": report.passed,
            "checks": len(report.checks),
            "hard_failures": [f"{c.suite}.{c.name}" for c in report.hard_failures],
            "findings": [f"{c.suite}.{c.name}" for c in report.checks if not c.hard and not c.passed],
        }))
        return 0 if report.passed else 1

    if args.command == "trace-export":
        for name, path in app.trace_export(config, out=args.out).items():
            print(f"{name}: {path}")
        return 0
    return 2


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    # 1. Initialize App
    try:
        app = BenchApp(args.settings)
    except Exception as e:
        print(f"Initialization Error: {e}")
        sys.exit(1)

    configure_logging(app.settings.log_level, app.settings.log_format)
    app.add_observer(_print_progress)

    # 2. Execute
    try:
        code = _dispatch(app, args)
    except EquilibriumError as e:
        print(f"Error: {e}", file=sys.stderr)
        app.record(args.command, args.config, args.seed, args.out, "error")
        sys.exit(1)

    if args.command != "history":
        app.record(args.command, args.config, args.seed, args.out, "ok" if code == 0 else "failed")
    if code:
        sys.exit(code)
    return 0


if __name__ == "__main__":
    run()
