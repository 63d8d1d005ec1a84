"""Command line interface: ``simulate``, ``sweep`` and ``analyze``.

Exit codes: 0 success, 1 some sweep points failed, 2 configuration error,
3 numerical abort.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .analysis import analyze
from .config import AXES, ConfigError, load_grid, load_scenario, scenario_from_dict
from .core import ScenarioError
from .engine import simulate
from .metrics import compute_metrics
from .solver import NumericalError

__all__ = ["main", "build_parser", "cmd_simulate", "cmd_sweep", "cmd_analyze", "METRIC_COLUMNS"]

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
METRIC_COLUMNS = ("jain_fairness", "loss_rate", "mean_queue_share", "utilization", "jitter")
SEED_VAR = "FLUIDCC_SEED"


def _finite(value):
    """JSON-safe float: NaN and infinities become null."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def _write_json(path: Path, payload) -> None:
    text = json.dumps(_finite(payload), indent=2, sort_keys=True, default=str)
    path.write_text(text + "\n", encoding="utf-8")


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else format(value, ".9e")
    return str(value)


def _overrides(args) -> dict:
    return {"step": args.step, "duration": args.duration, "window": args.window}


def _error(message: str) -> None:
    print(f"fluidcc: error: {message}", file=sys.stderr)


def cmd_simulate(args) -> int:
    try:
        scenario, raw = load_scenario(args.scenario, _overrides(args))
    except ConfigError as exc:
        _error(str(exc))
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        trace = simulate(scenario)
    except NumericalError as exc:
        _error(f"numerical abort: {exc}")
        return EXIT_NUMERIC
    report = compute_metrics(trace, scenario.metric_start, scenario.window)
    trace.to_csv(out / "trace.csv")
    _write_json(out / "metrics.json", report.to_dict())
    stats = {k: v for k, v in trace.meta.get("stats", {}).items() if k != "wall_time"}
    _write_json(out / "scenario-echo.json", {
        "version": __version__,
        "seed": os.environ.get(SEED_VAR),
        "source": str(args.scenario),
        "input": raw,
        "scenario": scenario.to_dict(),
        "digest": scenario.digest(),
        "engine": stats,
    })
    print(json.dumps(_finite(report.to_dict()), sort_keys=True))
    return EXIT_OK


def _run_point(task):
    """Simulate one grid point; failures become a status string."""
    index, values, data, source, overrides = task
    row = {"index": index, **values}
    try:
        scenario = scenario_from_dict(data, f"{source}[point {index}]", "", overrides)
        trace = simulate(scenario)
        report = compute_metrics(trace, scenario.metric_start, scenario.window)
        row.update({k: getattr(report, k) for k in METRIC_COLUMNS})
        row["status"] = "ok"
    except (ConfigError, ScenarioError, NumericalError, ValueError) as exc:
        row.update({k: math.nan for k in METRIC_COLUMNS})
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row


def _summary_csv(rows, axes) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["index", *axes, *METRIC_COLUMNS, "status"]
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(col, "")) for col in header])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    try:
        grid = load_grid(args.grid)
    except ConfigError as exc:
        _error(str(exc))
        return EXIT_CONFIG
    if args.parallel < 1:
        _error("--parallel must be at least 1")
        return EXIT_CONFIG
    overrides = _overrides(args)
    tasks = [(p.index, p.values, p.scenario_data, str(args.grid), overrides)
             for p in grid.points()]
    if args.parallel == 1:
        rows = [_run_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            rows = list(pool.map(_run_point, tasks))
    rows.sort(key=lambda r: r["index"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    axes = [a for a in AXES if a in grid.names]
    (out / "summary.csv").write_text(_summary_csv(rows, axes), encoding="utf-8")
    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        _error(f"point {r['index']}: {r['status']}")
    print(f"{len(rows) - len(failed)}/{len(rows)} points ok; wrote {out / 'summary.csv'}")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_analyze(args) -> int:
    try:
        report = analyze(args.model, args.senders, args.capacity, args.delay)
    except ValueError as exc:
        _error(str(exc))
        return EXIT_CONFIG
    print(json.dumps(_finite(report.to_dict()), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fluidcc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fluidcc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--step", type=float, help="solver step in seconds")
        p.add_argument("--duration", type=float, help="simulated time in seconds")
        p.add_argument("--window", type=float, help="metric window in seconds")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("simulate", help="run one scenario")
    p.add_argument("--scenario", required=True, help="scenario TOML file")
    solver_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter grid")
    p.add_argument("--grid", required=True, help="grid TOML file")
    p.add_argument("--parallel", type=int, default=1, help="worker processes")
    solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="equilibrium and stability of a reduced model")
    p.add_argument("model", choices=["bbr1-deep", "bbr1-shallow", "bbr2"])
    p.add_argument("-N", "--senders", type=int, default=10, help="number of senders")
    p.add_argument("-C", "--capacity", type=float, default=100.0, help="bottleneck capacity")
    p.add_argument("-d", "--delay", type=float, default=1.0,
                   help="round-trip propagation delay (model time units)")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
