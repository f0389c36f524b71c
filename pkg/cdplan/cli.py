"""
Command-line interface for cdplan.

Usage:
    cdplan plan --scenario builtin:abcd --out ./build/ --mode mcd --horizon 21 --mi 0.7
    cdplan resolve --scenario scene.json --trajectory ./build/report.json --out ./build2/
    cdplan check --report ./build/report.json
    cdplan render --report ./build/report.json --svg ./build/path.svg
    cdplan bench --suite builtin:table1 --out ./bench/

Exit codes: 0 success, 1 usage or I/O problem, 2 invalid input,
3 solver failure, 4 certificate violation.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from cdplan.backend.svg import SvgExporter
from cdplan.backend.table import TableExporter
from cdplan.core.errors import (
    CdplanError,
    NoFeasibleInWindow,
    NonFiniteEvaluation,
    ScenarioError,
    SolverFailure,
)
from cdplan.core.ir import RunReport
from cdplan.core.serialization import JsonSerializer
from cdplan.engine.pipeline import check_report, resolve_only, run_pipeline
from cdplan.engine.suite import apply_overrides, load_suite, resolve_scenario, run_experiment_suite

logger = logging.getLogger("cdplan")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_CERTIFICATE = 4


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logger.setLevel(level)


def _exit_code(report: RunReport) -> int:
    if report.certificate_violations:
        return EXIT_CERTIFICATE
    if report.unresolved_ids or not report.goal_reached:
        return EXIT_SOLVER
    return EXIT_OK


def write_outputs(report: RunReport, out_dir: Path) -> List[Path]:
    """report.json, timings.json and trajectory.svg in `out_dir`."""
    return [
        JsonSerializer.save_report(report, out_dir / "report.json"),
        JsonSerializer.save_json(JsonSerializer.timings_to_dict(report), out_dir / "timings.json"),
        SvgExporter.export(report, out_dir / "trajectory.svg"),
    ]


def _summary(report: RunReport) -> str:
    return (
        f"{report.scenario.name}: {report.status}, "
        f"{report.metrics.displaced_count} displaced, "
        f"total displacement {report.metrics.total_displacement_magnitude:.4f} m"
    )


def cmd_plan(args: argparse.Namespace) -> int:
    overrides = {
        "mode": args.mode,
        "horizon": args.horizon,
        "mi": args.mi,
        "seed_starts": args.seed_starts,
    }
    scenario, config = apply_overrides(resolve_scenario(args.scenario), overrides)
    report = run_pipeline(scenario, config=config, raise_on_failure=False)
    for path in write_outputs(report, args.out):
        print(path)
    print(_summary(report), file=sys.stderr)
    return _exit_code(report)


def cmd_resolve(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args.scenario)
    trajectory = JsonSerializer.load_trajectory(args.trajectory)
    report = resolve_only(scenario, trajectory, raise_on_failure=False)
    for path in write_outputs(report, args.out):
        print(path)
    print(_summary(report), file=sys.stderr)
    return _exit_code(report)


def cmd_check(args: argparse.Namespace) -> int:
    report = JsonSerializer.load_report(args.report)
    problems = check_report(report)
    for problem in problems:
        print(problem, file=sys.stderr)
    if problems:
        return EXIT_CERTIFICATE
    print(f"{args.report}: certificate passed")
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    report = JsonSerializer.load_report(args.report)
    print(SvgExporter.export(report, args.svg))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    suite = load_suite(args.suite)
    rows = run_experiment_suite(suite, args.out)
    for path in TableExporter.export(rows, args.out):
        print(path)
    failed = [r.cell for r in rows if r.status == "error"]
    if failed:
        print(f"{len(failed)} cell(s) failed: {', '.join(failed)}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdplan",
        description="Plan through movable obstacles, then displace the ones in the way.",
        epilog="Example: cdplan plan --scenario builtin:corridor --out ./build/",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for progress, -vv for solver detail"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="Run both stages on a scenario")
    plan.add_argument("--scenario", required=True, help="Scenario file or builtin:<name>")
    plan.add_argument("--out", type=Path, required=True, help="Output directory")
    plan.add_argument("--mode", choices=["mcd", "mcr", "shortest"])
    plan.add_argument("--horizon", type=int)
    plan.add_argument("--mi", type=float, help="Obstacle overlap weight")
    plan.add_argument("--seed-starts", type=int, help="Displacement starts per direction")
    plan.set_defaults(func=cmd_plan)

    resolve = sub.add_parser("resolve", help="Displace obstacles for a saved trajectory")
    resolve.add_argument("--scenario", required=True)
    resolve.add_argument("--trajectory", type=Path, required=True)
    resolve.add_argument("--out", type=Path, required=True)
    resolve.set_defaults(func=cmd_resolve)

    check = sub.add_parser("check", help="Re-certify a saved report")
    check.add_argument("--report", type=Path, required=True)
    check.set_defaults(func=cmd_check)

    render = sub.add_parser("render", help="Draw a saved report as SVG")
    render.add_argument("--report", type=Path, required=True)
    render.add_argument("--svg", type=Path, required=True)
    render.set_defaults(func=cmd_render)

    bench = sub.add_parser("bench", help="Run an experiment suite")
    bench.add_argument("--suite", required=True, help="Suite file or builtin:table1 / builtin:table2")
    bench.add_argument("--out", type=Path, required=True)
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entrypoint."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    _configure_logging(args.verbose)

    try:
        return args.func(args)
    except ScenarioError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (SolverFailure, NonFiniteEvaluation, NoFeasibleInWindow) as e:
        print(f"Solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CdplanError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
