"""Command-line entry point.

Exit codes: 0 success, 1 validation diagnostics, 2 parse/schema failure,
3 solver failure, 4 infeasible schedule, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Sequence

from capdispatch.dispatch import EXHAUSTIVE, LOCAL_SEARCH, DispatchOptions, EnumerationOverflow, HourError, optimize_day
from capdispatch.errors import ConfigError, SolverError
from capdispatch.io import BUNDLED_PATHS, DatasetError, read_dataset, with_overrides
from capdispatch.io.export import (
    read_report,
    report_to_csv,
    schedule_report,
    solution_record,
    write_metadata,
    write_report,
)
from capdispatch.loadmodel import HOURS, hourly_loads
from capdispatch.netmodel import build_ybus, validate_network
from capdispatch.powerflow import CapacitorConfig, SolverOptions, check_config, solve_powerflow

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_INFEASIBLE = 4
EXIT_USAGE = 64

log = logging.getLogger("capdispatch")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _in_range(lo: float, hi: float, kind: type = float):
    def check(text: str):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}") from None
        if not lo <= value <= hi:
            raise argparse.ArgumentTypeError(f"{value} outside [{lo}, {hi}]")
        return value

    return check


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="capdispatch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    data = _Parser(add_help=False)
    g = data.add_argument_group("dataset (defaults to the bundled 13-bus feeder)")
    g.add_argument("--network", type=Path, default=BUNDLED_PATHS[0])
    g.add_argument("--prices", type=Path, default=BUNDLED_PATHS[1])
    g.add_argument("--profile", type=Path, default=BUNDLED_PATHS[2])
    g.add_argument("--base-mva", type=_in_range(1e-6, 1e6))
    g.add_argument("--frequency", type=_in_range(1.0, 1000.0), help="system frequency [Hz]")
    g.add_argument("--v-min", type=_in_range(0.01, 2.0), help="override every bus's lower voltage limit [pu]")
    g.add_argument("--v-max", type=_in_range(0.01, 2.0), help="override every bus's upper voltage limit [pu]")

    solver = _Parser(add_help=False)
    s = solver.add_argument_group("solver")
    s.add_argument("--tolerance", type=_in_range(1e-15, 1.0), default=1e-8)
    s.add_argument("--max-iterations", type=_in_range(1, 10_000, int), default=50)
    s.add_argument("--line-search", action="store_true", help="halve Newton steps that increase the residual")

    sub.add_parser("validate", parents=[data], help="check a dataset")

    pf = sub.add_parser("pf", parents=[data, solver], help="solve one hour's power flow")
    pf.add_argument("--hour", type=int, required=True)
    pf.add_argument("--config", default="", help='capacitor units per bus, e.g. "10=0,12=3,13=3"; unlisted banks are off')
    pf.add_argument("--output", type=Path, help="write the solution as JSON")

    opt = sub.add_parser("optimize", parents=[data, solver], help="optimise the 24-hour switching schedule")
    opt.add_argument("--method", choices=(EXHAUSTIVE, LOCAL_SEARCH), default=EXHAUSTIVE)
    opt.add_argument("--sale-credit", action="store_true", help="credit exported energy at wholesale prices")
    opt.add_argument("--workers", type=_in_range(1, 512, int), default=1)
    opt.add_argument("--max-configs", type=_in_range(1, 10**9, int), default=10**6)
    opt.add_argument("--output", type=Path, help="report path (format from --format)")
    opt.add_argument("--format", choices=("csv", "json", "both"), default="csv")

    rep = sub.add_parser("report", help="convert a JSON schedule report")
    rep.add_argument("input", type=Path)
    rep.add_argument("--format", choices=("csv", "json"), default="csv")
    rep.add_argument("--output", type=Path, help="defaults to stdout")
    return parser


def parse_config_literal(text: str, network) -> CapacitorConfig:
    counts = {b: 0 for b in network.capacitor_buses}
    for part in filter(None, (p.strip() for p in text.split(","))):
        bus, sep, n = part.partition("=")
        try:
            bus_id, count = int(bus), int(n)
        except ValueError:
            raise UsageError(f"bad config entry {part!r}; expected BUS=COUNT") from None
        if not sep:
            raise UsageError(f"bad config entry {part!r}; expected BUS=COUNT")
        if bus_id not in counts:
            raise UsageError(f"bus {bus_id} has no capacitor bank")
        counts[bus_id] = count
    config = CapacitorConfig.from_mapping(counts)
    try:
        check_config(network, config)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    return config


def _load(args: argparse.Namespace):
    dataset = read_dataset(args.network, args.prices, args.profile)
    network = with_overrides(
        dataset.network,
        base_mva=args.base_mva,
        frequency_hz=args.frequency,
        v_min_pu=args.v_min,
        v_max_pu=args.v_max,
    )
    return dataset, network


def _checked(args: argparse.Namespace):
    dataset, network = _load(args)
    diags = validate_network(network)
    if diags:
        raise DatasetError("validation", str(args.network), diags[0].location, "network invalid", diags)
    return dataset, network


def _solver_options(args: argparse.Namespace) -> SolverOptions:
    return SolverOptions(tolerance=args.tolerance, max_iterations=args.max_iterations, line_search=args.line_search)


def run_validate(args: argparse.Namespace) -> int:
    _, network = _load(args)
    diags = validate_network(network)
    for d in diags:
        print(d)
    print(f"{len(diags)} diagnostics")
    return EXIT_DIAGNOSTICS if diags else EXIT_OK


def run_pf(args: argparse.Namespace) -> int:
    if not 1 <= args.hour <= HOURS:
        raise UsageError(f"--hour must be in 1..{HOURS}, got {args.hour}")
    dataset, network = _checked(args)
    config = parse_config_literal(args.config, network)
    loads = hourly_loads(network.ordered_buses, dataset.profile, args.hour)
    sol = solve_powerflow(network, build_ybus(network), loads, config, _solver_options(args))

    print(f"hour {args.hour}  config {config or '(none)'}")
    print(f"{'bus':>4} {'v_pu':>12} {'angle_deg':>12} {'p_pu':>12} {'q_pu':>12} {'q_cap_pu':>12}")
    for k, bus_id in enumerate(network.bus_ids):
        print(
            f"{bus_id:>4} {sol.state.v_pu[k]:12.8f} {math.degrees(sol.state.delta_rad[k]):12.6f} "
            f"{sol.p_consumed[k]:12.8f} {sol.q_consumed[k]:12.8f} {sol.q_cap[k]:12.8f}"
        )
    print(f"slack p={sol.p_slack_pu:.10f} pu q={sol.q_slack_pu:.10f} pu")
    print(f"iterations={sol.iterations} max_residual={sol.max_residual:.3e} converged={str(sol.converged).lower()}")
    if args.output:
        record = {"hour": args.hour, "config": {str(b): n for b, n in config.items}, **solution_record(sol, network)}
        args.output.write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    if not sol.converged:
        print(f"power flow diverged: residual {sol.max_residual:.3e}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def run_optimize(args: argparse.Namespace) -> int:
    dataset, network = _checked(args)
    options = DispatchOptions(
        method=args.method,
        solver=_solver_options(args),
        sale_credit=args.sale_credit,
        max_configs=args.max_configs,
        workers=args.workers,
    )
    try:
        schedule = optimize_day(network, dataset.prices, dataset.profile, options)
    except HourError as exc:
        if isinstance(exc.__cause__, EnumerationOverflow):
            raise UsageError(str(exc)) from None
        raise
    report = schedule_report(schedule, network)
    if args.output:
        formats = ("csv", "json") if args.format == "both" else (args.format,)
        for fmt in formats:
            path = args.output if len(formats) == 1 else args.output.with_suffix(f".{fmt}")
            write_report(report, fmt, path)
            write_metadata(schedule, path, method=args.method, workers=args.workers)
            log.info("wrote %s", path)
    print(
        f"revenue={float(schedule.total_revenue):.6f} cost={float(schedule.total_cost):.6f} "
        f"profit={float(schedule.total_profit):.6f}"
    )
    failed = [h.t for h in schedule.hours if h.solution is None or not h.solution.converged]
    if failed:
        print("solver failure in hours: " + ", ".join(map(str, failed)), file=sys.stderr)
        return EXIT_SOLVER
    if not schedule.feasible:
        print("infeasible hours: " + ", ".join(map(str, schedule.infeasible_hours)), file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def run_report(args: argparse.Namespace) -> int:
    try:
        report = read_report(args.input)
    except (OSError, ValueError) as exc:
        print(f"cannot read report {args.input}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.output:
        write_report(report, args.format, args.output)
    else:
        body = report_to_csv(report) if args.format == "csv" else json.dumps(report, indent=2) + "\n"
        sys.stdout.write(body)
    totals = report["totals"]
    print(f"revenue={totals['revenue']:.6f} cost={totals['cost']:.6f} profit={totals['profit']:.6f}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"validate": run_validate, "pf": run_pf, "optimize": run_optimize, "report": run_report}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("CAPDISPATCH_LOG", "WARNING").upper(), format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"capdispatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetError as exc:
        print(exc, file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return EXIT_DIAGNOSTICS if exc.code in ("validation", "xref") else EXIT_PARSE
    except (SolverError, HourError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
