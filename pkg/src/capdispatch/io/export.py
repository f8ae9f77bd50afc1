"""Schedule and power-flow reports as CSV or JSON.

Report bodies are deterministic: wall-clock timings and timestamps go to a
``<path>.meta.json`` sidecar, never into the report itself.
"""

from __future__ import annotations

import csv
import io
import json
import time
from pathlib import Path
from typing import Any, Sequence

from capdispatch.dispatch import HourlyDispatch, Schedule
from capdispatch.netmodel import Network
from capdispatch.powerflow import CapacitorConfig, PowerFlowSolution

REPORT_VERSION = 1
SCHEMA_PATH = Path(__file__).with_name("report.schema.json")
MONEY_FIELDS = ("revenue", "cost", "profit")


def _floats(values: Sequence[float]) -> list[float]:
    return [float(v) for v in values]


def solution_record(solution: PowerFlowSolution, network: Network) -> dict[str, Any]:
    return {
        "converged": solution.converged,
        "iterations": solution.iterations,
        "max_residual": solution.max_residual,
        "bus_ids": list(network.bus_ids),
        "voltages_pu": _floats(solution.state.v_pu),
        "angles_rad": _floats(solution.state.delta_rad),
        "p_consumed_pu": _floats(solution.p_consumed),
        "q_consumed_pu": _floats(solution.q_consumed),
        "q_cap_pu": _floats(solution.q_cap),
        "p_slack_pu": solution.p_slack_pu,
        "q_slack_pu": solution.q_slack_pu,
    }


def _hour_record(hour: HourlyDispatch, network: Network) -> dict[str, Any]:
    n = network.n_buses
    sol = hour.solution
    nan = [None] * n
    return {
        "t": hour.t,
        "config": {str(b): c for b, c in hour.config.items},
        "voltages_pu": _floats(sol.state.v_pu) if sol else nan,
        "p_consumed_pu": _floats(sol.p_consumed) if sol else nan,
        "q_consumed_pu": _floats(sol.q_consumed) if sol else nan,
        "p_slack_pu": sol.p_slack_pu if sol else None,
        "q_slack_pu": sol.q_slack_pu if sol else None,
        "revenue": float(hour.econ.revenue) if hour.econ else 0.0,
        "cost": float(hour.econ.cost) if hour.econ else 0.0,
        "profit": float(hour.econ.profit) if hour.econ else 0.0,
        "feasible": hour.feasible,
        "infeasibility_reasons": list(hour.infeasibility_reasons),
        "evaluations": len(hour.evaluations),
    }


def schedule_report(schedule: Schedule, network: Network) -> dict[str, Any]:
    """JSON-ready report: 24 hour records plus exact-then-rounded daily totals."""
    return {
        "schema_version": REPORT_VERSION,
        "kind": "schedule",
        "bus_ids": list(network.bus_ids),
        "hours": [_hour_record(h, network) for h in schedule.hours],
        "totals": {
            "revenue": float(schedule.total_revenue),
            "cost": float(schedule.total_cost),
            "profit": float(schedule.total_profit),
        },
        "feasible": schedule.feasible,
        "infeasible_hours": list(schedule.infeasible_hours),
    }


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_header(bus_ids: Sequence[int]) -> list[str]:
    return (
        ["t", "config"]
        + [f"v_{b}" for b in bus_ids]
        + [f"p_{b}" for b in bus_ids]
        + [f"q_{b}" for b in bus_ids]
        + ["p_slack_pu", "q_slack_pu", *MONEY_FIELDS, "feasible", "evaluations", "infeasibility_reasons"]
    )


def report_to_csv(report: dict[str, Any]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(report["bus_ids"]))
    for h in report["hours"]:
        config = CapacitorConfig.from_mapping({int(b): c for b, c in h["config"].items()})
        row = (
            [h["t"], str(config)]
            + h["voltages_pu"]
            + h["p_consumed_pu"]
            + h["q_consumed_pu"]
            + [h["p_slack_pu"], h["q_slack_pu"], *(h[m] for m in MONEY_FIELDS)]
            + [h["feasible"], h["evaluations"], ";".join(h["infeasibility_reasons"])]
        )
        writer.writerow([_cell(v) for v in row])
    n = len(report["bus_ids"])
    totals = report["totals"]
    writer.writerow(
        ["total", ""] + [""] * (3 * n) + ["", "", *(_cell(totals[m]) for m in MONEY_FIELDS)]
        + [_cell(report["feasible"]), "", ""]
    )
    return buf.getvalue()


def write_report(report: dict[str, Any], fmt: str, path: Path | str) -> Path:
    path = Path(path)
    if fmt == "csv":
        body = report_to_csv(report)
    elif fmt == "json":
        body = json.dumps(report, indent=2) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path.write_text(body, encoding="utf-8")
    return path


def export_schedule(schedule: Schedule, network: Network, fmt: str, path: Path | str) -> Path:
    """Write the schedule report; raises ``OSError`` if ``path`` is not writable."""
    return write_report(schedule_report(schedule, network), fmt, path)


def write_metadata(schedule: Schedule, path: Path | str, **extra: Any) -> Path:
    """Sidecar with run timestamp and per-hour wall-clock, kept out of report bodies."""
    meta = {
        "created_unix": time.time(),
        "wall_time_s": {str(h.t): h.wall_time_s for h in schedule.hours},
        "evaluations": {str(h.t): len(h.evaluations) for h in schedule.hours},
        **extra,
    }
    side = Path(str(path) + ".meta.json")
    side.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return side


def read_report(path: Path | str) -> dict[str, Any]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("kind") != "schedule" or doc.get("schema_version") != REPORT_VERSION:
        raise ValueError(f"{path} is not a schedule report (schema version {REPORT_VERSION})")
    return doc


def parse_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))
