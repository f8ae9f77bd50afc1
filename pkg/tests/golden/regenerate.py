"""Rewrite the golden files from the current implementation.

Run only after a deliberate, reviewed change in numerical behaviour:

    python -m tests.golden.regenerate
"""

from __future__ import annotations

import json
from pathlib import Path

from capdispatch.dispatch import evaluate_config, optimize_day
from capdispatch.io import bundled_khodabandelu, export_schedule
from capdispatch.loadmodel import hourly_loads
from capdispatch.netmodel import build_ybus
from capdispatch.powerflow import CapacitorConfig, solve_powerflow

HERE = Path(__file__).parent


def _dump(name: str, doc: dict) -> None:
    (HERE / name).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def main() -> None:
    ds = bundled_khodabandelu()
    net = ds.network
    y = build_ybus(net)
    loads11 = hourly_loads(net.ordered_buses, ds.profile, 11)
    sol = solve_powerflow(net, y, loads11, CapacitorConfig.all_off(net))
    _dump(
        "t11_all_off.json",
        {
            "voltages_pu": sol.state.v_pu.tolist(),
            "angles_rad": sol.state.delta_rad.tolist(),
            "p_slack_pu": sol.p_slack_pu,
            "q_slack_pu": sol.q_slack_pu,
        },
    )
    records = {}
    for counts in ((0, 0, 0), (3, 3, 3)):
        cfg = CapacitorConfig(tuple(zip(net.capacitor_buses, counts)))
        rec = evaluate_config(net, y, loads11, ds.prices, 11, cfg)
        records[str(cfg)] = {
            "revenue": float(rec.econ.revenue),
            "cost": float(rec.econ.cost),
            "profit": float(rec.econ.profit),
            "voltages_pu": rec.solution.state.v_pu.tolist(),
        }
    _dump("t11_configs.json", records)

    loads21 = hourly_loads(net.ordered_buses, ds.profile, 21)
    k13 = net.index[13]
    effect = {}
    for n in (0, 3):
        s = solve_powerflow(net, y, loads21, CapacitorConfig.from_mapping({10: 0, 12: 0, 13: n}))
        effect[str(n)] = {"v13_pu": float(s.state.v_pu[k13]), "q_slack_pu": s.q_slack_pu}
    _dump("t21_bus13_bank.json", effect)

    export_schedule(optimize_day(net, ds.prices, ds.profile), net, "csv", HERE / "schedule.csv")


if __name__ == "__main__":
    main()
