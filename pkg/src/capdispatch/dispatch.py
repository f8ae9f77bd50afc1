"""Hourly capacitor switching optimisation and daily schedule assembly.

Hours are uncoupled, so the day is optimised one hour at a time. The exact
mode enumerates every admissible configuration; the local-search mode does
steepest ascent over +/-1 unit moves for feeders too large to enumerate.

Candidates are ranked by a total order: feasible before infeasible, then
higher profit (feasible) or smaller voltage-band violation (infeasible), then
the lexicographically smaller configuration.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

from capdispatch.economics import HourlyEconomics, PriceSchedule, hour_economics, profit_day, split_slack
from capdispatch.errors import SolverError
from capdispatch.loadmodel import HOURS, HourlyLoads, LoadProfile, check_hour, hourly_loads
from capdispatch.netmodel import AdmittanceMatrix, Network, build_ybus
from capdispatch.powerflow import (
    CapacitorConfig,
    PowerFlowSolution,
    SolverOptions,
    check_config,
    solve_powerflow,
)

EXHAUSTIVE = "exhaustive"
LOCAL_SEARCH = "local-search"


class EnumerationOverflow(ValueError):
    """Too many configurations for exhaustive search."""


@dataclass(frozen=True)
class DispatchOptions:
    method: str = EXHAUSTIVE
    solver: SolverOptions = field(default_factory=SolverOptions)
    sale_credit: bool = False
    max_configs: int = 10**6
    workers: int = 1
    warm_start: bool = False

    def __post_init__(self) -> None:
        if self.method not in (EXHAUSTIVE, LOCAL_SEARCH):
            raise ValueError(f"unknown method {self.method!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.max_configs < 1:
            raise ValueError("max_configs must be >= 1")


@dataclass(frozen=True)
class ConfigEvaluation:
    """Compact row of an hour's evaluation table."""

    config: CapacitorConfig
    feasible: bool
    profit: Fraction | None
    violation: float


@dataclass(frozen=True, eq=False)
class HourlyDispatch:
    t: int
    config: CapacitorConfig
    solution: PowerFlowSolution | None
    econ: HourlyEconomics | None
    feasible: bool
    infeasibility_reasons: tuple[str, ...] = ()
    violation: float = 0.0
    evaluations: tuple[ConfigEvaluation, ...] = ()
    wall_time_s: float = 0.0

    @property
    def profit(self) -> Fraction | None:
        return None if self.econ is None else self.econ.profit

    def summary(self) -> ConfigEvaluation:
        return ConfigEvaluation(self.config, self.feasible, self.profit, self.violation)


@dataclass(frozen=True, eq=False)
class Schedule:
    hours: tuple[HourlyDispatch, ...]
    total_revenue: Fraction
    total_cost: Fraction
    total_profit: Fraction

    @property
    def infeasible_hours(self) -> tuple[int, ...]:
        return tuple(h.t for h in self.hours if not h.feasible)

    @property
    def feasible(self) -> bool:
        return not self.infeasible_hours


def enumerate_configs(network: Network, max_configs: int = 10**6) -> list[CapacitorConfig]:
    """Every admissible configuration, lexicographic by (bus id, count)."""
    buses = network.capacitor_buses
    ranges = [range(network.bus(b).bank.n_max + 1) for b in buses]
    total = math.prod(len(r) for r in ranges)
    if total > max_configs:
        raise EnumerationOverflow(
            f"{total} capacitor configurations exceed the cap of {max_configs}; use local-search mode"
        )
    return [CapacitorConfig(tuple(zip(buses, counts))) for counts in itertools.product(*ranges)]


def band_violation(network: Network, solution: PowerFlowSolution) -> float:
    """Largest distance [pu] of any bus voltage outside its permitted band."""
    worst = 0.0
    for bus, v in zip(network.ordered_buses, solution.state.v_pu):
        worst = max(worst, bus.v_min_pu - v, v - bus.v_max_pu)
    return float(worst)


def evaluate_config(
    network: Network,
    ybus: AdmittanceMatrix,
    loads: HourlyLoads,
    prices: PriceSchedule,
    t: int,
    config: CapacitorConfig,
    options: DispatchOptions | None = None,
) -> HourlyDispatch:
    """Solve one configuration and classify it; solver failures become infeasible records."""
    options = options or DispatchOptions()
    check_config(network, config)
    try:
        solution = solve_powerflow(network, ybus, loads, config, options.solver)
    except SolverError as exc:
        return HourlyDispatch(t, config, None, None, False, (f"solver-failure: {exc}",), math.inf)
    if not solution.converged:
        reason = f"divergence: residual {solution.max_residual:.3e} after {solution.iterations} iterations"
        return HourlyDispatch(t, config, solution, None, False, (reason,), math.inf)

    econ = hour_economics(solution, network, prices, t, options.sale_credit)
    reasons = []
    viol = band_violation(network, solution)
    for bus, v in zip(network.ordered_buses, solution.state.v_pu):
        if not bus.v_min_pu <= v <= bus.v_max_pu:
            reasons.append(f"voltage: bus {bus.id} at {v:.6f} pu outside [{bus.v_min_pu}, {bus.v_max_pu}]")
    dec = split_slack(solution.p_slack_pu, solution.q_slack_pu)
    if dec.p_pos > prices.p_slack_max[t - 1]:
        reasons.append(f"p-slack-cap: {dec.p_pos:.6f} pu > {prices.p_slack_max[t - 1]} pu")
    if dec.q_pos > prices.q_slack_max[t - 1]:
        reasons.append(f"q-slack-cap: {dec.q_pos:.6f} pu > {prices.q_slack_max[t - 1]} pu")
    return HourlyDispatch(t, config, solution, econ, not reasons, tuple(reasons), viol)


def _rank(rec: HourlyDispatch) -> tuple:
    """Sort key; the minimum is the preferred record."""
    if rec.feasible:
        return (0, -rec.profit, rec.config.counts)
    return (1, rec.violation, rec.config.counts)


def optimize_hour(
    network: Network,
    ybus: AdmittanceMatrix,
    loads: HourlyLoads,
    prices: PriceSchedule,
    t: int,
    options: DispatchOptions | None = None,
) -> HourlyDispatch:
    """Best configuration by exhaustive enumeration.

    The returned record carries the whole evaluation table. If no candidate
    is feasible, the least-violating one is returned, flagged infeasible.
    """
    options = options or DispatchOptions()
    started = time.perf_counter()
    configs = enumerate_configs(network, options.max_configs)
    records = [evaluate_config(network, ybus, loads, prices, t, c, options) for c in configs]
    best = min(records, key=_rank)
    return _with_table(best, records, time.perf_counter() - started)


def local_search_hour(
    network: Network,
    ybus: AdmittanceMatrix,
    loads: HourlyLoads,
    prices: PriceSchedule,
    t: int,
    options: DispatchOptions | None = None,
    seed_config: CapacitorConfig | None = None,
) -> HourlyDispatch:
    """Steepest ascent from ``seed_config`` over single-unit switching moves."""
    options = options or DispatchOptions()
    started = time.perf_counter()
    seed = seed_config or CapacitorConfig.all_off(network)
    check_config(network, seed)
    limits = {b: network.bus(b).bank.n_max for b in network.capacitor_buses}
    cache: dict[CapacitorConfig, HourlyDispatch] = {}

    def evaluate(cfg: CapacitorConfig) -> HourlyDispatch:
        if cfg not in cache:
            cache[cfg] = evaluate_config(network, ybus, loads, prices, t, cfg, options)
        return cache[cfg]

    current = evaluate(seed)
    while True:
        neighbours = [evaluate(c) for c in _neighbours(current.config, limits)]
        if not neighbours:
            break
        best = min(neighbours, key=_rank)
        if _rank(best) >= _rank(current):
            break
        current = best
    records = [cache[c] for c in sorted(cache)]
    return _with_table(current, records, time.perf_counter() - started)


def _neighbours(config: CapacitorConfig, limits: dict[int, int]) -> list[CapacitorConfig]:
    out = []
    items = list(config.items)
    for k, (bus, n) in enumerate(items):
        for step in (-1, 1):
            if 0 <= n + step <= limits[bus]:
                moved = items.copy()
                moved[k] = (bus, n + step)
                out.append(CapacitorConfig(tuple(moved)))
    return out


def _with_table(best: HourlyDispatch, records: list[HourlyDispatch], wall: float) -> HourlyDispatch:
    return HourlyDispatch(
        t=best.t,
        config=best.config,
        solution=best.solution,
        econ=best.econ,
        feasible=best.feasible,
        infeasibility_reasons=best.infeasibility_reasons,
        violation=best.violation,
        evaluations=tuple(r.summary() for r in records),
        wall_time_s=wall,
    )


def _solve_hour(
    network: Network,
    prices: PriceSchedule,
    profile: LoadProfile,
    t: int,
    options: DispatchOptions,
    ybus: AdmittanceMatrix | None = None,
) -> HourlyDispatch:
    check_hour(t)
    ybus = ybus if ybus is not None else build_ybus(network)
    loads = hourly_loads(network.ordered_buses, profile, t)
    if options.method == EXHAUSTIVE:
        return optimize_hour(network, ybus, loads, prices, t, options)
    return local_search_hour(network, ybus, loads, prices, t, options)


def optimize_day(
    network: Network,
    prices: PriceSchedule,
    profile: LoadProfile,
    options: DispatchOptions | None = None,
    hours: tuple[int, ...] | None = None,
) -> Schedule:
    """Optimise all 24 hours independently and assemble the schedule.

    ``hours`` only changes the order in which hours are processed; the
    schedule is always assembled in hour order.
    """
    options = options or DispatchOptions()
    order = hours if hours is not None else tuple(range(1, HOURS + 1))
    if sorted(order) != list(range(1, HOURS + 1)):
        raise ValueError("hours must be a permutation of 1..24")
    ybus = build_ybus(network)
    results: dict[int, HourlyDispatch] = {}

    if options.warm_start:
        prev: HourlyDispatch | None = None
        for t in order:
            opts = options
            if prev is not None and prev.solution is not None and prev.solution.converged:
                opts = replace(options, solver=replace(options.solver, start=prev.solution.state))
            results[t] = _attributed(t, lambda: _solve_hour(network, prices, profile, t, opts, ybus))
            prev = results[t]
    elif options.workers > 1:
        with ProcessPoolExecutor(max_workers=options.workers) as pool:
            futures = {t: pool.submit(_solve_hour, network, prices, profile, t, options) for t in order}
            for t in order:
                results[t] = _attributed(t, futures[t].result)
    else:
        for t in order:
            results[t] = _attributed(t, lambda: _solve_hour(network, prices, profile, t, options, ybus))

    ordered = tuple(results[t] for t in range(1, HOURS + 1))
    econs = [h.econ or HourlyEconomics(Fraction(0), Fraction(0)) for h in ordered]
    revenue, cost, profit = profit_day(econs)
    return Schedule(ordered, revenue, cost, profit)


class HourError(RuntimeError):
    def __init__(self, t: int, cause: Exception):
        super().__init__(f"hour {t}: {cause}")
        self.t = t


def _attributed(t: int, run: Callable[[], HourlyDispatch]) -> HourlyDispatch:
    try:
        return run()
    except Exception as exc:
        raise HourError(t, exc) from exc
