from __future__ import annotations

from dataclasses import replace

import pytest

from capdispatch.dispatch import (
    LOCAL_SEARCH,
    DispatchOptions,
    EnumerationOverflow,
    HourError,
    enumerate_configs,
    evaluate_config,
    local_search_hour,
    optimize_day,
    optimize_hour,
)
from capdispatch.economics import PriceSchedule
from capdispatch.errors import ConfigError, ContractError
from capdispatch.io import with_overrides
from capdispatch.loadmodel import CONSTANT_POWER, Bus, ConsumerClass, HourlyLoads, hourly_loads
from capdispatch.netmodel import Line, Network, PerUnitBase, build_ybus
from capdispatch.powerflow import CapacitorBank, CapacitorConfig, SolverOptions

IND = ConsumerClass.INDUSTRIAL


def zero_prices() -> PriceSchedule:
    classes = (IND, ConsumerClass.RESIDENTIAL, ConsumerClass.COMMERCIAL)
    zeros = (0.0,) * 24
    return PriceSchedule(ca={c: zeros for c in classes}, cr={c: zeros for c in classes}, pm=zeros, qm=zeros)


def single_bank_network(n_max: int, c_uf: float = 40.0) -> Network:
    return Network(
        (Bus(1), Bus(2, IND, CONSTANT_POWER, 0.2, 0.15, bank=CapacitorBank(c_uf, n_max))),
        (Line(1, 2, 0.5, 0.8),),
        base=PerUnitBase(10.0, 20.0),
    )


def retail_scaled(prices: PriceSchedule, factor: float) -> PriceSchedule:
    return replace(
        prices,
        ca={c: tuple(factor * p for p in v) for c, v in prices.ca.items()},
        cr={c: tuple(factor * p for p in v) for c, v in prices.cr.items()},
    )


@pytest.fixture(scope="module")
def exhaustive(dataset, network):
    return optimize_day(network, dataset.prices, dataset.profile)


# -- enumeration ------------------------------------------------------------


def test_enumerate_bundled(network):
    configs = enumerate_configs(network)
    assert len(configs) == 64
    assert configs[0].counts == (0, 0, 0)
    assert configs[1].counts == (0, 0, 1)
    assert configs[-1].counts == (3, 3, 3)
    assert configs == sorted(configs)
    assert all([b for b, _ in c.items] == [10, 12, 13] for c in configs)


def test_enumerate_without_banks():
    net = Network((Bus(1), Bus(2, IND, CONSTANT_POWER, 0.1, 0.0)), (Line(1, 2, 1, 1),))
    assert enumerate_configs(net) == [CapacitorConfig()]


def test_enumerate_single_unit():
    assert [c.counts for c in enumerate_configs(single_bank_network(1))] == [(0,), (1,)]


def test_enumerate_overflow(network):
    with pytest.raises(EnumerationOverflow, match="local-search"):
        enumerate_configs(network, max_configs=63)


# -- evaluate_config --------------------------------------------------------


def test_evaluate_zero_load_zero_prices(network, ybus):
    n = network.n_buses
    loads = HourlyLoads(1, (0.0,) * n, (0.0,) * n)
    rec = evaluate_config(network, ybus, loads, zero_prices(), 1, CapacitorConfig.all_off(network))
    assert rec.feasible and rec.profit == 0 and rec.infeasibility_reasons == ()


def test_evaluate_rejects_out_of_bounds(network, ybus, dataset):
    loads = hourly_loads(network.ordered_buses, dataset.profile, 1)
    with pytest.raises(ConfigError):
        evaluate_config(network, ybus, loads, dataset.prices, 1, CapacitorConfig.from_mapping({10: 4, 12: 0, 13: 0}))


def test_evaluate_t11_golden(dataset, network, ybus, golden_json):
    loads = hourly_loads(network.ordered_buses, dataset.profile, 11)
    golden = golden_json("t11_configs.json")
    profits = {}
    for key, ref in golden.items():
        cfg = CapacitorConfig.from_mapping({int(b): int(n) for b, n in (kv.split("=") for kv in key.split(","))})
        rec = evaluate_config(network, ybus, loads, dataset.prices, 11, cfg)
        assert rec.solution.converged and rec.feasible
        for name in ("revenue", "cost", "profit"):
            assert float(getattr(rec.econ, name)) == pytest.approx(ref[name], abs=1e-9)
        assert list(rec.solution.state.v_pu) == pytest.approx(ref["voltages_pu"], abs=1e-10)
        profits[key] = rec.profit
    assert len(set(profits.values())) == 2


def test_divergence_is_infeasible_not_fatal(dataset, network, ybus):
    loads = hourly_loads(network.ordered_buses, dataset.profile, 21)
    opts = DispatchOptions(solver=SolverOptions(max_iterations=1))
    rec = evaluate_config(network, ybus, loads, dataset.prices, 21, CapacitorConfig.all_off(network), opts)
    assert not rec.feasible
    assert rec.infeasibility_reasons[0].startswith("divergence")


def test_solver_failure_is_infeasible_not_fatal():
    net = Network((Bus(1), Bus(2, IND, CONSTANT_POWER, 0.1, 0.1)), ())
    rec = evaluate_config(net, build_ybus(net), HourlyLoads(1, (0, 0.1), (0, 0.1)), zero_prices(), 1, CapacitorConfig())
    assert not rec.feasible and rec.infeasibility_reasons[0].startswith("solver-failure")


def test_slack_cap_reason(dataset, network, ybus):
    loads = hourly_loads(network.ordered_buses, dataset.profile, 21)
    prices = replace(dataset.prices, p_slack_max=(0.1,) * 24, q_slack_max=(0.1,) * 24)
    rec = evaluate_config(network, ybus, loads, prices, 21, CapacitorConfig.all_off(network))
    kinds = {r.split(":")[0] for r in rec.infeasibility_reasons}
    assert not rec.feasible and kinds == {"p-slack-cap", "q-slack-cap"}


def test_feasibility_predicate_is_total(dataset, network, ybus):
    tight = with_overrides(network, v_min_pu=0.985, v_max_pu=1.1)
    loads = hourly_loads(network.ordered_buses, dataset.profile, 21)
    for cfg in enumerate_configs(tight):
        rec = evaluate_config(tight, ybus, loads, dataset.prices, 21, cfg)
        assert rec.feasible != bool(rec.infeasibility_reasons)
        assert rec.feasible == (rec.violation <= 0)


# -- optimize_hour ----------------------------------------------------------


def test_single_config_is_returned():
    net = Network((Bus(1), Bus(2, IND, CONSTANT_POWER, 0.1, 0.0)), (Line(1, 2, 1, 1),))
    rec = optimize_hour(net, build_ybus(net), HourlyLoads(1, (0, 0.1), (0, 0)), zero_prices(), 1)
    assert rec.config == CapacitorConfig() and len(rec.evaluations) == 1


def test_tie_break_prefers_smallest_config(network, ybus):
    n = network.n_buses
    loads = HourlyLoads(4, (0.0,) * n, (0.0,) * n)
    rec = optimize_hour(network, ybus, loads, zero_prices(), 4)
    assert len({e.profit for e in rec.evaluations}) == 1
    assert rec.config.counts == (0, 0, 0)


def test_exhaustive_is_its_own_oracle(exhaustive):
    for hour in exhaustive.hours:
        assert len(hour.evaluations) == 64
        feasible = [e for e in hour.evaluations if e.feasible]
        assert hour.profit == max(e.profit for e in feasible)
        assert all(hour.profit >= e.profit for e in feasible)
        best = [e.config for e in feasible if e.profit == hour.profit]
        assert hour.config == min(best)


def test_least_violating_when_nothing_feasible(dataset, network, ybus):
    tight = with_overrides(network, v_min_pu=0.999, v_max_pu=1.001)
    loads = hourly_loads(tight.ordered_buses, dataset.profile, 21)
    rec = optimize_hour(tight, ybus, loads, dataset.prices, 21)
    assert not rec.feasible
    assert not any(e.feasible for e in rec.evaluations)
    assert rec.violation == min(e.violation for e in rec.evaluations)
    assert rec.infeasibility_reasons and all(r.startswith("voltage") for r in rec.infeasibility_reasons)


# -- local search -----------------------------------------------------------


def test_local_search_returns_optimal_seed(dataset, network, ybus, exhaustive):
    for t in (3, 11, 21):
        best = exhaustive.hours[t - 1]
        loads = hourly_loads(network.ordered_buses, dataset.profile, t)
        rec = local_search_hour(network, ybus, loads, dataset.prices, t, seed_config=best.config)
        assert rec.config == best.config and rec.profit == best.profit


def test_local_search_never_beats_exhaustive(dataset, network, exhaustive):
    local = optimize_day(network, dataset.prices, dataset.profile, DispatchOptions(method=LOCAL_SEARCH))
    for lh, eh in zip(local.hours, exhaustive.hours):
        assert lh.feasible
        assert lh.profit <= eh.profit
        assert len(lh.evaluations) <= 64
    assert local.total_profit <= exhaustive.total_profit


def test_local_search_single_bank_sweep():
    net = single_bank_network(8)
    y = build_ybus(net)
    loads = HourlyLoads(1, (0.0, 0.2), (0.0, 0.15))
    prices = PriceSchedule(ca={IND: (55.0,) * 24}, cr={IND: (6.0,) * 24}, pm=(40.0,) * 24, qm=(5.0,) * 24)
    sweep = [evaluate_config(net, y, loads, prices, 1, CapacitorConfig(((2, n),))) for n in range(9)]
    profits = [r.profit for r in sweep]
    peak = max(range(9), key=lambda n: profits[n])
    assert 0 < peak < 8, "sweep should have an interior optimum"
    assert all(profits[i] < profits[i + 1] for i in range(peak))
    assert all(profits[i] > profits[i + 1] for i in range(peak, 8))
    rec = local_search_hour(net, y, loads, prices, 1)
    assert rec.config.counts == (peak,)


def test_local_search_without_banks():
    net = Network((Bus(1), Bus(2, IND, CONSTANT_POWER, 0.1, 0.0)), (Line(1, 2, 1, 1),))
    rec = local_search_hour(net, build_ybus(net), HourlyLoads(1, (0, 0.1), (0, 0)), zero_prices(), 1)
    assert rec.config == CapacitorConfig()


def test_local_search_rejects_bad_seed(dataset, network, ybus):
    loads = hourly_loads(network.ordered_buses, dataset.profile, 1)
    with pytest.raises(ConfigError):
        local_search_hour(network, ybus, loads, dataset.prices, 1,
                          seed_config=CapacitorConfig.from_mapping({10: 9, 12: 0, 13: 0}))


# -- optimize_day -----------------------------------------------------------


def test_bundled_schedule(exhaustive):
    assert exhaustive.feasible and exhaustive.infeasible_hours == ()
    assert [h.t for h in exhaustive.hours] == list(range(1, 25))
    assert exhaustive.total_revenue == sum(h.econ.revenue for h in exhaustive.hours)
    assert exhaustive.total_cost == sum(h.econ.cost for h in exhaustive.hours)
    assert exhaustive.total_profit == exhaustive.total_revenue - exhaustive.total_cost


def test_zero_prices_identity(dataset, network):
    prices = replace(dataset.prices, ca={c: (0.0,) * 24 for c in dataset.prices.ca},
                     cr={c: (0.0,) * 24 for c in dataset.prices.cr})
    s = optimize_day(network, prices, dataset.profile)
    assert s.total_revenue == 0
    assert s.total_profit == s.total_revenue - s.total_cost < 0


def test_hour_order_does_not_matter(dataset, network, exhaustive):
    order = tuple(reversed(range(1, 25)))
    other = optimize_day(network, dataset.prices, dataset.profile, hours=order)
    assert other.total_profit == exhaustive.total_profit
    for a, b in zip(other.hours, exhaustive.hours):
        assert a.config == b.config and a.econ == b.econ
        assert a.solution.state.v_pu.tobytes() == b.solution.state.v_pu.tobytes()


def test_bad_hour_order(dataset, network):
    with pytest.raises(ValueError):
        optimize_day(network, dataset.prices, dataset.profile, hours=(1, 2, 3))


def test_workers_match_sequential(dataset, network, exhaustive):
    par = optimize_day(network, dataset.prices, dataset.profile, DispatchOptions(workers=3))
    assert par.total_profit == exhaustive.total_profit
    for a, b in zip(par.hours, exhaustive.hours):
        assert a.config == b.config and a.econ == b.econ and a.evaluations == b.evaluations
        assert a.solution.state.v_pu.tobytes() == b.solution.state.v_pu.tobytes()


def test_warm_start_reaches_same_optimum(dataset, network, exhaustive):
    warm = optimize_day(network, dataset.prices, dataset.profile, DispatchOptions(warm_start=True))
    assert [h.config for h in warm.hours] == [h.config for h in exhaustive.hours]
    assert float(warm.total_profit) == pytest.approx(float(exhaustive.total_profit), rel=1e-12)


def test_doubling_retail_prices_weakly_increases_profit(dataset, network, exhaustive):
    doubled = optimize_day(network, retail_scaled(dataset.prices, 2.0), dataset.profile)
    assert doubled.total_profit >= exhaustive.total_profit
    for a, b in zip(doubled.hours, exhaustive.hours):
        assert a.profit >= b.profit


def test_errors_carry_the_hour(dataset, network):
    with pytest.raises(HourError) as info:
        optimize_day(network, dataset.prices, dataset.profile, DispatchOptions(max_configs=10))
    assert info.value.t == 1 and isinstance(info.value.__cause__, EnumerationOverflow)


def test_missing_class_price_is_a_contract_error(dataset, network, ybus):
    loads = hourly_loads(network.ordered_buses, dataset.profile, 1)
    prices = replace(dataset.prices, ca={IND: (1.0,) * 24})
    with pytest.raises(ContractError, match="no retail price"):
        evaluate_config(network, ybus, loads, prices, 1, CapacitorConfig.all_off(network))


def test_options_validation():
    with pytest.raises(ValueError):
        DispatchOptions(method="annealing")
    with pytest.raises(ValueError):
        DispatchOptions(workers=0)
