"""Hourly revenue, wholesale purchase cost and profit.

Money amounts are accumulated as exact rationals (:class:`fractions.Fraction`)
built from the float prices and powers, so ``profit == revenue - cost`` holds
exactly and scaling every price by a common factor scales every amount by
exactly that factor. Convert with ``float()`` for display.

Settlement intervals are one hour, so a per-unit power held for an hour is
``p_pu * base_mva`` MWh.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Sequence

from capdispatch.errors import ContractError
from capdispatch.loadmodel import HOURS, ConsumerClass, check_hour
from capdispatch.netmodel import Network, PerUnitBase
from capdispatch.powerflow import PowerFlowSolution


Price = float | Fraction


def _hourly(values: Sequence[Price], name: str) -> tuple[Price, ...]:
    # Fractions pass through untouched so that scaled schedules stay exact.
    values = tuple(v if isinstance(v, Fraction) else float(v) for v in values)
    if len(values) != HOURS:
        raise ValueError(f"{name}: expected {HOURS} hourly values, got {len(values)}")
    return values


@dataclass(frozen=True)
class PriceSchedule:
    """Retail and wholesale prices plus slack purchase caps, per hour.

    Attributes:
        ca: Retail active-energy price per class [$/MWh], 24 values each.
        cr: Retail reactive-energy price per class [$/MVArh], 24 values each.
        pm: Wholesale active-energy price [$/MWh].
        qm: Wholesale reactive-energy price [$/MVArh].
        p_slack_max: Active purchase cap [pu].
        q_slack_max: Reactive purchase cap [pu].
    """

    ca: Mapping[ConsumerClass, tuple[Price, ...]]
    cr: Mapping[ConsumerClass, tuple[Price, ...]]
    pm: tuple[Price, ...]
    qm: tuple[Price, ...]
    p_slack_max: tuple[float, ...] = (10.0,) * HOURS
    q_slack_max: tuple[float, ...] = (10.0,) * HOURS

    def __post_init__(self) -> None:
        for name in ("pm", "qm", "p_slack_max", "q_slack_max"):
            object.__setattr__(self, name, _hourly(getattr(self, name), name))
        for name in ("ca", "cr"):
            table = {ConsumerClass(c): _hourly(v, f"{name}[{c}]") for c, v in getattr(self, name).items()}
            object.__setattr__(self, name, table)
            if any(p < 0 for col in table.values() for p in col):
                raise ValueError(f"{name}: prices must be >= 0")
        if any(p < 0 for p in self.pm + self.qm):
            raise ValueError("wholesale prices must be >= 0")
        if any(c <= 0 for c in self.p_slack_max + self.q_slack_max):
            raise ValueError("slack purchase caps must be > 0")

    def scaled(self, factor: Price) -> PriceSchedule:
        """Every price multiplied by ``factor`` in exact arithmetic; caps unchanged."""
        f = Fraction(factor)

        def mul(values: tuple[Price, ...]) -> tuple[Fraction, ...]:
            return tuple(f * Fraction(p) for p in values)

        return replace(
            self,
            ca={c: mul(v) for c, v in self.ca.items()},
            cr={c: mul(v) for c, v in self.cr.items()},
            pm=mul(self.pm),
            qm=mul(self.qm),
        )


@dataclass(frozen=True)
class SlackDecomposition:
    p_pos: float
    p_neg: float
    q_pos: float
    q_neg: float


@dataclass(frozen=True)
class HourlyEconomics:
    revenue: Fraction
    cost: Fraction

    @property
    def profit(self) -> Fraction:
        return self.revenue - self.cost


def split_slack(p_slack_pu: float, q_slack_pu: float) -> SlackDecomposition:
    """Split signed slack exchange into purchase (pos) and sale (neg) parts."""
    return SlackDecomposition(
        p_pos=max(p_slack_pu, 0.0),
        p_neg=max(-p_slack_pu, 0.0),
        q_pos=max(q_slack_pu, 0.0),
        q_neg=max(-q_slack_pu, 0.0),
    )


def revenue_hour(
    solution: PowerFlowSolution,
    network: Network,
    prices: PriceSchedule,
    t: int,
) -> Fraction:
    """Retail income [$] from active and reactive energy consumed at non-slack buses."""
    if not solution.converged:
        raise ContractError("revenue requires a converged power-flow solution")
    check_hour(t)
    mva = Fraction(network.base.base_mva)
    total = Fraction(0)
    for k, bus in enumerate(network.ordered_buses):
        cls = bus.consumer_class
        if cls is None or bus.id in network.slack_buses:
            continue
        if cls not in prices.ca or cls not in prices.cr:
            raise ContractError(f"no retail price for class {cls.value} (bus {bus.id})")
        total += Fraction(prices.ca[cls][t - 1]) * Fraction(float(solution.p_consumed[k]))
        total += Fraction(prices.cr[cls][t - 1]) * Fraction(float(solution.q_consumed[k]))
    return total * mva


def cost_hour(
    dec: SlackDecomposition,
    prices: PriceSchedule,
    t: int,
    base: PerUnitBase,
    sale_credit: bool = False,
) -> Fraction:
    """Wholesale purchase cost [$] for hour ``t``.

    Only purchases are priced unless ``sale_credit`` is set, in which case
    exported energy is credited at the same wholesale prices.
    """
    check_hour(t)
    pm = Fraction(prices.pm[t - 1])
    qm = Fraction(prices.qm[t - 1])
    total = Fraction(dec.p_pos) * pm + Fraction(dec.q_pos) * qm
    if sale_credit:
        total -= Fraction(dec.p_neg) * pm + Fraction(dec.q_neg) * qm
    return total * Fraction(base.base_mva)


def hour_economics(
    solution: PowerFlowSolution,
    network: Network,
    prices: PriceSchedule,
    t: int,
    sale_credit: bool = False,
) -> HourlyEconomics:
    dec = split_slack(solution.p_slack_pu, solution.q_slack_pu)
    return HourlyEconomics(
        revenue=revenue_hour(solution, network, prices, t),
        cost=cost_hour(dec, prices, t, network.base, sale_credit),
    )


def profit_day(hours: Sequence[HourlyEconomics]) -> tuple[Fraction, Fraction, Fraction]:
    """Daily ``(total_revenue, total_cost, total_profit)``."""
    if len(hours) != HOURS:
        raise IndexError(f"expected {HOURS} hourly records, got {len(hours)}")
    revenue = sum((h.revenue for h in hours), Fraction(0))
    cost = sum((h.cost for h in hours), Fraction(0))
    return revenue, cost, revenue - cost
