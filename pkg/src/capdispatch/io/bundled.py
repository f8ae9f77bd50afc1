"""The Khodabandelu 13-bus, 20 kV feeder (Tehran) as an in-memory dataset."""

from __future__ import annotations

from capdispatch.economics import PriceSchedule
from capdispatch.loadmodel import HOURS, Bus, ConsumerClass, LoadProfile, params_for_class
from capdispatch.netmodel import Line, Network, PerUnitBase
from capdispatch.powerflow import CapacitorBank

COMMERCIAL = ConsumerClass.COMMERCIAL
INDUSTRIAL = ConsumerClass.INDUSTRIAL
RESIDENTIAL = ConsumerClass.RESIDENTIAL

# (from, to, R ohm, X ohm)
LINES: tuple[tuple[int, int, float, float], ...] = (
    (1, 2, 0.176, 0.138),
    (2, 3, 0.176, 0.138),
    (3, 4, 0.045, 0.035),
    (4, 5, 0.089, 0.069),
    (5, 6, 0.045, 0.035),
    (5, 7, 0.116, 0.091),
    (7, 8, 0.073, 0.073),
    (8, 9, 0.074, 0.058),
    (8, 10, 0.093, 0.093),
    (7, 11, 0.063, 0.05),
    (11, 12, 0.068, 0.053),
    (7, 13, 0.062, 0.053),
)

# bus: (P peak pu, Q peak pu, class)
PEAK_LOADS: dict[int, tuple[float, float, ConsumerClass]] = {
    2: (0.089, 0.0468, INDUSTRIAL),
    3: (0.0628, 0.047, INDUSTRIAL),
    4: (0.111, 0.0767, INDUSTRIAL),
    5: (0.064, 0.0378, INDUSTRIAL),
    6: (0.047, 0.0344, RESIDENTIAL),
    7: (0.134, 0.1078, INDUSTRIAL),
    8: (0.092, 0.0292, COMMERCIAL),
    9: (0.077, 0.0498, COMMERCIAL),
    10: (0.066, 0.048, COMMERCIAL),
    11: (0.069, 0.0186, RESIDENTIAL),
    12: (0.129, 0.0554, COMMERCIAL),
    13: (0.112, 0.048, RESIDENTIAL),
}

# Percentage of peak per hour: (Commercial, Industrial, Residential).
# The published profile has a 25th row that repeats hour 1; it is kept
# separately and never used for the 24-hour day.
PROFILE_ROWS: tuple[tuple[int, int, int], ...] = (
    (10, 40, 70),
    (2, 40, 50),
    (2, 40, 30),
    (2, 40, 30),
    (2, 40, 30),
    (10, 40, 50),
    (10, 40, 50),
    (20, 100, 60),
    (60, 100, 60),
    (90, 100, 60),
    (100, 100, 60),
    (100, 100, 70),
    (100, 100, 70),
    (100, 60, 80),
    (100, 60, 80),
    (90, 100, 80),
    (90, 100, 70),
    (90, 100, 70),
    (100, 100, 70),
    (100, 100, 90),
    (100, 100, 100),
    (90, 60, 100),
    (80, 60, 100),
    (30, 40, 90),
)
EXTRA_PROFILE_ROWS: tuple[tuple[int, int, int], ...] = ((10, 40, 70),)
PROFILE_CLASSES = (COMMERCIAL, INDUSTRIAL, RESIDENTIAL)

# bus: (uF per unit, units installed)
CAPACITORS: dict[int, tuple[float, int]] = {
    10: (2.0, 3),
    12: (2.0, 3),
    13: (2.0, 3),
}

# Synthetic tariff; no prices were published for this feeder.
WHOLESALE_ACTIVE = 40.0
WHOLESALE_REACTIVE = 5.0
RETAIL: dict[ConsumerClass, tuple[float, float]] = {
    COMMERCIAL: (60.0, 8.0),
    INDUSTRIAL: (55.0, 6.0),
    RESIDENTIAL: (65.0, 7.0),
}
SLACK_CAP_PU = 10.0

PROVENANCE = {
    "network/lines": "Line impedances of the Khodabandelu 20 kV feeder, Tehran "
    "(data originally from Khaje Kazeruni, 2001, M.Sc. dissertation, Tarbiat Modares University). "
    "Topology is reconstructed from the from/to buses.",
    "network/buses": "Published peak load (pu) and consumer class per bus of the same feeder.",
    "network/capacitors": "Three banks of 3 x 2 uF at buses 10, 12 and 13. "
    "Size is read as microfarads per unit capacitor.",
    "network/defaults": "NOT-FROM-SOURCE: base 10 MVA / 20 kV, 50 Hz, slack bus 1 at 1.0 pu, "
    "voltage band [0.9, 1.1] pu.",
    "profile": "Published hourly percentage of peak per class, hours 1-24. "
    "A 25th published row (duplicate of hour 1) is kept under extra_rows and not used.",
    "prices": "NOT-FROM-SOURCE: synthetic flat tariff. Wholesale 40 $/MWh and 5 $/MVArh; "
    "retail commercial 60/8, industrial 55/6, residential 65/7 ($/MWh, $/MVArh); "
    "slack caps 10 pu (non-binding).",
}


def bundled_network() -> Network:
    buses = [Bus(id=1)]
    for bus_id, (p, q, cls) in PEAK_LOADS.items():
        cap = CAPACITORS.get(bus_id)
        buses.append(
            Bus(
                id=bus_id,
                consumer_class=cls,
                params=params_for_class(cls),
                p0_peak=p,
                q0_peak=q,
                bank=CapacitorBank(*cap) if cap else None,
            )
        )
    return Network(
        buses=tuple(buses),
        lines=tuple(Line(*row) for row in LINES),
        slack_buses=(1,),
        slack_voltage_pu=1.0,
        base=PerUnitBase(10.0, 20.0),
        frequency_hz=50.0,
    )


def bundled_profile() -> LoadProfile:
    columns = zip(*PROFILE_ROWS)
    return LoadProfile(
        {cls: tuple(float(p) for p in col) for cls, col in zip(PROFILE_CLASSES, columns)}
    )


def bundled_prices() -> PriceSchedule:
    return PriceSchedule(
        ca={cls: (a,) * HOURS for cls, (a, _) in RETAIL.items()},
        cr={cls: (r,) * HOURS for cls, (_, r) in RETAIL.items()},
        pm=(WHOLESALE_ACTIVE,) * HOURS,
        qm=(WHOLESALE_REACTIVE,) * HOURS,
        p_slack_max=(SLACK_CAP_PU,) * HOURS,
        q_slack_max=(SLACK_CAP_PU,) * HOURS,
    )
