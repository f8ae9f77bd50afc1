"""Consumer classes and the exponential voltage-dependent load model.

Consumed power follows ``p = p0 * v**k1`` and ``q = q0 * v**k2`` with ``v`` in
per unit. Exponents 0, 1 and 2 reproduce constant power, constant current and
constant impedance behaviour respectively.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

if TYPE_CHECKING:
    from capdispatch.powerflow import CapacitorBank

HOURS = 24


class ConsumerClass(str, enum.Enum):
    INDUSTRIAL = "Industrial"
    RESIDENTIAL = "Residential"
    COMMERCIAL = "Commercial"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class LoadModelParams:
    """Voltage exponents for active (``k1``) and reactive (``k2``) power."""

    k1: float
    k2: float

    def __post_init__(self) -> None:
        for name in ("k1", "k2"):
            k = getattr(self, name)
            if not (k >= 0 and k != float("inf")):
                raise ValueError(f"{name} must be finite and >= 0, got {k}")


CLASS_PARAMS: dict[ConsumerClass, LoadModelParams] = {
    ConsumerClass.INDUSTRIAL: LoadModelParams(0.18, 6.0),
    ConsumerClass.RESIDENTIAL: LoadModelParams(0.92, 4.04),
    ConsumerClass.COMMERCIAL: LoadModelParams(1.51, 3.04),
}

# Canonical models, usable as explicit parameters for a Custom class.
CONSTANT_POWER = LoadModelParams(0.0, 0.0)
CONSTANT_CURRENT = LoadModelParams(1.0, 1.0)
CONSTANT_IMPEDANCE = LoadModelParams(2.0, 2.0)
EXPONENTIAL = LoadModelParams(1.38, 3.22)

PRESETS: dict[str, LoadModelParams] = {
    "constant-power": CONSTANT_POWER,
    "constant-current": CONSTANT_CURRENT,
    "constant-impedance": CONSTANT_IMPEDANCE,
    "exponential": EXPONENTIAL,
}


def params_for_class(
    consumer_class: ConsumerClass | str, custom: LoadModelParams | None = None
) -> LoadModelParams:
    """Exponents for a consumer class.

    Args:
        consumer_class: One of the named classes, or ``Custom``.
        custom: Explicit exponents; required for ``Custom`` and ignored otherwise.

    Raises:
        ValueError: for ``Custom`` without explicit exponents.
    """
    cls = ConsumerClass(consumer_class)
    if cls is ConsumerClass.CUSTOM:
        if custom is None:
            raise ValueError("Custom consumer class requires explicit k1/k2 exponents")
        return custom
    return CLASS_PARAMS[cls]


@dataclass(frozen=True)
class Bus:
    """A feeder bus with its load and optional capacitor bank.

    Attributes:
        id: 1-based bus number.
        consumer_class: Consumer class; ``None`` only for the slack bus.
        params: Voltage exponents of the load.
        p0_peak: Peak active demand at nominal voltage [pu].
        q0_peak: Peak reactive demand at nominal voltage [pu].
        v_min_pu: Lower edge of the permitted voltage band [pu].
        v_max_pu: Upper edge of the permitted voltage band [pu].
        bank: Switchable capacitor bank at the bus, if any.
    """

    id: int
    consumer_class: ConsumerClass | None = None
    params: LoadModelParams = CONSTANT_POWER
    p0_peak: float = 0.0
    q0_peak: float = 0.0
    v_min_pu: float = 0.9
    v_max_pu: float = 1.1
    bank: CapacitorBank | None = None


@dataclass(frozen=True)
class LoadProfile:
    """Hourly demand as a percentage of peak, one column per consumer class.

    ``percent[cls][t - 1]`` is the percentage for hour ``t``.
    """

    percent: Mapping[ConsumerClass, tuple[float, ...]]

    def __post_init__(self) -> None:
        for cls, column in self.percent.items():
            if len(column) != HOURS:
                raise ValueError(
                    f"expected {HOURS} hourly rows for {ConsumerClass(cls).value}, got {len(column)}"
                )
            for t, pct in enumerate(column, start=1):
                if not 0 <= pct <= 100:
                    raise ValueError(f"percentage {pct} at hour {t} outside [0, 100]")

    def at(self, t: int, consumer_class: ConsumerClass) -> float:
        check_hour(t)
        return self.percent[consumer_class][t - 1]


@dataclass(frozen=True)
class HourlyLoads:
    """Nominal-voltage demand per bus for one hour, ordered like ``Network.bus_ids``."""

    t: int
    p0: tuple[float, ...]
    q0: tuple[float, ...]


def check_hour(t: int) -> None:
    if not 1 <= t <= HOURS:
        raise IndexError(f"hour {t} outside 1..{HOURS}")


def scale_to_hour(bus: Bus, profile: LoadProfile, t: int) -> tuple[float, float]:
    check_hour(t)
    if bus.consumer_class is None:
        return (0.0, 0.0)
    factor = profile.at(t, bus.consumer_class) / 100
    return (bus.p0_peak * factor, bus.q0_peak * factor)


def hourly_loads(buses: Sequence[Bus], profile: LoadProfile, t: int) -> HourlyLoads:
    scaled = [scale_to_hour(b, profile, t) for b in buses]
    return HourlyLoads(t=t, p0=tuple(p for p, _ in scaled), q0=tuple(q for _, q in scaled))


def load_power(p0: float, q0: float, v: float, params: LoadModelParams) -> tuple[float, float]:
    if not v > 0:
        raise ValueError(f"load voltage must be > 0, got {v}")
    return (p0 * v**params.k1, q0 * v**params.k2)


def load_power_derivative(
    p0: float, q0: float, v: float, params: LoadModelParams
) -> tuple[float, float]:
    """Sensitivities ``(dp/dv, dq/dv)`` of :func:`load_power`."""
    if not v > 0:
        raise ValueError(f"load voltage must be > 0, got {v}")
    return (
        params.k1 * p0 * v ** (params.k1 - 1),
        params.k2 * q0 * v ** (params.k2 - 1),
    )
