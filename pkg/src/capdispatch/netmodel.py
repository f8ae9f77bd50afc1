"""Static feeder data model, per-unit conversion and Y-bus assembly.

Lines use the short-line model: a series impedance only, no shunt charging.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from capdispatch.loadmodel import Bus


@dataclass(frozen=True)
class PerUnitBase:
    """System base used to normalise ohmic impedances.

    Attributes:
        base_mva: Three-phase apparent power base [MVA].
        base_kv: Line-to-line voltage base [kV].
    """

    base_mva: float = 10.0
    base_kv: float = 20.0

    def __post_init__(self) -> None:
        if not self.base_mva > 0:
            raise ValueError(f"base_mva must be > 0, got {self.base_mva}")
        if not self.base_kv > 0:
            raise ValueError(f"base_kv must be > 0, got {self.base_kv}")

    @property
    def z_base(self) -> float:
        """Impedance base [ohm]."""
        return self.base_kv**2 / self.base_mva


@dataclass(frozen=True)
class Line:
    """Short distribution line between two buses (undirected)."""

    from_bus: int
    to_bus: int
    r_ohm: float
    x_ohm: float

    def __post_init__(self) -> None:
        if self.from_bus == self.to_bus:
            raise ValueError(f"line {self.from_bus}-{self.to_bus} connects a bus to itself")
        if self.r_ohm < 0 or self.x_ohm < 0:
            raise ValueError(
                f"line {self.from_bus}-{self.to_bus}: r_ohm and x_ohm must be >= 0"
            )

    @property
    def label(self) -> str:
        return f"{self.from_bus}-{self.to_bus}"

    @property
    def key(self) -> tuple[int, int]:
        """Endpoint pair, orientation-free."""
        return (min(self.from_bus, self.to_bus), max(self.from_bus, self.to_bus))


@dataclass(frozen=True)
class Diagnostic:
    """Machine-readable validation finding."""

    code: str
    location: str
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"[{self.severity}] {self.code} at {self.location}: {self.message}"


@dataclass(frozen=True)
class Network:
    """Immutable feeder description.

    ``slack_buses`` normally holds exactly one id; it is a tuple so that a
    malformed dataset with several slack designations can still be
    represented and reported by :func:`validate_network`.
    """

    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    slack_buses: tuple[int, ...] = (1,)
    slack_voltage_pu: float = 1.0
    base: PerUnitBase = field(default_factory=PerUnitBase)
    frequency_hz: float = 50.0

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def slack(self) -> int:
        if len(self.slack_buses) != 1:
            raise ValueError(f"network has {len(self.slack_buses)} slack buses, expected 1")
        return self.slack_buses[0]

    @cached_property
    def bus_ids(self) -> tuple[int, ...]:
        """Bus ids in ascending order; position in this tuple is the matrix index."""
        return tuple(sorted(b.id for b in self.buses))

    @cached_property
    def index(self) -> dict[int, int]:
        return {bus_id: k for k, bus_id in enumerate(self.bus_ids)}

    @cached_property
    def ordered_buses(self) -> tuple[Bus, ...]:
        by_id = {b.id: b for b in self.buses}
        return tuple(by_id[i] for i in self.bus_ids)

    def bus(self, bus_id: int) -> Bus:
        return self.ordered_buses[self.index[bus_id]]

    @cached_property
    def exponents(self) -> tuple[np.ndarray, np.ndarray]:
        """Load exponents ``(k1, k2)`` per bus in matrix order."""
        buses = self.ordered_buses
        return (
            np.array([b.params.k1 for b in buses], dtype=float),
            np.array([b.params.k2 for b in buses], dtype=float),
        )

    @cached_property
    def capacitor_buses(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.ordered_buses if b.bank is not None)


@dataclass(frozen=True, eq=False)
class AdmittanceMatrix:
    """Nodal admittance matrix in polar form, rows ordered by ascending bus id."""

    y_mag: np.ndarray
    y_ang: np.ndarray

    @cached_property
    def complex(self) -> np.ndarray:
        return self.y_mag * np.exp(1j * self.y_ang)


def line_to_pu(line: Line, base: PerUnitBase) -> complex:
    return complex(line.r_ohm, line.x_ohm) / base.z_base


def build_ybus(network: Network) -> AdmittanceMatrix:
    """Assemble the shunt-free nodal admittance matrix.

    Parallel lines between the same pair of buses simply add their series
    admittances.

    Raises:
        ValueError: if a line has zero impedance (r = x = 0).
    """
    n = network.n_buses
    idx = network.index
    y = np.zeros((n, n), dtype=complex)
    for line in network.lines:
        z = line_to_pu(line, network.base)
        if z == 0:
            raise ValueError(f"line {line.label} has zero impedance (r = x = 0)")
        ys = 1.0 / z
        a, b = idx[line.from_bus], idx[line.to_bus]
        y[a, a] += ys
        y[b, b] += ys
        y[a, b] -= ys
        y[b, a] -= ys
    return AdmittanceMatrix(y_mag=np.abs(y), y_ang=np.angle(y))


def validate_network(network: Network) -> list[Diagnostic]:
    """Check structural invariants of a network; returns an empty list when valid."""
    diags: list[Diagnostic] = []

    counts = Counter(b.id for b in network.buses)
    for bus_id, c in sorted(counts.items()):
        if c > 1:
            diags.append(Diagnostic("duplicate-bus", f"bus {bus_id}", f"bus id appears {c} times"))
    known = set(counts)

    if not network.slack_buses:
        diags.append(Diagnostic("no-slack", "network", "no slack bus designated"))
    elif len(network.slack_buses) > 1:
        ids = ", ".join(str(s) for s in network.slack_buses)
        diags.append(Diagnostic("multiple-slack", "network", f"multiple slack buses: {ids}"))
    for s in network.slack_buses:
        if s not in known:
            diags.append(Diagnostic("unknown-bus", f"slack {s}", f"slack bus {s} does not exist"))
    if not 0.5 <= network.slack_voltage_pu <= 1.5:
        diags.append(
            Diagnostic(
                "slack-voltage",
                "network",
                f"slack voltage {network.slack_voltage_pu} pu outside [0.5, 1.5]",
            )
        )
    if not network.frequency_hz > 0:
        diags.append(Diagnostic("frequency", "network", "frequency must be > 0"))

    for bus in network.buses:
        loc = f"bus {bus.id}"
        if bus.p0_peak < 0 or bus.q0_peak < 0:
            diags.append(Diagnostic("negative-load", loc, "peak loads must be >= 0"))
        if not 0 < bus.v_min_pu < bus.v_max_pu:
            diags.append(
                Diagnostic("voltage-band", loc, f"need 0 < v_min < v_max, got [{bus.v_min_pu}, {bus.v_max_pu}]")
            )
        if bus.id in network.slack_buses:
            if bus.p0_peak != 0 or bus.q0_peak != 0:
                diags.append(Diagnostic("slack-load", loc, "slack bus must carry no load"))
            if bus.bank is not None:
                diags.append(Diagnostic("slack-capacitor", loc, "slack bus must carry no capacitor bank"))
        elif bus.consumer_class is None:
            diags.append(Diagnostic("missing-class", loc, "non-slack bus has no consumer class"))

    seen: Counter[tuple[int, int]] = Counter()
    adjacency: dict[int, set[int]] = {b: set() for b in known}
    for line in network.lines:
        loc = f"line {line.label}"
        missing = [b for b in (line.from_bus, line.to_bus) if b not in known]
        for b in missing:
            diags.append(Diagnostic("unknown-bus", loc, f"line references nonexistent bus {b}"))
        if line.r_ohm == 0 and line.x_ohm == 0:
            diags.append(Diagnostic("zero-impedance", loc, "r = x = 0"))
        seen[line.key] += 1
        if not missing:
            adjacency[line.from_bus].add(line.to_bus)
            adjacency[line.to_bus].add(line.from_bus)
    for key, c in sorted(seen.items()):
        if c > 1:
            diags.append(
                Diagnostic(
                    "parallel-lines",
                    f"line {key[0]}-{key[1]}",
                    f"{c} lines between the same buses; admittances are added",
                    severity="warning",
                )
            )

    roots = [s for s in network.slack_buses if s in known]
    if roots and known:
        reached = {roots[0]}
        queue = deque([roots[0]])
        while queue:
            for nb in adjacency[queue.popleft()]:
                if nb not in reached:
                    reached.add(nb)
                    queue.append(nb)
        stranded = sorted(known - reached)
        if stranded:
            ids = ", ".join(str(b) for b in stranded)
            diags.append(
                Diagnostic("disconnected", "network", f"disconnected component {{{ids}}}")
            )
    return diags
