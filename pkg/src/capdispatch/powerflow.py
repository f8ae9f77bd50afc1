"""Newton-Raphson AC power flow in polar coordinates.

Unknowns are the angles and magnitudes of every non-slack bus. Loads follow
the exponential voltage model and capacitor banks inject ``v**2 * b * n`` of
reactive power (injection-positive). Voltage limits are not enforced here;
the solver reports the physics and leaves feasibility to the dispatch layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from capdispatch.errors import ConfigError, ContractError, SolverError
from capdispatch.loadmodel import HourlyLoads
from capdispatch.netmodel import AdmittanceMatrix, Network, PerUnitBase, line_to_pu


@dataclass(frozen=True)
class CapacitorBank:
    """Switchable bank of identical shunt capacitor units.

    Attributes:
        c_microfarad: Capacitance of one unit [uF].
        n_max: Number of installed units.
    """

    c_microfarad: float
    n_max: int

    def __post_init__(self) -> None:
        if not self.c_microfarad > 0:
            raise ValueError(f"c_microfarad must be > 0, got {self.c_microfarad}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max}")

    def b_pu_base(self, frequency_hz: float, base: PerUnitBase) -> float:
        """Per-unit susceptance of a single unit."""
        return 2 * math.pi * frequency_hz * self.c_microfarad * 1e-6 * base.z_base


def cap_injection(v: float, bank: CapacitorBank, n: int, frequency_hz: float, base: PerUnitBase) -> float:
    """Reactive power [pu] supplied by ``n`` switched-in units at voltage ``v``."""
    if int(n) != n or not 0 <= n <= bank.n_max:
        raise ConfigError(f"capacitor count {n} outside 0..{bank.n_max}")
    if not v > 0:
        raise ValueError(f"voltage must be > 0, got {v}")
    return v**2 * bank.b_pu_base(frequency_hz, base) * n


@dataclass(frozen=True, order=True)
class CapacitorConfig:
    """Number of switched-in units per capacitor bus for one hour.

    Stored as ``(bus_id, count)`` pairs sorted by bus id, so the natural
    ordering of configs is lexicographic by ascending bus id.
    """

    items: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_mapping(cls, ncap: Mapping[int, int]) -> CapacitorConfig:
        return cls(tuple(sorted((int(b), int(n)) for b, n in ncap.items())))

    @classmethod
    def all_off(cls, network: Network) -> CapacitorConfig:
        return cls(tuple((b, 0) for b in network.capacitor_buses))

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(n for _, n in self.items)

    def as_dict(self) -> dict[int, int]:
        return dict(self.items)

    def __getitem__(self, bus_id: int) -> int:
        return self.as_dict()[bus_id]

    def __str__(self) -> str:
        return ",".join(f"{b}={n}" for b, n in self.items)


def check_config(network: Network, config: CapacitorConfig) -> None:
    """Raise :class:`ConfigError` unless ``config`` is admissible for ``network``."""
    keys = [b for b, _ in config.items]
    if len(set(keys)) != len(keys):
        raise ConfigError(f"duplicate bus in capacitor config {config}")
    expected = set(network.capacitor_buses)
    if set(keys) != expected:
        raise ConfigError(
            f"capacitor config buses {sorted(keys)} do not match capacitor buses {sorted(expected)}"
        )
    for b, n in config.items:
        bank = network.bus(b).bank
        if not 0 <= n <= bank.n_max:
            raise ConfigError(f"bus {b}: capacitor count {n} outside 0..{bank.n_max}")


@dataclass(frozen=True, eq=False)
class PowerFlowState:
    """Voltage magnitudes [pu] and angles [rad] for every bus, in ``Network.bus_ids`` order."""

    v_pu: np.ndarray
    delta_rad: np.ndarray

    @classmethod
    def flat(cls, network: Network) -> PowerFlowState:
        n = network.n_buses
        v = np.ones(n)
        v[network.index[network.slack]] = network.slack_voltage_pu
        return cls(v, np.zeros(n))


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-8
    max_iterations: int = 50
    start: PowerFlowState | None = None
    line_search: bool = False

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True, eq=False)
class PowerFlowSolution:
    state: PowerFlowState
    p_consumed: np.ndarray
    q_consumed: np.ndarray
    q_cap: np.ndarray
    p_slack_pu: float
    q_slack_pu: float
    iterations: int
    max_residual: float
    converged: bool


@dataclass(frozen=True, eq=False)
class _Problem:
    """Arrays for one (network, hour, config) solve."""

    ybus: np.ndarray
    slack: int
    pq: np.ndarray
    p0: np.ndarray
    q0: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    bcap: np.ndarray
    v_slack: float = field(default=1.0)

    @classmethod
    def build(
        cls, network: Network, ybus: AdmittanceMatrix, loads: HourlyLoads, config: CapacitorConfig
    ) -> _Problem:
        n = network.n_buses
        if len(loads.p0) != n or len(loads.q0) != n:
            raise ValueError(f"loads cover {len(loads.p0)} buses, network has {n}")
        slack = network.index[network.slack]
        bcap = np.zeros(n)
        for bus_id, count in config.items:
            bank = network.bus(bus_id).bank
            if bank is None:
                raise ConfigError(f"bus {bus_id} has no capacitor bank")
            bcap[network.index[bus_id]] = bank.b_pu_base(network.frequency_hz, network.base) * count
        return cls(
            ybus=ybus.complex,
            slack=slack,
            pq=np.array([k for k in range(n) if k != slack], dtype=int),
            p0=np.asarray(loads.p0, dtype=float),
            q0=np.asarray(loads.q0, dtype=float),
            k1=network.exponents[0],
            k2=network.exponents[1],
            bcap=bcap,
            v_slack=network.slack_voltage_pu,
        )

    @cached_property
    def _branch_form(self) -> tuple[np.ndarray, np.ndarray]:
        # Off-diagonal part and nodal shunt (row sum). A row sum at round-off
        # level is taken as exactly zero, so a flat state carries no current.
        off = self.ybus.copy()
        np.fill_diagonal(off, 0)
        shunt = self.ybus.sum(axis=1)
        scale = np.abs(self.ybus).sum(axis=1)
        shunt[np.abs(shunt) <= 64 * np.finfo(float).eps * scale] = 0
        return off, shunt

    def injections(self, v: np.ndarray, delta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Complex voltage, current and computed power injection at every bus.

        The current is evaluated as sum_j Y_ij (V_j - V_i) plus the shunt
        term, which is algebraically Y @ V but avoids cancelling large terms
        when voltages are close together.
        """
        vc = v * np.exp(1j * delta)
        off, shunt = self._branch_form
        current = (off * (vc[None, :] - vc[:, None])).sum(axis=1) + shunt * vc
        return vc, current, vc * np.conj(current)

    def residual(self, v: np.ndarray, delta: np.ndarray) -> np.ndarray:
        _, _, s = self.injections(v, delta)
        pq = self.pq
        vp = v[pq]
        dp = -self.p0[pq] * vp ** self.k1[pq] - s.real[pq]
        dq = -self.q0[pq] * vp ** self.k2[pq] + self.bcap[pq] * vp**2 - s.imag[pq]
        return np.concatenate([dp, dq])

    def jacobian(self, v: np.ndarray, delta: np.ndarray) -> np.ndarray:
        vc, current, _ = self.injections(v, delta)
        y = self.ybus
        vnorm = vc / v
        ds_dang = 1j * vc[:, None] * np.conj(np.diag(current) - y * vc[None, :])
        ds_dmag = vc[:, None] * np.conj(y * vnorm[None, :]) + np.diag(np.conj(current) * vnorm)
        pq = self.pq
        ix = np.ix_(pq, pq)
        vp = v[pq]
        dload_p = self.k1[pq] * self.p0[pq] * vp ** (self.k1[pq] - 1)
        dload_q = self.k2[pq] * self.q0[pq] * vp ** (self.k2[pq] - 1)
        dcap = 2 * vp * self.bcap[pq]
        j11 = -ds_dang.real[ix]
        j12 = -ds_dmag.real[ix] - np.diag(dload_p)
        j21 = -ds_dang.imag[ix]
        j22 = -ds_dmag.imag[ix] + np.diag(dcap - dload_q)
        return np.block([[j11, j12], [j21, j22]])


def _state_vectors(state: PowerFlowState, network: Network) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(state.v_pu, dtype=float)
    d = np.asarray(state.delta_rad, dtype=float)
    if v.shape != (network.n_buses,) or d.shape != (network.n_buses,):
        raise ValueError(f"state must have {network.n_buses} entries per vector")
    return v, d


def mismatch(
    state: PowerFlowState,
    network: Network,
    ybus: AdmittanceMatrix,
    loads: HourlyLoads,
    config: CapacitorConfig,
) -> np.ndarray:
    """Specified minus computed injections at non-slack buses.

    Returns all active-power mismatches followed by all reactive-power
    mismatches, each in ascending bus-id order.
    """
    v, d = _state_vectors(state, network)
    return _Problem.build(network, ybus, loads, config).residual(v, d)


def jacobian(
    state: PowerFlowState,
    network: Network,
    ybus: AdmittanceMatrix,
    loads: HourlyLoads,
    config: CapacitorConfig,
) -> np.ndarray:
    """Analytic derivative of :func:`mismatch` w.r.t. ``(angles, magnitudes)`` of non-slack buses."""
    v, d = _state_vectors(state, network)
    return _Problem.build(network, ybus, loads, config).jacobian(v, d)


def solve_powerflow(
    network: Network,
    ybus: AdmittanceMatrix,
    loads: HourlyLoads,
    config: CapacitorConfig,
    options: SolverOptions | None = None,
) -> PowerFlowSolution:
    """Run Newton-Raphson to the requested mismatch tolerance.

    A run that exhausts ``max_iterations`` (or drives a voltage non-positive)
    returns a solution with ``converged=False`` and the last residual.

    Once the tolerance is met, one further Newton step is taken if the
    iteration budget allows and it lowers the residual. Near the solution
    that step is nearly free and pushes the residual to round-off, so the
    power-balance identity holds well inside the tolerance however many
    buses contribute to it.

    Raises:
        ConfigError: if ``config`` is not admissible.
        SolverError: if the Jacobian is singular.
    """
    options = options or SolverOptions()
    check_config(network, config)
    prob = _Problem.build(network, ybus, loads, config)
    start = options.start or PowerFlowState.flat(network)
    v, d = (a.copy() for a in _state_vectors(start, network))
    v[prob.slack] = prob.v_slack
    d[prob.slack] = 0.0
    pq = prob.pq
    m = len(pq)

    f = prob.residual(v, d)
    err = _max_abs(f)
    iterations = 0
    converged = err <= options.tolerance
    while not converged and iterations < options.max_iterations:
        iterations += 1
        try:
            step = np.linalg.solve(prob.jacobian(v, d), -f)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Jacobian: {exc}", iterations) from exc
        if not np.all(np.isfinite(step)):
            raise SolverError("non-finite Newton step", iterations)
        alpha = 1.0
        while True:
            d_new = d.copy()
            v_new = v.copy()
            d_new[pq] += alpha * step[:m]
            v_new[pq] += alpha * step[m:]
            if np.all(v_new > 0):
                f_new = prob.residual(v_new, d_new)
                err_new = _max_abs(f_new)
            else:
                err_new = math.inf
            if not options.line_search or err_new <= err or alpha < 1e-3:
                break
            alpha /= 2
        if not math.isfinite(err_new):
            return _finish(prob, v, d, f, iterations, err, False)
        v, d, f, err = v_new, d_new, f_new, err_new
        converged = err <= options.tolerance
    if converged and err > 0 and iterations < options.max_iterations:
        try:
            step = np.linalg.solve(prob.jacobian(v, d), -f)
        except np.linalg.LinAlgError:
            step = None
        if step is not None and np.all(np.isfinite(step)):
            d_new, v_new = d.copy(), v.copy()
            d_new[pq] += step[:m]
            v_new[pq] += step[m:]
            if np.all(v_new > 0):
                f_new = prob.residual(v_new, d_new)
                err_new = _max_abs(f_new)
                if err_new <= err:
                    iterations += 1
                    v, d, f, err = v_new, d_new, f_new, err_new
    return _finish(prob, v, d, f, iterations, err, converged)


def _max_abs(f: np.ndarray) -> float:
    return float(np.max(np.abs(f))) if f.size else 0.0


def _finish(
    prob: _Problem,
    v: np.ndarray,
    d: np.ndarray,
    f: np.ndarray,
    iterations: int,
    err: float,
    converged: bool,
) -> PowerFlowSolution:
    _, _, s = prob.injections(v, d)
    with np.errstate(invalid="ignore"):
        p = prob.p0 * v**prob.k1
        q = prob.q0 * v**prob.k2
    p[prob.slack] = 0.0
    q[prob.slack] = 0.0
    q_cap = prob.bcap * v**2
    for arr in (v, d, p, q, q_cap):
        arr.setflags(write=False)
    return PowerFlowSolution(
        state=PowerFlowState(v, d),
        p_consumed=p,
        q_consumed=q,
        q_cap=q_cap,
        p_slack_pu=float(s.real[prob.slack]),
        q_slack_pu=float(s.imag[prob.slack]),
        iterations=iterations,
        max_residual=err,
        converged=converged,
    )


def losses(solution: PowerFlowSolution, network: Network, ybus: AdmittanceMatrix | None = None) -> float:
    """Active series losses [pu] summed over all lines."""
    if not solution.converged:
        raise ContractError("losses are only defined for a converged solution")
    v = solution.state.v_pu * np.exp(1j * solution.state.delta_rad)
    idx = network.index
    total = 0.0
    for line in network.lines:
        z = line_to_pu(line, network.base)
        current = (v[idx[line.from_bus]] - v[idx[line.to_bus]]) / z
        total += abs(current) ** 2 * z.real
    return total
