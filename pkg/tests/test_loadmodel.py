from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capdispatch.loadmodel import (
    CONSTANT_IMPEDANCE,
    CONSTANT_POWER,
    PRESETS,
    Bus,
    ConsumerClass,
    LoadModelParams,
    load_power,
    load_power_derivative,
    params_for_class,
    scale_to_hour,
)

INDUSTRIAL = params_for_class(ConsumerClass.INDUSTRIAL)


@pytest.mark.parametrize(
    "cls, k1, k2",
    [
        (ConsumerClass.INDUSTRIAL, 0.18, 6),
        (ConsumerClass.RESIDENTIAL, 0.92, 4.04),
        (ConsumerClass.COMMERCIAL, 1.51, 3.04),
    ],
)
def test_class_exponents(cls, k1, k2):
    assert params_for_class(cls) == LoadModelParams(k1, k2)


def test_presets():
    assert PRESETS["constant-power"] == LoadModelParams(0, 0)
    assert PRESETS["constant-current"] == LoadModelParams(1, 1)
    assert PRESETS["constant-impedance"] == LoadModelParams(2, 2)
    assert PRESETS["exponential"] == LoadModelParams(1.38, 3.22)


def test_custom_needs_exponents():
    with pytest.raises(ValueError, match="Custom"):
        params_for_class("Custom")
    assert params_for_class("Custom", LoadModelParams(0.5, 1.5)) == LoadModelParams(0.5, 1.5)


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        LoadModelParams(-0.1, 1)


def test_scale_to_hour(dataset):
    net, profile = dataset.network, dataset.profile
    p, _ = scale_to_hour(net.bus(2), profile, 1)
    assert p == pytest.approx(0.0356, rel=1e-15)
    _, q = scale_to_hour(net.bus(6), profile, 3)
    assert q == pytest.approx(0.01032, rel=1e-15)
    bus7 = net.bus(7)
    assert scale_to_hour(bus7, profile, 21) == (bus7.p0_peak, bus7.q0_peak)


@pytest.mark.parametrize("t", [0, 25, -1])
def test_scale_to_hour_range(dataset, t):
    with pytest.raises(IndexError):
        scale_to_hour(dataset.network.bus(2), dataset.profile, t)


def test_load_power_examples():
    for params in PRESETS.values():
        assert load_power(0.1, 0.05, 1.0, params) == (0.1, 0.05)
    assert load_power(0.1, 0.05, 0.95, CONSTANT_POWER) == (0.1, 0.05)
    p, q = load_power(0.1, 0.05, 0.95, INDUSTRIAL)
    # 40-digit reference evaluation
    assert p == pytest.approx(0.099080969837156904981, rel=1e-15)
    assert q == pytest.approx(0.03675459453125, rel=1e-15)


def test_load_power_domain():
    with pytest.raises(ValueError):
        load_power(0.1, 0.1, 0.0, INDUSTRIAL)
    with pytest.raises(ValueError):
        load_power_derivative(0.1, 0.1, -1.0, INDUSTRIAL)


def test_derivative_examples():
    assert load_power_derivative(0.1, 0.05, 0.93, CONSTANT_POWER) == (0.0, 0.0)
    assert load_power_derivative(0.1, 0.05, 1.0, CONSTANT_IMPEDANCE)[0] == pytest.approx(0.2, rel=1e-15)
    h = 1e-6
    fd = (load_power(0.089, 0.0468, 0.97 + h, INDUSTRIAL)[0] - load_power(0.089, 0.0468, 0.97 - h, INDUSTRIAL)[0]) / (2 * h)
    assert load_power_derivative(0.089, 0.0468, 0.97, INDUSTRIAL)[0] == pytest.approx(fd, rel=1e-6)


exponent = st.floats(0, 6)


@given(p0=st.floats(0, 1), q0=st.floats(0, 1), k1=exponent, k2=exponent)
def test_identity_at_nominal(p0, q0, k1, k2):
    assert load_power(p0, q0, 1.0, LoadModelParams(k1, k2)) == (p0, q0)


@given(
    p0=st.floats(0.01, 1),
    q0=st.floats(0.01, 1),
    v=st.floats(0.85, 1.15),
    k1=exponent,
    k2=exponent,
)
def test_derivative_matches_central_difference(p0, q0, v, k1, k2):
    params = LoadModelParams(k1, k2)
    h = 1e-6
    hi = load_power(p0, q0, v + h, params)
    lo = load_power(p0, q0, v - h, params)
    dp, dq = load_power_derivative(p0, q0, v, params)
    assert dp == pytest.approx((hi[0] - lo[0]) / (2 * h), rel=1e-6, abs=1e-9)
    assert dq == pytest.approx((hi[1] - lo[1]) / (2 * h), rel=1e-6, abs=1e-9)


@given(p0=st.floats(1e-3, 1), k1=st.floats(0.01, 6))
def test_monotone_in_voltage(p0, k1):
    grid = np.linspace(0.01, 2.0, 200)
    p = [load_power(p0, 0.0, v, LoadModelParams(k1, 0))[0] for v in grid]
    assert np.all(np.diff(p) > 0)


@given(p0=st.one_of(st.just(0.0), st.floats(1e-12, 1)), v=st.floats(0.5, 1.5), k1=exponent)
def test_scaling_linearity(p0, v, k1):
    params = LoadModelParams(k1, 0)
    assert load_power(2 * p0, 0, v, params)[0] == 2 * load_power(p0, 0, v, params)[0]


def test_slack_bus_scales_to_zero(dataset):
    assert scale_to_hour(Bus(1), dataset.profile, 5) == (0.0, 0.0)
