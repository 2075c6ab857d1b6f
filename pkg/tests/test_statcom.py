import math

import numpy as np
import pytest

from windfrt import statcom as st
from windfrt.errors import InvalidInputError


def test_param_consistency():
    with pytest.raises(InvalidInputError):
        st.StatcomParams(i_max=100.0)  # cannot carry s_rated at rated voltage
    p = st.StatcomParams()
    assert p.rated_current == pytest.approx(25e6 / 69e3)
    assert p.k_m == pytest.approx(0.5 * math.sqrt(1.5), rel=1e-12)


def test_filter_idle_equilibrium():
    p = st.StatcomParams()
    d = st.filter_current_derivative((0.0, 0.0), (400.0, -30.0), (400.0, -30.0), p, 314.0)
    assert np.allclose(d, 0.0)


def test_filter_pure_rl_axis():
    p = st.StatcomParams()
    # omega=0, v_t - v = (l_f, 0), i_t = 0  ->  di/dt = (1, 0)
    d = st.filter_current_derivative((0.0, 0.0), (p.l_f, 0.0), (0.0, 0.0), p, 0.0)
    assert np.allclose(d, (1.0, 0.0), atol=1e-15)


def test_filter_cross_coupling_term():
    p = st.StatcomParams(r_f=1e-12)
    d = st.filter_current_derivative((1.0, 0.0), (5.0, 5.0), (5.0, 5.0), p, 314.0)
    # with v_t = v and r_f ~ 0 only omega*J*i_t survives
    assert d[0] == pytest.approx(0.0, abs=1e-9)
    assert d[1] == pytest.approx(-314.0, rel=1e-9)


def test_lossless_rotation_preserves_current_magnitude():
    p = st.StatcomParams(r_f=1e-15)
    omega = 2 * math.pi * 50
    v = (100.0, -40.0)
    i = np.array([30.0, 10.0])
    dt = 1e-4
    mag0 = np.hypot(*i)

    def f(x):
        return st.filter_current_derivative(x, v, v, p, omega)

    for _ in range(int(1.0 / dt)):
        k1 = f(i)
        k2 = f(i + 0.5 * dt * k1)
        k3 = f(i + 0.5 * dt * k2)
        k4 = f(i + dt * k3)
        i = i + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert np.hypot(*i) == pytest.approx(mag0, rel=1e-6)


def test_dc_link_balance():
    p = st.StatcomParams(c_dc=0.01, v_dc_rated=1000.0, v_nominal=1000.0, i_max=25e3,
                         s_rated=25e3, r_parallel=1e18)
    assert st.dc_link_derivative(1000.0, 0.0, p) == pytest.approx(0.0, abs=1e-9)
    # exporting real power discharges the link
    assert st.dc_link_derivative(1000.0, 5000.0, p) < 0.0
    # stated balance: (-p_conv - p_loss)/(c*v) = 5000/(0.01*1000) = 500 V/s
    assert st.dc_link_derivative(1000.0, -5000.0, p) == pytest.approx(500.0, rel=1e-9)
    with pytest.raises(InvalidInputError):
        st.dc_link_derivative(0.0, 0.0, p)


def test_converter_voltage_clipping():
    p = st.StatcomParams()
    v_dc = p.v_dc_rated
    small = (0.1 * p.k_m * v_dc, 0.0)
    out, sat = st.converter_voltage(small, v_dc, p)
    assert not sat and np.allclose(out, small)

    out, sat = st.converter_voltage((2.0 * p.k_m * v_dc, 0.0), v_dc, p)
    assert sat
    assert out[0] == pytest.approx(p.k_m * v_dc, rel=1e-12)
    assert out[1] == 0.0

    # radial clipping preserves the command direction
    cmd = (3.0 * p.k_m * v_dc, -4.0 * p.k_m * v_dc)
    out, sat = st.converter_voltage(cmd, v_dc, p)
    assert sat
    assert np.hypot(*out) == pytest.approx(p.k_m * v_dc, rel=1e-12)
    assert out[1] / out[0] == pytest.approx(cmd[1] / cmd[0], rel=1e-12)


def test_converter_blocked_below_undervoltage():
    p = st.StatcomParams()
    out, sat = st.converter_voltage((100.0, 0.0), 0.4 * p.v_dc_rated, p)
    assert not sat and np.allclose(out, 0.0)


def test_ac_power_signs():
    # capacitive injection (i_tq < 0 with v on the d axis) delivers positive Q
    pq = st.ac_power((100.0, 0.0), (0.0, -2.0))
    assert pq[0] == 0.0
    assert pq[1] == pytest.approx(200.0)


def test_power_accounting_over_window():
    # energy absorbed at the grid interface == filter copper + stored filter
    # energy + dc-link energy change + converter loss, over any window
    p = st.StatcomParams()
    omega = 2 * math.pi * 50
    v = (69e3, 0.0)
    v_t = np.array([69e3 * 1.01, -2000.0])  # constant converter voltage
    i = np.array([0.0, 0.0])
    v_dc = p.v_dc_rated
    dt = 1e-5
    e_absorbed = e_filter = e_rp = 0.0
    prev = None
    e0 = 0.5 * p.l_f * float(i @ i) + 0.5 * p.c_dc * v_dc**2
    for _ in range(int(0.2 / dt)):
        now = (
            -(v[0] * i[0] + v[1] * i[1]),  # absorbed from the grid interface
            p.r_f * float(i @ i),
            v_dc**2 / p.r_parallel,
        )
        if prev is not None:
            e_absorbed += 0.5 * (prev[0] + now[0]) * dt
            e_filter += 0.5 * (prev[1] + now[1]) * dt
            e_rp += 0.5 * (prev[2] + now[2]) * dt
        prev = now

        def f(state):
            di = st.filter_current_derivative(state[:2], v_t, v, p, omega)
            dv = st.dc_link_derivative(state[2], float(v_t[0] * state[0] + v_t[1] * state[1]), p)
            return np.array([di[0], di[1], dv])

        state = np.array([i[0], i[1], v_dc])
        k1 = f(state)
        k2 = f(state + 0.5 * dt * k1)
        k3 = f(state + 0.5 * dt * k2)
        k4 = f(state + dt * k3)
        state = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        i = state[:2]
        v_dc = state[2]
    d_store = 0.5 * p.l_f * float(i @ i) + 0.5 * p.c_dc * v_dc**2 - e0
    resid = e_absorbed - e_filter - e_rp - d_store
    scale = max(abs(e_absorbed), abs(d_store), abs(e_filter), 1.0)
    assert abs(resid) < 1e-3 * scale
