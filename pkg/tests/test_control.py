import math

import numpy as np
import pytest

from windfrt.control import (
    ControlGains,
    ControlReferences,
    FrtControl,
    PiController,
    PiGains,
    Pll,
    PllParams,
    loop_shaped_gains,
)
from windfrt.statcom import StatcomParams, converter_voltage, filter_current_derivative

OMEGA = 2 * math.pi * 50


def default_setup():
    sp = StatcomParams()
    gains = loop_shaped_gains(sp, x_thevenin=11.75)
    return sp, gains


# ---------------------------------------------------------------------------
# PI


def test_pi_zero_error_zero_integral():
    pi = PiController(PiGains(1.0, 1.0, -10.0, 10.0))
    assert pi.step(0.0, 1e-3) == 0.0


def test_pi_pure_proportional():
    pi = PiController(PiGains(2.0, 0.0, -10.0, 10.0))
    assert pi.step(1.5, 1e-3) == pytest.approx(3.0)


def test_pi_integral_ramp_and_clamp():
    # constant unit error for 1 s: ki=5 integrates to exactly 5.0
    pi = PiController(PiGains(0.0, 5.0, -100.0, 100.0))
    dt = 1e-3
    out = 0.0
    for _ in range(1000):
        out = pi.step(1.0, dt)
    assert out == pytest.approx(5.0, rel=1e-12)

    # with +-2 limits the output clamps and the integral stops growing
    pi = PiController(PiGains(0.0, 5.0, -2.0, 2.0))
    for _ in range(1000):
        out = pi.step(1.0, dt)
    assert out == 2.0
    assert pi.saturated
    frozen = pi.integral
    for _ in range(100):
        pi.step(1.0, dt)
    assert pi.integral == frozen
    assert pi.integral <= 2.0 / 5.0 + 1e-12


def test_pi_antiwindup_releases_on_sign_change():
    pi = PiController(PiGains(0.0, 5.0, -2.0, 2.0))
    for _ in range(1000):
        pi.step(1.0, 1e-3)
    frozen = pi.integral
    pi.step(-1.0, 1e-3)  # error away from the clamp integrates immediately
    assert pi.integral < frozen


def test_pi_output_always_within_limits():
    pi = PiController(PiGains(3.0, 50.0, -1.0, 1.0))
    rng = np.random.RandomState(0)
    for _ in range(2000):
        out = pi.step(rng.randn() * 5, 1e-3)
        assert -1.0 <= out <= 1.0


def test_pi_dynamic_limit_override():
    pi = PiController(PiGains(1.0, 0.0, -10.0, 10.0))
    assert pi.step(5.0, 1e-3, out_min=-2.0, out_max=2.0) == 2.0


# ---------------------------------------------------------------------------
# PLL


def run_pll(pll, theta0, v_mag, t_end, dt=1e-4, grid_omega=OMEGA, drop=None):
    """Feed a synthetic grid to the PLL; returns final phase error (rad)."""
    theta_g = theta0
    for k in range(int(round(t_end / dt))):
        t = k * dt
        mag = v_mag
        if drop and drop[0] <= t < drop[1]:
            mag = 0.0
        d = theta_g - pll.theta
        pll.step((mag * math.cos(d), mag * math.sin(d)), dt)
        theta_g = (theta_g + grid_omega * dt) % (2 * math.pi)
    return (theta_g - pll.theta + math.pi) % (2 * math.pi) - math.pi


def test_pll_locked_fixed_point():
    p = PllParams(v_base=69e3)
    pll = Pll(p, theta=1.0)
    w0 = pll.omega_hat
    pll.step((69e3, 0.0), 1e-4)  # already aligned
    assert pll.omega_hat == pytest.approx(w0)
    assert pll.theta == pytest.approx(1.0 + w0 * 1e-4, rel=1e-12)


def test_pll_locks_within_ten_cycles():
    p = PllParams(v_base=69e3)
    pll = Pll(p, theta=0.0)
    err = run_pll(pll, 0.3, 69e3, t_end=0.2)
    assert abs(err) < 0.01
    assert not pll.coasting
    # steady lock quality: |v_q| < 1e-3 |v| on a clean grid
    err = run_pll(pll, pll.theta, 69e3, t_end=0.2)
    assert abs(math.sin(err)) < 1e-3


def test_pll_coasts_through_zero_voltage():
    p = PllParams(v_base=69e3)
    pll = Pll(p, theta=0.0)
    run_pll(pll, 0.0, 69e3, t_end=0.2)  # lock first
    err = run_pll(pll, pll.theta, 69e3, t_end=0.3, drop=(0.05, 0.15))
    assert abs(err) < 0.05


def test_pll_flags_coast_state():
    p = PllParams(v_base=69e3)
    pll = Pll(p)
    pll.step((100.0, 0.0), 1e-4)  # far below threshold (0.25 pu of 69 kV)
    assert pll.coasting
    th = pll.theta
    pll.step((100.0, 0.0), 1e-4)
    assert pll.theta > th  # angle keeps advancing at the held frequency


def test_pll_frequency_clamp():
    p = PllParams(v_base=69e3, k_p=1e6)
    pll = Pll(p)
    pll.step((0.0, 69e3), 1e-4)  # huge q error
    assert pll.omega_hat <= 1.5 * p.omega_nominal


# ---------------------------------------------------------------------------
# cascaded stack


def test_sign_conventions():
    sp, gains = default_setup()
    ctl = FrtControl(gains, ControlReferences(v_dcref=sp.v_dc_rated, v_ref=1.0), sp)
    # sagged bus -> capacitive (positive) reactive reference
    ctl.v_g = 0.85
    out = ctl.step(np.array([0.85 * 69e3, 0.0]), sp.v_dc_rated, np.zeros(2), 1e-4)
    assert out.i_qref > 0.0
    # drained dc link -> import (positive) d reference
    ctl2 = FrtControl(gains, ControlReferences(v_dcref=sp.v_dc_rated, v_ref=1.0), sp)
    out2 = ctl2.step(np.array([69e3, 0.0]), 0.9 * sp.v_dc_rated, np.zeros(2), 1e-4)
    assert out2.i_dref > 0.0


def test_no_spontaneous_actuation():
    # zero errors, zero integrals, zero current: output is the feed-forward only
    sp, gains = default_setup()
    ctl = FrtControl(gains, ControlReferences(v_dcref=sp.v_dc_rated, v_ref=1.0), sp)
    ctl.v_g = 1.0
    v_pcc = np.array([69e3, 0.0])
    out = ctl.step(v_pcc, sp.v_dc_rated, np.zeros(2), 1e-9)
    assert np.allclose(out.v_dqref, v_pcc, rtol=1e-9)
    assert out.i_dref == pytest.approx(0.0, abs=1e-6)
    assert out.i_qref == pytest.approx(0.0, abs=1e-6)


def test_zero_error_outputs_pure_feedforward():
    sp, gains = default_setup()
    ctl = FrtControl(gains, ControlReferences(v_dcref=sp.v_dc_rated, v_ref=1.0), sp)
    ctl.v_g = 1.0
    i_t = np.array([5.0, -12.0])
    # references equal the measured current -> zero error in every loop
    # (control convention: i_qref = -i_tq, i_dref = -i_td)
    ctl.ac_pi.reset((-i_t[1]) / gains.ac_loop.k_i)
    ctl.dc_pi.reset((-i_t[0]) / gains.dc_loop.k_i)
    v_pcc = np.array([69e3, 0.0])
    out = ctl.step(v_pcc, sp.v_dc_rated, i_t, 1e-9)
    omega = out.omega
    expected = v_pcc + np.array([-omega * sp.l_f * i_t[1], omega * sp.l_f * i_t[0]])
    assert np.allclose(out.v_dqref, expected, rtol=1e-6)


def test_reactive_priority_curtails_d_axis():
    sp, gains = default_setup()
    ctl = FrtControl(gains, ControlReferences(v_dcref=sp.v_dc_rated, v_ref=1.0), sp)
    # deep sag demands full reactive injection; drained dc link wants import
    ctl.v_g = 0.2
    out = ctl.step(np.array([0.2 * 69e3, 0.0]), 0.8 * sp.v_dc_rated, np.zeros(2), 1e-3)
    q_cap = ctl.q_current_cap
    assert out.i_qref == pytest.approx(q_cap)
    headroom = math.sqrt(sp.i_max**2 - out.i_qref**2)
    assert abs(out.i_dref) <= headroom + 1e-9
    assert out.i_dref**2 + out.i_qref**2 <= sp.i_max**2 * (1 + 1e-12)


def test_reference_limit_holds_under_stress():
    sp, gains = default_setup()
    ctl = FrtControl(gains, ControlReferences(v_dcref=sp.v_dc_rated, v_ref=1.0), sp)
    rng = np.random.RandomState(4)
    for _ in range(500):
        v = rng.uniform(0.05, 1.3) * 69e3
        vdc = rng.uniform(0.6, 1.3) * sp.v_dc_rated
        i_t = rng.randn(2) * 300
        out = ctl.step(np.array([v, 0.0]), vdc, i_t, 1e-4)
        assert out.i_dref**2 + out.i_qref**2 <= sp.i_max**2 * (1 + 1e-9)


def test_var_safe_reactive_cap():
    sp, gains = default_setup()
    ctl = FrtControl(gains, ControlReferences(v_dcref=sp.v_dc_rated, v_ref=1.0), sp)
    # the q cap keeps |Q| <= s_rated even 10% above nominal voltage
    assert ctl.q_current_cap * 1.1 * sp.v_nominal <= sp.s_rated * (1 + 1e-12)


def test_current_loop_step_response_and_decoupling():
    sp, gains = default_setup()
    pid = PiController(gains.current_d)
    piq = PiController(gains.current_q)
    v_pcc = np.array([69e3, 0.0])
    i_t = np.zeros(2)
    dt = 1e-5
    i_ref = np.array([100.0, 0.0])
    worst_q = 0.0
    for k in range(int(0.012 / dt)):
        u_d = pid.step(i_ref[0] - i_t[0], dt)
        u_q = piq.step(i_ref[1] - i_t[1], dt)
        cmd = np.array(
            [u_d + v_pcc[0] - OMEGA * sp.l_f * i_t[1], u_q + v_pcc[1] + OMEGA * sp.l_f * i_t[0]]
        )
        v_t, _ = converter_voltage(cmd, sp.v_dc_rated, sp)

        def f(x):
            return filter_current_derivative(x, v_t, v_pcc, sp, OMEGA)

        k1 = f(i_t)
        k2 = f(i_t + 0.5 * dt * k1)
        k3 = f(i_t + 0.5 * dt * k2)
        k4 = f(i_t + dt * k3)
        i_t = i_t + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        worst_q = max(worst_q, abs(i_t[1]))
    assert abs(i_t[0] - 100.0) <= 2.0  # within 2% at 10+ ms
    assert worst_q < 5.0  # q-axis excursion under 5% of the step


def test_dc_voltage_loop_step_response():
    sp, gains = default_setup()
    pi = PiController(gains.dc_loop)
    v_dc = sp.v_dc_rated
    ref = 1.05 * sp.v_dc_rated
    dt = 1e-4
    for _ in range(int(0.2 / dt)):
        i_dref = pi.step(ref - v_dc, dt)
        p_conv = -sp.v_nominal * i_dref  # import charges the link
        v_dc += dt * (-p_conv - v_dc**2 / sp.r_parallel) / (sp.c_dc * v_dc)
    assert abs(v_dc - ref) / ref < 0.02
