"""Cascaded control in isolation: current-loop step, DC-loop step, PLL behavior.

Small closed-loop simulations of each loop against its plant, the way the
gains were shaped: 500 Hz inner current loop, outer loops a decade slower,
PLL that locks in a few cycles and flywheels through a dead bus.
Produces demos/output/04_control.png.
"""

import math
import os

import numpy as np

from windfrt.control import PiController, Pll, PllParams, loop_shaped_gains
from windfrt.statcom import StatcomParams, converter_voltage, filter_current_derivative

OUT = os.path.join(os.path.dirname(__file__), "output")
OMEGA = 2 * math.pi * 50


def current_loop_step(sp, gains):
    pid, piq = PiController(gains.current_d), PiController(gains.current_q)
    v_pcc = np.array([sp.v_nominal, 0.0])
    i_t = np.zeros(2)
    dt = 1e-5
    t, hist = [], []
    for k in range(int(0.01 / dt)):
        ref = (100.0, 0.0)
        u_d = pid.step(ref[0] - i_t[0], dt)
        u_q = piq.step(ref[1] - i_t[1], dt)
        cmd = np.array([u_d + v_pcc[0] - OMEGA * sp.l_f * i_t[1],
                        u_q + v_pcc[1] + OMEGA * sp.l_f * i_t[0]])
        v_t, _ = converter_voltage(cmd, sp.v_dc_rated, sp)

        def f(x):
            return filter_current_derivative(x, v_t, v_pcc, sp, OMEGA)

        k1, k2 = f(i_t), f(i_t + 0.5 * dt * f(i_t))
        k3 = f(i_t + 0.5 * dt * k2)
        k4 = f(i_t + dt * k3)
        i_t = i_t + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t.append((k + 1) * dt)
        hist.append(i_t.copy())
    return np.array(t), np.array(hist)


def dc_loop_step(sp, gains):
    pi = PiController(gains.dc_loop)
    v_dc = sp.v_dc_rated
    ref = 1.05 * sp.v_dc_rated
    dt = 1e-4
    t, hist = [], []
    for k in range(int(0.25 / dt)):
        i_dref = pi.step(ref - v_dc, dt)
        p_conv = -sp.v_nominal * i_dref
        v_dc += dt * (-p_conv - v_dc**2 / sp.r_parallel) / (sp.c_dc * v_dc)
        t.append((k + 1) * dt)
        hist.append(v_dc)
    return np.array(t), np.array(hist), ref


def pll_transient():
    p = PllParams(v_base=69e3)
    pll = Pll(p, theta=0.0)
    dt = 1e-4
    theta_g = 0.3  # start 0.3 rad out of phase
    t, err, coast = [], [], []
    for k in range(int(0.6 / dt)):
        tt = k * dt
        mag = 0.0 if 0.3 <= tt < 0.4 else 69e3  # 100 ms dead bus
        d = theta_g - pll.theta
        pll.step((mag * math.cos(d), mag * math.sin(d)), dt)
        theta_g = (theta_g + OMEGA * dt) % (2 * math.pi)
        t.append(tt)
        err.append((theta_g - pll.theta + math.pi) % (2 * math.pi) - math.pi)
        coast.append(pll.coasting)
    return np.array(t), np.array(err), np.array(coast)


def main():
    os.makedirs(OUT, exist_ok=True)
    sp = StatcomParams()
    gains = loop_shaped_gains(sp, x_thevenin=11.75)
    print(f"STATCOM: {sp.s_rated/1e6:.0f} MVAr at {sp.v_nominal/1e3:.0f} kV, "
          f"filter {sp.l_f*1e3:.0f} mH / {sp.r_f} ohm, dc link {sp.v_dc_rated/1e3:.0f} kV")
    print(f"current loop kp={gains.current_d.k_p:.1f} V/A, dc loop kp={gains.dc_loop.k_p:.3f} A/V")

    t_i, i_hist = current_loop_step(sp, gains)
    k = np.argmin(np.abs(t_i - 0.005))
    print(f"\ncurrent loop: 100 A step reaches {i_hist[k,0]:.1f} A in 5 ms, "
          f"q-axis excursion {np.max(np.abs(i_hist[:,1])):.2f} A")

    t_v, v_hist, ref = dc_loop_step(sp, gains)
    k = np.argmin(np.abs(t_v - 0.2))
    print(f"dc loop: +5% reference step; at 200 ms the error is "
          f"{abs(v_hist[k]-ref)/ref*100:.3f}%")

    t_p, err, coast = pll_transient()
    print(f"pll: 0.3 rad initial error -> {abs(err[np.argmin(np.abs(t_p-0.2))]):.2e} rad at 0.2 s; "
          f"coasted {coast.sum()*1e-4*1000:.0f} ms through the dead bus, "
          f"re-locked to {abs(err[-1]):.2e} rad")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; skipping the plot")
        return

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    axes[0].plot(t_i * 1e3, i_hist[:, 0], label="d axis")
    axes[0].plot(t_i * 1e3, i_hist[:, 1], label="q axis")
    axes[0].set_xlabel("time [ms]")
    axes[0].set_ylabel("filter current [A]")
    axes[0].legend()
    axes[1].plot(t_v, v_hist / 1e3)
    axes[1].axhline(ref / 1e3, color="k", ls=":", lw=0.8)
    axes[1].set_xlabel("time [s]")
    axes[1].set_ylabel("dc-link voltage [kV]")
    axes[2].plot(t_p, err)
    axes[2].fill_between(t_p, -0.35, 0.35, where=coast, alpha=0.2, label="coasting")
    axes[2].set_xlabel("time [s]")
    axes[2].set_ylabel("phase error [rad]")
    axes[2].legend()
    fig.suptitle("Current loop, DC-voltage loop, and PLL transients")
    fig.tight_layout()
    path = os.path.join(OUT, "04_control.png")
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
