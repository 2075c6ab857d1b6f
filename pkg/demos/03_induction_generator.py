"""Induction generator: torque-slip curve, dynamic model vs analytic oracle.

The dq flux model, held at a series of slips, settles exactly onto the
classical Thevenin torque-slip curve.  Also shows the free flux decay and the
published parameter set's very low pullout torque (the 500 V / 0.041 H
ratings cap the machine near 26 kW).  Produces demos/output/03_generator.png.
"""

import os

import numpy as np

from windfrt import scig as gen
from windfrt.sim import rk4_step

OUT = os.path.join(os.path.dirname(__file__), "output")


def settled_torque(p, slip, v_mag=500.0, steps=200, dt=1e-3):
    w = p.base_freq
    state = np.concatenate([gen.steady_state_fluxes(p, (v_mag, 0.0), slip, w), [(1 - slip) * w]])

    def deriv(t, s):
        d = np.zeros(5)
        d[:4] = gen.flux_derivative(s[:4], (1 - slip) * w, (v_mag, 0.0), w, p)
        return d

    for _ in range(steps):
        state = rk4_step(deriv, state, 0.0, dt)
    return gen.shaft_torque(gen.currents_from_fluxes(state[:4], p), p)


def main():
    os.makedirs(OUT, exist_ok=True)
    p = gen.ScigParams()
    print(f"Machine: {p.rated_voltage:.0f} V, {p.rated_power/1e6:.1f} MW rating, "
          f"H = {p.inertia_constant} s -> J = {p.inertia:.0f} kg m^2")

    slips = np.linspace(-0.04, 0.04, 161)
    slips = slips[np.abs(slips) > 1e-4]
    analytic = np.array([gen.steady_state_torque_slip(p, 500.0, s) for s in slips])
    check_slips = (-0.03, -0.015, -0.005, 0.005, 0.02)
    dynamic = [settled_torque(p, s) for s in check_slips]
    print("\nslip      analytic [Nm]   settled dynamic [Nm]")
    for s, td in zip(check_slips, dynamic):
        ta = gen.steady_state_torque_slip(p, 500.0, s)
        print(f"{s:+.3f}    {ta:12.3f}    {td:12.3f}")

    k = int(np.argmin(analytic))
    print(f"\nGenerating pullout: {analytic[k]:.1f} Nm at slip {slips[k]:+.4f} "
          f"(~{abs(analytic[k]) * p.omega_sync_mech / 1e3:.0f} kW: far below the 1.5 MW rating;"
          " the published impedances limit the machine)")

    # free decay of trapped flux
    w = p.base_freq
    state = np.array([1.0, 0.4, -0.6, 0.8, 0.98 * w])

    def deriv(t, s):
        d = np.empty(5)
        d[:4] = gen.flux_derivative(s[:4], s[4], (0.0, 0.0), w, p)
        i = gen.currents_from_fluxes(s[:4], p)
        d[4] = gen.rotor_acceleration(gen.shaft_torque(i, p), 0.0, p)
        return d

    ts, norms = [], []
    dt = 1e-3
    for k in range(3000):
        state = rk4_step(deriv, state, k * dt, dt)
        ts.append((k + 1) * dt)
        norms.append(float(np.linalg.norm(state[:4])))
    print(f"Free decay: |flux| {norms[0]:.3f} -> {norms[-1]:.3f} Wb over {ts[-1]:.0f} s (monotone)")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; skipping the plot")
        return

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(slips, analytic, label="analytic curve")
    axes[0].plot(check_slips, dynamic, "o", label="settled dq model")
    axes[0].set_xlabel("slip")
    axes[0].set_ylabel("shaft torque [Nm]")
    axes[0].legend()
    axes[1].semilogy(ts, norms)
    axes[1].set_xlabel("time [s]")
    axes[1].set_ylabel("|flux| [Wb]")
    fig.suptitle("Torque-slip equivalence and free flux decay")
    fig.tight_layout()
    path = os.path.join(OUT, "03_generator.png")
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
