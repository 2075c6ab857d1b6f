"""Turbine aerodynamics: Cp(lambda, beta) family and the captured-power curve.

Shows the single-peak power-coefficient surface, where the rated operating
point sits, and how the rated-power clamp stands in for pitch action above
rated wind.  Produces demos/output/02_turbine.png.
"""

import os

import numpy as np

from windfrt import turbine

OUT = os.path.join(os.path.dirname(__file__), "output")


def main():
    os.makedirs(OUT, exist_ok=True)
    p = turbine.TurbineParams()
    m = turbine.CpModel()

    lam_star, cp_star = turbine.cp_peak(m)
    print(f"Cp peak: lambda* = {lam_star:.2f}, Cp* = {cp_star:.3f} (Betz limit 0.593)")
    print(f"Blade length {p.blade_length} m -> swept area {p.swept_area:.0f} m^2")
    print(f"Captured at rated wind and Cp*: {turbine.mechanical_power(p, p.rated_wind, cp_star) / 1e6:.3f} MW")

    lams = np.linspace(0.5, 14.0, 300)
    betas = (0.0, 5.0, 10.0, 20.0)
    curves = {b: [turbine.power_coefficient(l, b, m) for l in lams] for b in betas}

    winds = np.linspace(0.5, 20.0, 120)
    omega_star = lam_star * p.rated_wind / p.blade_length  # hold the rated-tip-speed rotor speed
    drives = [turbine.turbine_drive(p, m, omega_star, v) for v in winds]
    powers = [d.power / 1e6 for d in drives]
    limited = [float(round(v, 1)) for v, d in zip(winds, drives) if d.power_limited]
    print(f"Power limited above rated wind: {limited[:3]} ... m/s")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; skipping the plot")
        return

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for b in betas:
        axes[0].plot(lams, curves[b], label=f"pitch {b:g} deg")
    axes[0].axvline(lam_star, color="k", ls=":", lw=0.8)
    axes[0].set_xlabel("tip-speed ratio")
    axes[0].set_ylabel("power coefficient")
    axes[0].legend()
    axes[1].plot(winds, powers)
    axes[1].axhline(p.rated_power / 1e6, color="k", ls=":", lw=0.8)
    axes[1].set_xlabel("wind speed [m/s]")
    axes[1].set_ylabel("captured power [MW]")
    fig.suptitle("Power coefficient family and the rated-power clamp")
    fig.tight_layout()
    path = os.path.join(OUT, "02_turbine.png")
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
