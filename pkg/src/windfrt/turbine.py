"""Aerodynamic turbine model: wind speed and rotor speed to shaft torque."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, WindCutoffError

BETZ_LIMIT = 0.593


@dataclass(frozen=True)
class CpModel:
    """Exponential power-coefficient approximation.

    Cp = c1*(c2/li - c3*beta - c4)*exp(-c5/li) + c6*lambda
    with 1/li = 1/(lambda + 0.08*beta) - 0.035/(beta^3 + 1).
    """

    c1: float = 0.5176
    c2: float = 116.0
    c3: float = 0.4
    c4: float = 5.0
    c5: float = 21.0
    c6: float = 0.0068


@dataclass(frozen=True)
class TurbineParams:
    rho: float = 1.225           # air density, kg/m^3
    blade_length: float = 30.66  # m; sized so ~1.5 MW is captured at 12 m/s, Cp* = 0.48
    rated_power: float = 1.5e6   # W
    rated_wind: float = 12.0     # m/s
    beta: float = 0.0            # pitch angle, degrees
    v_min: float = 0.1           # m/s, cut-off guard
    omega_floor: float = 0.1     # rad/s, torque division guard

    def __post_init__(self):
        if self.rho <= 0 or self.blade_length <= 0 or self.rated_wind <= 0:
            raise InvalidInputError("rho, blade_length and rated_wind must be positive")

    @property
    def swept_area(self) -> float:
        return math.pi * self.blade_length**2


def tip_speed_ratio(omega_t: float, blade_length: float, v: float, v_min: float = 0.1) -> float:
    """lambda = omega_T * L / v.  Raises WindCutoffError for v <= v_min."""
    if not (np.isfinite(omega_t) and np.isfinite(v)):
        raise InvalidInputError("tip_speed_ratio inputs must be finite")
    if v <= v_min:
        raise WindCutoffError(f"wind speed {v} m/s at or below cut-off {v_min} m/s")
    if omega_t < 0:
        raise InvalidInputError("omega_t must be >= 0")
    return omega_t * blade_length / v


def power_coefficient(lam: float, beta: float, m: CpModel = CpModel()) -> float:
    """Cp(lambda, beta), clipped to [0, Betz limit]."""
    if not np.isfinite(lam) or lam <= 0:
        raise InvalidInputError(f"lambda must be positive and finite, got {lam}")
    inv_li = 1.0 / (lam + 0.08 * beta) - 0.035 / (beta**3 + 1.0)
    cp = m.c1 * (m.c2 * inv_li - m.c3 * beta - m.c4) * math.exp(-m.c5 * inv_li) + m.c6 * lam
    return float(min(max(cp, 0.0), BETZ_LIMIT))


def mechanical_power(p: TurbineParams, v: float, cp: float) -> float:
    """Captured power 0.5*rho*A*v^3*Cp."""
    if v < 0:
        raise InvalidInputError("wind speed must be >= 0")
    if not 0.0 <= cp <= BETZ_LIMIT:
        raise InvalidInputError(f"cp {cp} outside [0, {BETZ_LIMIT}]")
    return 0.5 * p.rho * p.swept_area * v**3 * cp


def mechanical_torque(p_m: float, omega_t: float, omega_floor: float = 0.1) -> tuple[float, bool]:
    """Torque P_m/omega_T.  Below omega_floor returns the floored startup
    torque P_m/omega_floor with the startup flag set."""
    if omega_t <= omega_floor:
        return p_m / omega_floor, True
    return p_m / omega_t, False


@dataclass(frozen=True)
class TurbineDrive:
    """One evaluation of the turbine drive train."""

    torque: float        # N*m at the turbine shaft, >= 0
    power: float         # W actually applied (after the rated-power clamp)
    cp: float
    tip_speed: float
    power_limited: bool  # rated-power clamp active (pitch-action stand-in)
    startup: bool        # omega below the torque floor
    cut_off: bool        # wind below cut-off, zero torque


def turbine_drive(p: TurbineParams, m: CpModel, omega_t: float, v: float) -> TurbineDrive:
    """Full wind-to-torque evaluation with the cut-off and power-limit rules."""
    try:
        lam = tip_speed_ratio(omega_t, p.blade_length, v, p.v_min)
    except WindCutoffError:
        return TurbineDrive(0.0, 0.0, 0.0, 0.0, False, False, True)
    if lam <= 0.0:
        return TurbineDrive(0.0, 0.0, 0.0, lam, False, False, False)
    cp = power_coefficient(lam, p.beta, m)
    power = mechanical_power(p, v, cp)
    limited = power > p.rated_power
    if limited:
        power = p.rated_power
    torque, startup = mechanical_torque(power, omega_t, p.omega_floor)
    return TurbineDrive(torque, power, cp, lam, limited, startup, False)


def cp_peak(m: CpModel = CpModel(), beta: float = 0.0, lam_max: float = 15.0, n: int = 15000) -> tuple[float, float]:
    """Brute-force scan for (lambda*, Cp*) over (0, lam_max]."""
    lams = np.linspace(lam_max / n, lam_max, n)
    cps = np.array([power_coefficient(l, beta, m) for l in lams])
    k = int(np.argmax(cps))
    return float(lams[k]), float(cps[k])
