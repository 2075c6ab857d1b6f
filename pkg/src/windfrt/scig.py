"""Squirrel-cage induction generator in the synchronous dq frame.

State is the flux vector psi = (psi_ds, psi_qs, psi_dr, psi_qr) plus the
electrical rotor speed omega_r.  Rotor windings are shorted (zero rotor
voltage).  Currents follow from the block inductance matrix

    [psi_s]   [l_s  l_m] [i_s]
    [psi_r] = [l_m  l_r] [i_r]      (per axis)

Sign conventions: stator current is motor-positive (into the machine), so
generating operation has negative shaft torque and super-synchronous speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class ScigParams:
    r_s: float = 0.01        # ohm
    r_r: float = 0.01        # ohm
    l_s: float = 0.041       # H (total stator inductance incl. magnetizing)
    l_r: float = 0.041       # H
    l_m: float = 0.035       # H
    poles: int = 4
    rated_voltage: float = 500.0   # V, line-to-line RMS == dq magnitude
    rated_power: float = 1.5e6     # W
    power_factor: float = 0.85
    inertia_constant: float = 64.0  # s*W/VA (Table-1 H; unusually large, kept)
    base_freq: float = 2.0 * math.pi * 50.0  # rad/s electrical

    def __post_init__(self):
        if min(self.r_s, self.r_r, self.l_s, self.l_r, self.l_m) <= 0:
            raise InvalidInputError("machine resistances and inductances must be positive")
        if self.det_l <= 0:
            raise InvalidInputError("inductance matrix is singular: l_s*l_r - l_m^2 <= 0")
        if self.poles < 2 or self.poles % 2:
            raise InvalidInputError("poles must be even and >= 2")

    @property
    def det_l(self) -> float:
        return self.l_s * self.l_r - self.l_m**2

    @property
    def rated_va(self) -> float:
        return self.rated_power / self.power_factor

    @property
    def omega_sync_mech(self) -> float:
        return 2.0 * self.base_freq / self.poles

    @property
    def inertia(self) -> float:
        """J in kg*m^2 from the inertia constant: J = 2*H*S_base/omega_m_sync^2."""
        return 2.0 * self.inertia_constant * self.rated_va / self.omega_sync_mech**2

    @property
    def base_current(self) -> float:
        return self.rated_va / self.rated_voltage


def currents_from_fluxes(psi, p: ScigParams) -> np.ndarray:
    """Invert the block inductance matrix: i = L^-1 psi (per-axis 2x2 inverse)."""
    d = p.det_l
    psi = np.asarray(psi, dtype=float)
    i_ds = (p.l_r * psi[0] - p.l_m * psi[2]) / d
    i_qs = (p.l_r * psi[1] - p.l_m * psi[3]) / d
    i_dr = (p.l_s * psi[2] - p.l_m * psi[0]) / d
    i_qr = (p.l_s * psi[3] - p.l_m * psi[1]) / d
    return np.array([i_ds, i_qs, i_dr, i_qr])


def fluxes_from_currents(i, p: ScigParams) -> np.ndarray:
    i = np.asarray(i, dtype=float)
    return np.array(
        [
            p.l_s * i[0] + p.l_m * i[2],
            p.l_s * i[1] + p.l_m * i[3],
            p.l_m * i[0] + p.l_r * i[2],
            p.l_m * i[1] + p.l_r * i[3],
        ]
    )


def flux_derivative(psi, omega_r: float, v_dqs, omega: float, p: ScigParams) -> np.ndarray:
    """psi_dot = F(omega, omega_r) psi - N i + v with shorted rotor.

    Frame coupling acts within each winding: +/-omega on the stator fluxes and
    +/-(omega - omega_r) on the rotor fluxes.
    """
    i = currents_from_fluxes(psi, p)
    slip_w = omega - omega_r
    return np.array(
        [
            omega * psi[1] - p.r_s * i[0] + v_dqs[0],
            -omega * psi[0] - p.r_s * i[1] + v_dqs[1],
            slip_w * psi[3] - p.r_r * i[2],
            -slip_w * psi[2] - p.r_r * i[3],
        ]
    )


def electromagnetic_torque(i, p: ScigParams) -> float:
    """(3p/4) * l_m * (i_dqs^T J i_dqr) = (3p/4)*l_m*(i_ds*i_qr - i_qs*i_dr)."""
    return 0.75 * p.poles * p.l_m * (i[0] * i[3] - i[1] * i[2])


def shaft_torque(i, p: ScigParams) -> float:
    """Energy-consistent torque (p/2)*l_m*(i_qs*i_dr - i_ds*i_qr), motor-positive.

    This is the torque whose air-gap power T*(2/p)*omega_r closes the stator
    power balance of the flux model; see tests for the numeric proof.
    """
    return 0.5 * p.poles * p.l_m * (i[1] * i[2] - i[0] * i[3])


def rotor_acceleration(t_e: float, t_m: float, p: ScigParams) -> float:
    """Swing law d(omega_r)/dt = (p/J)*(T_e - T_m), omega_r electrical."""
    return p.poles * (t_e - t_m) / p.inertia


def kinetic_energy(omega_r: float, p: ScigParams) -> float:
    """Rotor kinetic energy consistent with the p/J swing law: (J/p^2)*omega_r^2."""
    return p.inertia * omega_r**2 / p.poles**2


def magnetic_energy(psi, p: ScigParams) -> float:
    """Stored field energy 0.5 * i^T psi."""
    i = currents_from_fluxes(psi, p)
    return 0.5 * float(np.dot(i, np.asarray(psi, dtype=float)))


def steady_state_phasor(p: ScigParams, v_s: complex, slip: float, omega: float) -> tuple[complex, complex]:
    """Solve the steady dq (phasor) equations for stator/rotor currents.

    0 = v_s - (r_s + j*omega*l_s) i_s - j*omega*l_m i_r
    0 =     - (r_r/s + j*omega*l_r) i_r - j*omega*l_m i_s      (slip != 0)
    """
    jw = 1j * omega
    z_s = p.r_s + jw * p.l_s
    z_m = jw * p.l_m
    if slip == 0.0:
        i_s = v_s / z_s
        return i_s, 0.0 + 0.0j
    z_r = p.r_r / slip + jw * p.l_r
    det = z_s * z_r - z_m * z_m
    i_s = v_s * z_r / det
    i_r = -v_s * z_m / det
    return i_s, i_r


def steady_state_fluxes(p: ScigParams, v_dqs, slip: float, omega: float) -> np.ndarray:
    """Flux vector of the steady operating point at the given slip."""
    v_s = complex(v_dqs[0], v_dqs[1])
    i_s, i_r = steady_state_phasor(p, v_s, slip, omega)
    i = np.array([i_s.real, i_s.imag, i_r.real, i_r.imag])
    return fluxes_from_currents(i, p)


def steady_state_torque_slip(p: ScigParams, v_mag: float, slip: float) -> float:
    """Classical torque-slip curve from the Thevenin-reduced equivalent circuit.

    Test oracle only; motor-positive, three-phase total torque.  v_mag is the
    dq voltage magnitude (= line-to-line RMS); per-phase V = v_mag/sqrt(3).
    """
    if abs(slip) >= 1:
        raise InvalidInputError("slip magnitude must be < 1")
    if slip == 0.0:
        return 0.0
    w = p.base_freq
    x_m = w * p.l_m
    x_ls = w * (p.l_s - p.l_m)
    x_lr = w * (p.l_r - p.l_m)
    v_ph = v_mag / math.sqrt(3.0)
    z_mag = 1j * x_m
    z_th = z_mag * (p.r_s + 1j * x_ls) / (p.r_s + 1j * (x_ls + x_m))
    v_th = v_ph * abs(z_mag / (p.r_s + 1j * (x_ls + x_m)))
    r_th, x_th = z_th.real, z_th.imag
    denom = (r_th + p.r_r / slip) ** 2 + (x_th + x_lr) ** 2
    return 3.0 * v_th**2 * (p.r_r / slip) / (p.omega_sync_mech * denom)


def stator_power(psi, v_dqs, p: ScigParams) -> float:
    """Instantaneous three-phase stator terminal power (motor-positive)."""
    i = currents_from_fluxes(psi, p)
    return float(v_dqs[0] * i[0] + v_dqs[1] * i[1])


def copper_loss(psi, p: ScigParams) -> float:
    i = currents_from_fluxes(psi, p)
    return p.r_s * (i[0] ** 2 + i[1] ** 2) + p.r_r * (i[2] ** 2 + i[3] ** 2)
