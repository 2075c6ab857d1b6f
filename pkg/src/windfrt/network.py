"""Quasi-static phasor network reduced to the single PCC bus.

Everything algebraic lives here: the grid Thevenin source behind the series
line, the fault shunt, the constant-power load, and the nodal solve that
couples the dynamic device injections.  Complex numbers stand in for dq pairs
(1j corresponds to -J on dq vectors), so standard phasor impedance arithmetic
applies; `PccAdmittance.as_matrix()` exposes the equivalent 2x2 real block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, TopologyError


@dataclass(frozen=True)
class FaultSpec:
    t_start: float = 0.8
    t_end: float = 0.82
    kind: str = "three_phase_to_ground"

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise InvalidInputError("fault t_start must be before t_end")
        if self.kind != "three_phase_to_ground":
            raise InvalidInputError(f"unsupported fault kind '{self.kind}'")


def fault_state(t: float, f: FaultSpec) -> bool:
    """Active on the half-open window [t_start, t_end)."""
    return f.t_start <= t < f.t_end


@dataclass(frozen=True)
class NetworkParams:
    network_voltage: float = 69e3        # V, PCC base (dq magnitude = line-line RMS)
    grid_voltage: float | None = None    # Thevenin magnitude; None -> calibrated
    scr: float = 5.0                     # PCC short-circuit ratio, on the load MVA
    grid_x_over_r: float = 10.0
    grid_impedance: complex | None = None  # ohm; None -> derived from scr
    line_r_per_km: float = 0.12          # ohm/km
    line_x_per_km: float = -2.78         # ohm/km; published rating, capacitive sign kept as is
    line_length_km: float = 10.0
    transformer_ratio: float = 138.0     # network:machine voltage ratio
    transformer_leakage_pu: float = 0.06  # on the machine base
    transformer_r_pu: float = 0.006
    load_p: float = 80e6                 # W
    load_q: float = 10e6                 # var
    fault_resistance: float = 2.5        # ohm
    load_max_iter: int = 50
    load_tol: float = 1e-9
    load_damping: float = 0.7
    load_collapse_threshold: float = 0.3  # p.u.

    def __post_init__(self):
        if self.network_voltage <= 0 or self.fault_resistance <= 0:
            raise InvalidInputError("network_voltage and fault_resistance must be positive")
        if self.line_length_km < 0:
            raise InvalidInputError("line_length_km must be >= 0")

    @property
    def load_s(self) -> complex:
        return complex(self.load_p, self.load_q)

    @property
    def z_line(self) -> complex:
        return complex(self.line_r_per_km, self.line_x_per_km) * self.line_length_km

    @property
    def z_grid(self) -> complex:
        """Source impedance; derived so that grid + line reach the SCR target
        when not given explicitly.  The resistive part is floored at zero."""
        if self.grid_impedance is not None:
            return self.grid_impedance
        if self.load_s == 0:
            return 0.0 + 0.0j  # no load to scale against: stiff source behind the line
        s_sc = self.scr * abs(self.load_s)
        z_mag = self.network_voltage**2 / s_sc
        phi = math.atan(self.grid_x_over_r)
        z_target = z_mag * complex(math.cos(phi), math.sin(phi))
        z_g = z_target - self.z_line
        return complex(max(z_g.real, 0.0), z_g.imag)

    @property
    def z_thevenin(self) -> complex:
        return self.z_grid + self.z_line

    @property
    def base_current(self) -> float:
        return abs(self.load_s) / self.network_voltage

    @property
    def load_z_nominal(self) -> complex:
        """Constant-impedance equivalent of the load at nominal voltage."""
        return self.network_voltage**2 / self.load_s.conjugate()


@dataclass(frozen=True)
class PccAdmittance:
    """Nodal admittance of the reduced single-PCC network."""

    y_grid: complex
    y_fault: complex

    @property
    def y_total(self) -> complex:
        return self.y_grid + self.y_fault

    def as_matrix(self) -> np.ndarray:
        """The dq real-block form of y_total: [[G, -B], [B, G]]."""
        y = self.y_total
        return np.array([[y.real, -y.imag], [y.imag, y.real]])


def build_admittance(p: NetworkParams, fault_active: bool) -> PccAdmittance:
    z = p.z_thevenin
    if z == 0:
        raise TopologyError("grid branch impedance is zero; reduction is singular")
    y_fault = 1.0 / p.fault_resistance if fault_active else 0.0
    return PccAdmittance(y_grid=1.0 / z, y_fault=complex(y_fault, 0.0))


def constant_power_load_current(
    s_load: complex,
    v_pcc,
    v_collapse: float = 0.0,
    z_fallback: complex | None = None,
) -> tuple[complex, bool]:
    """Current drawing exactly s_load at v_pcc: i = conj(s/v).

    Below the collapse threshold the load degrades to the given constant
    impedance (flagged); with no fallback impedance this is an error.
    """
    v = complex(v_pcc[0], v_pcc[1]) if not isinstance(v_pcc, complex) else v_pcc
    if s_load == 0:
        return 0.0 + 0.0j, False
    if abs(v) <= v_collapse:
        if z_fallback is None:
            raise InvalidInputError(f"|v_pcc|={abs(v):.3g} at or below collapse threshold")
        return v / z_fallback, True
    return (s_load / v).conjugate(), False


@dataclass
class SolveInfo:
    iterations: int
    residual: float
    load_fallback: bool
    converged: bool


def _impedance_solve(y: PccAdmittance, i_fixed: complex, z_load: complex) -> complex:
    return i_fixed / (y.y_total + 1.0 / z_load)


def solve_pcc_voltage(
    y: PccAdmittance,
    device_currents,
    p: NetworkParams,
    e_source: complex,
    v_seed: complex | None = None,
    z_load_hint: complex | None = None,
) -> tuple[complex, SolveInfo]:
    """Nodal solve at the PCC with the grid Norton source, the device current
    injections, and the constant-power load.

    Damped fixed-point iteration on the load current; deep sags or
    non-convergence fall back to the constant-impedance load (flagged).
    """
    inj = 0.0 + 0.0j
    for c in device_currents:
        inj += c if isinstance(c, complex) else complex(c[0], c[1])
    i_fixed = e_source * y.y_grid + inj

    if p.load_s == 0:
        v = i_fixed / y.y_total
        return v, SolveInfo(0, 0.0, False, True)

    v_base = p.network_voltage
    z_fb = z_load_hint if z_load_hint is not None else p.load_z_nominal
    v_floor = p.load_collapse_threshold * v_base

    v = v_seed if v_seed is not None else complex(v_base, 0.0)
    if abs(v) < v_floor:
        v = complex(v_base, 0.0)
    converged = False
    fallback = False
    it = 0
    for it in range(1, p.load_max_iter + 1):
        if abs(v) < v_floor:
            fallback = True
            break
        i_load = (p.load_s / v).conjugate()
        v_new = (i_fixed - i_load) / y.y_total
        dv = v_new - v
        v = v + p.load_damping * dv
        if abs(dv) < p.load_tol * v_base:
            converged = True
            break
    if not converged:
        fallback = True

    if fallback:
        v = _impedance_solve(y, i_fixed, z_fb)
        i_load = v / z_fb
    else:
        i_load = (p.load_s / v).conjugate()

    residual = abs(y.y_total * v - (i_fixed - i_load))
    return v, SolveInfo(it, residual / max(p.base_current, 1e-12), fallback, converged or fallback)


def grid_branch_power(v_pcc: complex, e_source: complex, p: NetworkParams) -> tuple[float, float, complex]:
    """(P, Q) delivered by the grid branch into the PCC, plus the branch current."""
    i = (e_source - v_pcc) / p.z_thevenin
    s = v_pcc * i.conjugate()
    return s.real, s.imag, i


def calibrate_source(
    p: NetworkParams,
    device_currents,
    target_pu: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 60,
) -> complex:
    """Thevenin magnitude that puts the (pre-fault) PCC at target_pu.

    Secant iteration on |E|; the device injections are held fixed.
    """
    y = build_admittance(p, fault_active=False)
    target = target_pu * p.network_voltage

    def pcc_mag(e_mag: float) -> float:
        v, _ = solve_pcc_voltage(y, device_currents, p, complex(e_mag, 0.0))
        return abs(v)

    e0, e1 = target, 1.05 * target
    f0, f1 = pcc_mag(e0) - target, pcc_mag(e1) - target
    for _ in range(max_iter):
        if abs(f1) < tol * p.network_voltage:
            break
        denom = f1 - f0
        if denom == 0.0:
            break
        e2 = e1 - f1 * (e1 - e0) / denom
        e0, f0, e1 = e1, f1, e2
        f1 = pcc_mag(e1) - target
    _, info = solve_pcc_voltage(y, device_currents, p, complex(e1, 0.0))
    if abs(f1) > 1e-3 * p.network_voltage or info.load_fallback:
        raise TopologyError(
            f"source calibration failed: |v_pcc| error {f1:.3g} V, "
            f"load fallback {info.load_fallback}; the grid cannot hold the "
            "target voltage while serving the constant-power load"
        )
    return complex(e1, 0.0)
