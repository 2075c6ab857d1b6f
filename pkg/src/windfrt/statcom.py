"""Averaged STATCOM model: RL output filter dynamics plus DC-link energy balance.

The converter is an ideal controllable voltage source behind the filter; the
48-pulse switching stage exists only to be harmonic-free, which the averaged
model is by construction.  The filter capacitor is not a state: the grid-side
voltage is taken directly as the PCC voltage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Max dq voltage magnitude per volt of DC under linear modulation,
# mapped through the power-invariant transform scaling.
K_M_DEFAULT = 0.5 * math.sqrt(1.5)


@dataclass(frozen=True)
class StatcomParams:
    l_f: float = 0.065          # H, filter inductance
    r_f: float = 0.8            # ohm, filter resistance
    c_dc: float = 150e-6        # F, DC-link capacitance
    v_dc_rated: float = 130e3   # V, regulated DC reference
    s_rated: float = 25e6       # VA
    v_nominal: float = 69e3     # V, AC-side nominal dq magnitude
    i_max: float = 435.0        # A, converter current ceiling (~1.2x rated)
    k_m: float = K_M_DEFAULT    # AC volts per DC volt at the modulation limit
    r_parallel: float = 3.4e5   # ohm, DC-side loss resistance (small loss)
    v_dc_min_frac: float = 0.5  # blocking threshold as a fraction of rated

    def __post_init__(self):
        if min(self.l_f, self.r_f, self.c_dc, self.v_dc_rated) <= 0:
            raise InvalidInputError("l_f, r_f, c_dc and v_dc_rated must be positive")
        if self.i_max * self.v_nominal < self.s_rated:
            raise InvalidInputError("i_max is inconsistent with s_rated at rated voltage")

    @property
    def rated_current(self) -> float:
        return self.s_rated / self.v_nominal

    @property
    def v_dc_min(self) -> float:
        return self.v_dc_min_frac * self.v_dc_rated


def filter_current_derivative(i_t, v_t, v, p: StatcomParams, omega: float) -> np.ndarray:
    """di_t/dt = (1/l_f) * (-(r_f*I - omega*l_f*J) i_t + v_t - v)."""
    di_d = (-p.r_f * i_t[0] + omega * p.l_f * i_t[1] + v_t[0] - v[0]) / p.l_f
    di_q = (-p.r_f * i_t[1] - omega * p.l_f * i_t[0] + v_t[1] - v[1]) / p.l_f
    return np.array([di_d, di_q])


def dc_link_derivative(v_dc: float, p_conv: float, p: StatcomParams) -> float:
    """Energy balance c*v*dv/dt = -p_conv - p_loss.

    p_conv is the AC-side power delivered by the converter (v_t . i_t);
    exporting real power discharges the link.
    """
    if v_dc <= 0:
        raise InvalidInputError("v_dc must be positive")
    p_loss = v_dc**2 / p.r_parallel
    return (-p_conv - p_loss) / (p.c_dc * v_dc)


def converter_voltage(cmd, v_dc: float, p: StatcomParams) -> tuple[np.ndarray, bool]:
    """Radially clip the commanded dq voltage to the modulation limit k_m*v_dc.

    Returns (v_t, saturated).  A blocked converter (v_dc at or below the
    undervoltage threshold) outputs zero.
    """
    if v_dc <= p.v_dc_min:
        return np.zeros(2), False
    limit = p.k_m * v_dc
    mag = math.hypot(cmd[0], cmd[1])
    if mag <= limit or mag == 0.0:
        return np.asarray(cmd, dtype=float).copy(), False
    scale = limit / mag
    return np.array([cmd[0] * scale, cmd[1] * scale]), True


def ac_power(v, i_t) -> tuple[float, float]:
    """(P, Q) delivered at the grid interface by the filter current.

    Power-invariant frame: P = v.i, Q = v_q*i_d - v_d*i_q.
    """
    p = float(v[0] * i_t[0] + v[1] * i_t[1])
    q = float(v[1] * i_t[0] - v[0] * i_t[1])
    return p, q
