"""Cascaded fault-ride-through control: SRF-PLL, DC-voltage and AC-voltage PI
loops, and inner dq current loops producing the converter voltage command.

Reference conventions (fixed by a dedicated sign test):
  * i_dref > 0 demands real-power import (charges the DC link),
  * i_qref > 0 demands capacitive injection (boosts the PCC voltage).
Filter current in the plant model is converter->grid positive, so the current
loop tracks i_t_ref = -(i_dref, i_qref).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import TWO_PI, wrap_angle
from .statcom import StatcomParams


@dataclass(frozen=True)
class PiGains:
    k_p: float
    k_i: float
    out_min: float
    out_max: float

    def __post_init__(self):
        if self.k_p < 0 or self.k_i < 0:
            raise ValueError("PI gains must be non-negative")
        if not self.out_min < self.out_max:
            raise ValueError("out_min must be below out_max")


class PiController:
    """PI with clamped output and conditional (anti-windup) integration.

    The integral stops accumulating while the output is saturated in the same
    direction as the error, so it never charges past the clamp.
    """

    def __init__(self, gains: PiGains):
        self.gains = gains
        self.integral = 0.0
        self.saturated = False

    def reset(self, integral: float = 0.0):
        self.integral = integral
        self.saturated = False

    def step(self, error: float, dt: float, out_min: float | None = None, out_max: float | None = None) -> float:
        g = self.gains
        lo = g.out_min if out_min is None else out_min
        hi = g.out_max if out_max is None else out_max
        candidate = self.integral + error * dt
        u = g.k_p * error + g.k_i * candidate
        if u > hi:
            if error < 0.0:
                self.integral = candidate
            self.saturated = True
            return hi
        if u < lo:
            if error > 0.0:
                self.integral = candidate
            self.saturated = True
            return lo
        self.integral = candidate
        self.saturated = False
        return u


@dataclass(frozen=True)
class PllParams:
    omega_nominal: float = TWO_PI * 50.0
    k_p: float = 188.5      # on the normalized q-axis error, ~15 Hz loop
    k_i: float = 8883.0
    v_threshold: float = 0.25  # p.u.; below this the loop coasts
    v_base: float = 69e3
    omega_min_frac: float = 0.5
    omega_max_frac: float = 1.5


class Pll:
    """Synchronous-reference-frame PLL driving the q-axis voltage to zero.

    During deep sags (|v| under the threshold) the loop coasts: the frequency
    estimate is held and the angle keeps advancing, so the frame flywheels
    through the fault.
    """

    def __init__(self, params: PllParams, theta: float = 0.0, omega: float | None = None):
        self.params = params
        self.theta = wrap_angle(theta)
        self.omega_hat = params.omega_nominal if omega is None else omega
        self.integral = 0.0
        self.coasting = False

    def step(self, v_dq, dt: float) -> None:
        p = self.params
        vmag = math.hypot(v_dq[0], v_dq[1])
        if vmag < p.v_threshold * p.v_base:
            self.coasting = True
        else:
            self.coasting = False
            err = v_dq[1] / vmag
            self.integral += p.k_i * err * dt
            omega = p.omega_nominal + p.k_p * err + self.integral
            lo = p.omega_min_frac * p.omega_nominal
            hi = p.omega_max_frac * p.omega_nominal
            self.omega_hat = min(max(omega, lo), hi)
        self.theta = wrap_angle(self.theta + self.omega_hat * dt)


@dataclass(frozen=True)
class ControlGains:
    pll: PllParams
    dc_loop: PiGains
    ac_loop: PiGains
    current_d: PiGains
    current_q: PiGains
    v_meas_cutoff_hz: float = 100.0
    q_overvoltage_headroom: float = 1.15  # var limit assumes up to 15% overvoltage


def loop_shaped_gains(
    sp: StatcomParams,
    x_thevenin: float,
    omega_nominal: float = TWO_PI * 50.0,
    current_bw_hz: float = 500.0,
    dc_bw_hz: float = 25.0,
    ac_bw_hz: float = 25.0,
) -> ControlGains:
    """Derive default gains by loop shaping; outer loops a decade below the
    500 Hz inner current loop."""
    w_i = TWO_PI * current_bw_hz
    v_lim = 1.2 * sp.k_m * sp.v_dc_rated
    current = PiGains(k_p=sp.l_f * w_i, k_i=sp.r_f * w_i, out_min=-v_lim, out_max=v_lim)

    w_dc = TWO_PI * dc_bw_hz
    kp_dc = w_dc * sp.c_dc * sp.v_dc_rated / sp.v_nominal
    dc = PiGains(k_p=kp_dc, k_i=kp_dc * w_dc / 4.0, out_min=-sp.i_max, out_max=sp.i_max)

    # The bus answers a q-axis amp with roughly x_thevenin volts, instantly.
    gain_v = x_thevenin / sp.v_nominal  # p.u. volts per amp
    w_ac = TWO_PI * ac_bw_hz
    q_cap = sp.s_rated / (1.15 * sp.v_nominal)
    ac = PiGains(k_p=0.5 / gain_v, k_i=w_ac / gain_v, out_min=-q_cap, out_max=q_cap)

    return ControlGains(
        pll=PllParams(omega_nominal=omega_nominal, v_base=sp.v_nominal),
        dc_loop=dc,
        ac_loop=ac,
        current_d=current,
        current_q=current,
    )


@dataclass
class ControlReferences:
    v_dcref: float
    v_ref: float = 1.0  # p.u. PCC voltage magnitude target


@dataclass(frozen=True)
class ControlOutput:
    v_dqref: np.ndarray       # converter voltage command before modulation clipping
    i_dref: float             # control convention (import positive)
    i_qref: float             # control convention (capacitive positive)
    omega: float
    theta: float
    pll_coasting: bool
    dc_saturated: bool
    ac_saturated: bool
    current_saturated: bool
    v_g_filtered: float       # p.u. magnitude seen by the AC loop


class FrtControl:
    """One controller instance per scenario run; step() is deterministic given
    (state, measurements, dt)."""

    def __init__(self, gains: ControlGains, refs: ControlReferences, sp: StatcomParams):
        self.gains = gains
        self.refs = refs
        self.sp = sp
        self.pll = Pll(gains.pll)
        self.dc_pi = PiController(gains.dc_loop)
        self.ac_pi = PiController(gains.ac_loop)
        self.id_pi = PiController(gains.current_d)
        self.iq_pi = PiController(gains.current_q)
        self.v_g = 1.0  # p.u., low-pass filtered magnitude

    @property
    def q_current_cap(self) -> float:
        """Reactive current ceiling keeping Q within rating at overvoltage."""
        sp = self.sp
        return min(sp.i_max, sp.s_rated / (self.gains.q_overvoltage_headroom * sp.v_nominal))

    def prelock(self, theta: float, v_g_pu: float, i_q_steady: float = 0.0):
        """Initialize at a settled operating point (warm start)."""
        self.pll.theta = wrap_angle(theta)
        self.v_g = v_g_pu
        if self.gains.ac_loop.k_i > 0.0:
            self.ac_pi.reset(i_q_steady / self.gains.ac_loop.k_i)

    def step(self, v_pcc_dq, v_dc: float, i_t, dt: float) -> ControlOutput:
        g, sp = self.gains, self.sp
        self.pll.step(v_pcc_dq, dt)
        omega = self.pll.omega_hat

        vmag_pu = math.hypot(v_pcc_dq[0], v_pcc_dq[1]) / sp.v_nominal
        alpha = 1.0 - math.exp(-TWO_PI * g.v_meas_cutoff_hz * dt)
        self.v_g += alpha * (vmag_pu - self.v_g)

        # Outer loops.  Reactive support has priority: the q reference takes
        # what it needs (within its var-safe cap) and the d reference keeps
        # whatever current headroom remains.
        q_cap = self.q_current_cap
        i_qref = self.ac_pi.step(self.refs.v_ref - self.v_g, dt, out_min=-q_cap, out_max=q_cap)
        headroom = math.sqrt(max(sp.i_max**2 - i_qref**2, 0.0))
        i_dref = self.dc_pi.step(self.refs.v_dcref - v_dc, dt, out_min=-headroom, out_max=headroom)

        # Inner loops track the filter current (converter->grid positive).
        ref_d, ref_q = -i_dref, -i_qref
        u_d = self.id_pi.step(ref_d - i_t[0], dt)
        u_q = self.iq_pi.step(ref_q - i_t[1], dt)
        # Decoupling feed-forward cancels the +omega*l_f*J*i_t plant term.
        v_dqref = np.array(
            [
                u_d + v_pcc_dq[0] - omega * sp.l_f * i_t[1],
                u_q + v_pcc_dq[1] + omega * sp.l_f * i_t[0],
            ]
        )
        return ControlOutput(
            v_dqref=v_dqref,
            i_dref=i_dref,
            i_qref=i_qref,
            omega=omega,
            theta=self.pll.theta,
            pll_coasting=self.pll.coasting,
            dc_saturated=self.dc_pi.saturated,
            ac_saturated=self.ac_pi.saturated,
            current_saturated=self.id_pi.saturated or self.iq_pi.saturated,
            v_g_filtered=self.v_g,
        )
