"""Fixed-step scenario integration, metrics, and the grid-code envelope check.

One run couples: the turbine/SCIG drive train and the STATCOM filter + DC link
(dynamic states, integrated with RK4 or Euler), the cascaded controller
(stepped discretely once per dt with the converter command held across the
step), and the algebraic network (re-solved inside every integration stage).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import network as net
from . import scig as gen
from . import statcom as st
from . import turbine as turb
from .control import ControlGains, ControlReferences, FrtControl, loop_shaped_gains
from .errors import DivergenceError, InvalidInputError
from .frames import wrap_angle
from .network import FaultSpec, NetworkParams, build_admittance, fault_state, grid_branch_power, solve_pcc_voltage

# ---------------------------------------------------------------------------
# configuration containers


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-4
    t_end: float = 2.0
    record_decimation: int = 5
    solver: str = "rk4"  # "rk4" | "euler"
    divergence_ceiling: float = 10.0  # p.u. on any recorded electrical quantity
    cold_start: bool = False
    verbose: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise InvalidInputError("dt and t_end must be positive")
        if self.record_decimation < 1:
            raise InvalidInputError("record_decimation must be >= 1")
        if self.solver not in ("rk4", "euler"):
            raise InvalidInputError(f"unknown solver '{self.solver}'")


@dataclass(frozen=True)
class WindSegment:
    t_start: float
    value: float  # m/s
    ramp: bool = False  # ramp linearly from the previous value across this segment


@dataclass(frozen=True)
class WindProfile:
    segments: tuple[WindSegment, ...]

    def __post_init__(self):
        if not self.segments:
            raise InvalidInputError("wind profile needs at least one segment")
        ts = [s.t_start for s in self.segments]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidInputError("wind segment times must be strictly increasing")
        if any(s.value < 0 for s in self.segments):
            raise InvalidInputError("wind speeds must be >= 0")

    def speed(self, t: float) -> float:
        segs = self.segments
        if t <= segs[0].t_start:
            return segs[0].value
        for k, s in enumerate(segs):
            t_next = segs[k + 1].t_start if k + 1 < len(segs) else math.inf
            if s.t_start <= t < t_next:
                if not s.ramp or k == 0 or not math.isfinite(t_next):
                    return s.value
                prev = segs[k - 1].value
                frac = (t - s.t_start) / (t_next - s.t_start)
                return prev + frac * (s.value - prev)
        return segs[-1].value


def paper_wind_profile() -> WindProfile:
    """3 m/s held to 0.5 s, linear ramp to 12 m/s by 1.0 s, constant after."""
    return WindProfile(
        (
            WindSegment(0.0, 3.0, False),
            WindSegment(0.5, 12.0, True),
            WindSegment(1.0, 12.0, False),
        )
    )


@dataclass(frozen=True)
class FrtEnvelope:
    """Piecewise lower bound on PCC voltage vs time since fault start.

    Region 2 ([0, region2_duration)) allows the sag floor; region 3 (through
    the recovery window) requires the recovery level.
    """

    floor: float = 0.15
    recovery_level: float = 0.8
    region2_duration: float = 0.15  # s after fault start
    recovery_window: float = 1.0    # s after fault start; end of the check

    def __post_init__(self):
        if not self.floor < self.recovery_level <= 1.0:
            raise InvalidInputError("envelope requires floor < recovery_level <= 1")

    def bound(self, t_since_fault: float) -> float:
        if t_since_fault < 0:
            return 0.0
        if t_since_fault < self.region2_duration:
            return self.floor
        return self.recovery_level


# ---------------------------------------------------------------------------
# integrators


def rk4_step(derivative, state: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta update of the composite state."""
    k1 = derivative(t, state)
    k2 = derivative(t + 0.5 * dt, state + 0.5 * dt * k1)
    k3 = derivative(t + 0.5 * dt, state + 0.5 * dt * k2)
    k4 = derivative(t + dt, state + dt * k3)
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(f"non-finite state after step at t={t:.6f}", t)
    return out


def euler_step(derivative, state: np.ndarray, t: float, dt: float) -> np.ndarray:
    out = state + dt * derivative(t, state)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(f"non-finite state after step at t={t:.6f}", t)
    return out


# ---------------------------------------------------------------------------
# scenario definition


@dataclass(frozen=True)
class Scenario:
    sim: SimConfig = SimConfig()
    wind: WindProfile = field(default_factory=paper_wind_profile)
    fault: FaultSpec = FaultSpec()
    envelope: FrtEnvelope = FrtEnvelope()
    turbine: turb.TurbineParams = field(default_factory=turb.TurbineParams)
    cp_model: turb.CpModel = turb.CpModel()
    scig: gen.ScigParams = field(default_factory=gen.ScigParams)
    statcom: st.StatcomParams = field(default_factory=st.StatcomParams)
    network: NetworkParams = field(default_factory=NetworkParams)
    gains: ControlGains | None = None
    gear_ratio: float | None = None
    v_ref: float = 1.0
    v_dcref: float | None = None
    v_unsupported_target: float = 1.01
    statcom_enabled: bool = True
    expect_unstable: bool = False
    name: str = "scenario"

    def __post_init__(self):
        if self.gains is None:
            object.__setattr__(
                self,
                "gains",
                loop_shaped_gains(
                    self.statcom,
                    x_thevenin=abs(self.network.z_thevenin.imag),
                    omega_nominal=self.scig.base_freq,
                ),
            )
        if self.gear_ratio is None:
            object.__setattr__(self, "gear_ratio", default_gear_ratio(self.turbine, self.cp_model, self.scig))

    @property
    def dcref(self) -> float:
        return self.statcom.v_dc_rated if self.v_dcref is None else self.v_dcref


def default_gear_ratio(tp: turb.TurbineParams, cp: turb.CpModel, sp: gen.ScigParams) -> float:
    """Map the Cp-optimal turbine speed at rated wind to synchronous speed."""
    lam_star, _ = turb.cp_peak(cp, tp.beta)
    omega_t_rated = lam_star * tp.rated_wind / tp.blade_length
    return sp.omega_sync_mech / omega_t_rated


# ---------------------------------------------------------------------------
# recorded output

BASE_COLUMNS: tuple[tuple[str, str], ...] = (
    ("time", "s"),
    ("pcc_v", "pu"),
    ("pcc_vd", "V"),
    ("pcc_vq", "V"),
    ("grid_id", "A"),
    ("grid_iq", "A"),
    ("grid_p", "W"),
    ("grid_q", "var"),
    ("wecs_v", "pu"),
    ("wecs_id", "A"),
    ("wecs_iq", "A"),
    ("wecs_p", "W"),
    ("statcom_id", "A"),
    ("statcom_iq", "A"),
    ("statcom_p", "W"),
    ("statcom_q", "var"),
    ("v_dc", "V"),
    ("omega_r", "rad/s"),
    ("torque_e", "Nm"),
    ("torque_m", "Nm"),
    ("wind", "m/s"),
    ("fault", "flag"),
    ("conv_sat", "flag"),
    ("pll_coast", "flag"),
    ("load_fallback", "flag"),
    ("pi_sat", "flag"),
)

VERBOSE_COLUMNS: tuple[tuple[str, str], ...] = (
    ("i_dref", "A"),
    ("i_qref", "A"),
    ("v_td", "V"),
    ("v_tq", "V"),
    ("omega_hat", "rad/s"),
    ("theta", "rad"),
    ("v_g_filt", "pu"),
)


@dataclass
class SimEvent:
    t: float
    kind: str
    detail: str = ""


@dataclass
class EnergyAudit:
    """Integrated power terms and storage deltas over the run (J)."""

    grid_in: float = 0.0
    turbine_in: float = 0.0
    load_out: float = 0.0
    fault_out: float = 0.0
    machine_copper: float = 0.0
    transformer_loss: float = 0.0
    filter_loss: float = 0.0
    dc_loss: float = 0.0
    d_magnetic: float = 0.0
    d_kinetic: float = 0.0
    d_filter: float = 0.0
    d_dc_link: float = 0.0

    def mismatch(self) -> float:
        return (
            self.grid_in
            + self.turbine_in
            - self.load_out
            - self.fault_out
            - self.machine_copper
            - self.transformer_loss
            - self.filter_loss
            - self.dc_loss
            - self.d_magnetic
            - self.d_kinetic
            - self.d_filter
            - self.d_dc_link
        )

    def throughput(self) -> float:
        return abs(self.grid_in) + abs(self.turbine_in) + abs(self.load_out) + abs(self.fault_out)

    def relative_mismatch(self) -> float:
        return abs(self.mismatch()) / max(self.throughput(), 1e-9)


class TimeSeries:
    """Uniformly sampled record of one scenario run."""

    def __init__(self, columns: tuple[tuple[str, str], ...], data: dict[str, np.ndarray]):
        self.columns = columns
        self.data = data
        self.events: list[SimEvent] = []
        self.energy: EnergyAudit = EnergyAudit()
        self.diverged: bool = False
        self.limit_violations: int = 0
        self.meta: dict = {}
        n = len(data[columns[0][0]])
        if any(len(data[name]) != n for name, _ in columns):
            raise InvalidInputError("TimeSeries columns must have equal length")

    def __len__(self) -> int:
        return len(self.data["time"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[name]

    @property
    def t(self) -> np.ndarray:
        return self.data["time"]

    def header(self) -> list[str]:
        return [f"{name}[{unit}]" for name, unit in self.columns]


# ---------------------------------------------------------------------------
# plant coupling


class _Plant:
    """Per-stage derivative evaluation and measurement helpers for one run."""

    def __init__(self, scn: Scenario, e_mag: float):
        self.scn = scn
        self.e_mag = e_mag
        p = scn.scig
        z_base_mach = p.rated_voltage**2 / p.rated_va
        self.z_xfmr = complex(
            scn.network.transformer_r_pu * z_base_mach,
            scn.network.transformer_leakage_pu * z_base_mach,
        )
        self.ratio = scn.network.transformer_ratio
        self.omega_grid = p.base_freq
        self.z_load_hint: complex | None = None
        self.last_v: complex | None = None
        self.load_fallback = False

    # state layout: [psi_ds, psi_qs, psi_dr, psi_qr, omega_r, i_td, i_tq, v_dc]

    def machine_injection(self, y: np.ndarray) -> tuple[complex, complex]:
        """(network-side PCC injection, machine-side stator current)."""
        i = gen.currents_from_fluxes(y[0:4], self.scn.scig)
        i_s = complex(i[0], i[1])
        return -i_s / self.ratio, i_s

    def statcom_injection(self, y: np.ndarray) -> complex:
        if not self.scn.statcom_enabled:
            return 0.0 + 0.0j
        return complex(y[5], y[6])

    def solve_network(self, y: np.ndarray, theta_err: float, fault_active: bool):
        """Algebraic PCC solve for the given device states and frame angle."""
        nw = self.scn.network
        y_adm = build_admittance(nw, fault_active)
        e_src = self.e_mag * complex(math.cos(theta_err), math.sin(theta_err))
        inj_m, i_s = self.machine_injection(y)
        inj_s = self.statcom_injection(y)
        v, info = solve_pcc_voltage(
            y_adm, [inj_m, inj_s], nw, e_src, v_seed=self.last_v, z_load_hint=self.z_load_hint
        )
        self.last_v = v
        if not info.load_fallback and abs(v) >= nw.load_collapse_threshold * nw.network_voltage:
            self.z_load_hint = abs(v) ** 2 / nw.load_s.conjugate()
        self.load_fallback = info.load_fallback
        return v, e_src, i_s, inj_m, inj_s

    def machine_terminal(self, v_pcc: complex, i_s: complex) -> complex:
        return v_pcc / self.ratio - self.z_xfmr * i_s

    def turbine_torque(self, omega_r: float, v_wind: float) -> tuple[float, turb.TurbineDrive]:
        """Generator-side mechanical torque in the swing convention (<= 0)."""
        scn = self.scn
        omega_m = 2.0 * omega_r / scn.scig.poles
        omega_t = omega_m / scn.gear_ratio
        drive = turb.turbine_drive(scn.turbine, scn.cp_model, omega_t, v_wind)
        return -drive.torque / scn.gear_ratio, drive

    def derivative(
        self,
        y: np.ndarray,
        t_stage: float,
        t0: float,
        theta0: float,
        omega_frame: float,
        v_t,
        v_wind: float,
        fault_active: bool,
    ) -> np.ndarray:
        scn = self.scn
        theta_frame = theta0 + omega_frame * (t_stage - t0)
        theta_err = self.omega_grid * t_stage - theta_frame
        v_pcc, _, i_s, _, _ = self.solve_network(y, theta_err, fault_active)

        v_mach = self.machine_terminal(v_pcc, i_s)
        dpsi = gen.flux_derivative(y[0:4], y[4], (v_mach.real, v_mach.imag), omega_frame, scn.scig)
        i = gen.currents_from_fluxes(y[0:4], scn.scig)
        t_e = gen.shaft_torque(i, scn.scig)
        t_m, _ = self.turbine_torque(y[4], v_wind)

        dy = np.empty(8)
        dy[0:4] = dpsi
        dy[4] = gen.rotor_acceleration(t_e, t_m, scn.scig)
        if scn.statcom_enabled and v_t is not None:
            i_t = y[5:7]
            v_dq = (v_pcc.real, v_pcc.imag)
            dy[5:7] = st.filter_current_derivative(i_t, v_t, v_dq, scn.statcom, omega_frame)
            p_conv = float(v_t[0] * i_t[0] + v_t[1] * i_t[1])
            dy[7] = st.dc_link_derivative(y[7], p_conv, scn.statcom) if y[7] > 0 else 0.0
        else:
            dy[5:8] = 0.0
        return dy


# ---------------------------------------------------------------------------
# initialization


def _initial_slip(scn: Scenario, v_mach_mag: float, v_wind: float) -> float:
    """Torque-balance slip on the stable branch at the given wind."""
    p = scn.scig

    def imbalance(slip: float) -> float:
        omega_r = (1.0 - slip) * p.base_freq
        i_s, i_r = gen.steady_state_phasor(p, complex(v_mach_mag, 0.0), slip, p.base_freq)
        i = (i_s.real, i_s.imag, i_r.real, i_r.imag)
        t_e = gen.shaft_torque(i, p)
        omega_m = 2.0 * omega_r / p.poles
        drive = turb.turbine_drive(scn.turbine, scn.cp_model, omega_m / scn.gear_ratio, v_wind)
        return t_e + drive.torque / scn.gear_ratio  # t_e - t_m, t_m = -drive/g

    grid = np.linspace(0.0, -0.0028, 240)
    vals = [imbalance(s) for s in grid]
    for k in range(1, len(grid)):
        if vals[k - 1] == 0.0:
            return float(grid[k - 1])
        if vals[k - 1] * vals[k] < 0:
            a, b, fa = grid[k - 1], grid[k], vals[k - 1]
            for _ in range(60):
                m = 0.5 * (a + b)
                fm = imbalance(m)
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
            return float(0.5 * (a + b))
    return float(grid[int(np.argmin(np.abs(vals)))])


@dataclass
class InitState:
    y: np.ndarray
    e_mag: float
    theta_pll: float
    i_q_ctl: float  # steady capacitive demand, control convention


def initialize(scn: Scenario) -> InitState:
    """Analytic warm start (or cold start when configured).

    The machine starts at its torque-balance steady state, the Thevenin source
    is calibrated so the unsupported bus sits at the configured level, and the
    STATCOM starts charged, preloaded to hold the voltage reference.
    """
    p = scn.scig
    nw = scn.network
    v_wind = scn.wind.speed(0.0)
    z_base_mach = p.rated_voltage**2 / p.rated_va
    z_xfmr = complex(nw.transformer_r_pu * z_base_mach, nw.transformer_leakage_pu * z_base_mach)

    if scn.sim.cold_start:
        e_mag = nw.grid_voltage
        if e_mag is None:
            e_mag = abs(net.calibrate_source(nw, [0.0 + 0.0j], scn.v_unsupported_target))
        y0 = np.zeros(8)
        y0[4] = p.base_freq
        y0[7] = scn.dcref
        return InitState(y=y0, e_mag=e_mag, theta_pll=0.0, i_q_ctl=0.0)

    y_adm = build_admittance(nw, False)
    e_mag = nw.grid_voltage if nw.grid_voltage is not None else nw.network_voltage
    inj_m = 0.0 + 0.0j
    i_s = 0.0 + 0.0j
    i_r = 0.0 + 0.0j
    i_q_ctl = 0.0
    slip = 0.0
    v_pcc = complex(nw.network_voltage, 0.0)

    for _ in range(14):
        if nw.grid_voltage is None:
            e_mag = abs(net.calibrate_source(nw, [inj_m], scn.v_unsupported_target))

        def statcom_inj(iq: float, v_ref_phase: complex) -> complex:
            return complex(0.0, -iq) * v_ref_phase

        phase = v_pcc / abs(v_pcc)
        if scn.statcom_enabled:
            target = scn.v_ref * nw.network_voltage

            def vmag(iq: float) -> float:
                v, _ = solve_pcc_voltage(y_adm, [inj_m, statcom_inj(iq, phase)], nw, complex(e_mag, 0.0))
                return abs(v)

            x0, x1 = i_q_ctl, i_q_ctl + 0.05 * scn.statcom.rated_current
            f0, f1 = vmag(x0) - target, vmag(x1) - target
            for _ in range(40):
                if abs(f1) < 1e-9 * nw.network_voltage or f1 == f0:
                    break
                x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
                x2 = min(max(x2, -scn.statcom.i_max), scn.statcom.i_max)
                x0, f0, x1 = x1, f1, x2
                f1 = vmag(x1) - target
            i_q_ctl = x1

        v_new, _ = solve_pcc_voltage(y_adm, [inj_m, statcom_inj(i_q_ctl, phase)], nw, complex(e_mag, 0.0))

        # machine operating point at the (supported) bus
        for _ in range(8):
            v_mach = v_new / nw.transformer_ratio - z_xfmr * i_s
            slip = _initial_slip(scn, abs(v_mach), v_wind)
            i_s, i_r = gen.steady_state_phasor(p, v_mach, slip, p.base_freq)
        inj_m = -i_s / nw.transformer_ratio

        if abs(v_new - v_pcc) < 1e-9 * nw.network_voltage:
            v_pcc = v_new
            break
        v_pcc = v_new

    # Rotate all phasors into the PLL frame where v_pcc is real-positive.
    phi = math.atan2(v_pcc.imag, v_pcc.real)
    rot = complex(math.cos(-phi), math.sin(-phi))
    psi = gen.fluxes_from_currents(
        ((i_s * rot).real, (i_s * rot).imag, (i_r * rot).real, (i_r * rot).imag), p
    )

    y0 = np.empty(8)
    y0[0:4] = psi
    y0[4] = (1.0 - slip) * p.base_freq
    y0[5] = 0.0
    y0[6] = -i_q_ctl if scn.statcom_enabled else 0.0
    y0[7] = scn.dcref
    return InitState(y=y0, e_mag=e_mag, theta_pll=wrap_angle(phi), i_q_ctl=i_q_ctl)


# ---------------------------------------------------------------------------
# the runner


def run_scenario(scn: Scenario) -> TimeSeries:
    """Integrate the full scenario and return the sampled record.

    Divergence (any recorded electrical quantity beyond the configured p.u.
    ceiling, or a non-finite state) truncates the series and records an event;
    a truncated series is a valid outcome for intentionally unstable cases.
    """
    cfg = scn.sim
    init = initialize(scn)
    plant = _Plant(scn, e_mag=init.e_mag)
    sp = scn.statcom

    control = FrtControl(scn.gains, ControlReferences(v_dcref=scn.dcref, v_ref=scn.v_ref), sp)
    if cfg.cold_start:
        control.pll.theta = 0.0
    else:
        control.prelock(init.theta_pll, scn.v_ref if scn.statcom_enabled else scn.v_unsupported_target,
                        i_q_steady=init.i_q_ctl)

    columns = BASE_COLUMNS + (VERBOSE_COLUMNS if cfg.verbose else ())
    rows: dict[str, list[float]] = {name: [] for name, _ in columns}
    events: list[SimEvent] = []
    audit = EnergyAudit()

    stepper = rk4_step if cfg.solver == "rk4" else euler_step
    n_steps = int(round(cfg.t_end / cfg.dt))
    y = init.y.copy()
    t = 0.0
    theta = init.theta_pll if not cfg.cold_start else 0.0
    diverged = False
    limit_violations = 0
    deviation_logged = False
    coast_logged = False
    blocked_logged = False
    fallback_steps = 0
    prev_powers: np.ndarray | None = None

    i_base_mach = scn.scig.base_current
    v_base = scn.network.network_voltage
    i_base_stat = sp.rated_current
    e0_mag = gen.magnetic_energy(y[0:4], scn.scig)
    e0_kin = gen.kinetic_energy(y[4], scn.scig)
    e0_lf = 0.5 * sp.l_f * (y[5] ** 2 + y[6] ** 2)
    e0_dc = 0.5 * sp.c_dc * y[7] ** 2

    for k in range(n_steps + 1):
        fault_now = fault_state(t, scn.fault)
        v_wind = scn.wind.speed(t)
        theta_err = plant.omega_grid * t - theta
        v_pcc, e_src, i_s, inj_m, inj_s = plant.solve_network(y, theta_err, fault_now)
        v_dq = np.array([v_pcc.real, v_pcc.imag])
        v_pu = abs(v_pcc) / v_base

        # controller: the PLL always runs, converter loops only when enabled
        if scn.statcom_enabled:
            out = control.step(v_dq, y[7], y[5:7], cfg.dt)
            v_t, conv_sat = st.converter_voltage(out.v_dqref, y[7], sp)
            if y[7] <= sp.v_dc_min:
                # undervoltage: the converter blocks and its branch opens
                v_t = None
                y[5] = y[6] = 0.0
                if not blocked_logged:
                    events.append(SimEvent(t, "converter_blocked", f"v_dc={y[7]:.1f} V"))
                    blocked_logged = True
            if out.i_dref**2 + out.i_qref**2 > sp.i_max**2 * (1.0 + 1e-9):
                limit_violations += 1
            omega_frame = out.omega
        else:
            control.pll.step(v_dq, cfg.dt)
            out = None
            v_t, conv_sat = None, False
            omega_frame = control.pll.omega_hat
        theta_next = control.pll.theta

        # measurements
        i_mach = gen.currents_from_fluxes(y[0:4], scn.scig)
        t_e = gen.shaft_torque(i_mach, scn.scig)
        t_m, _drive = plant.turbine_torque(y[4], v_wind)
        v_mach = plant.machine_terminal(v_pcc, i_s)
        p_grid, q_grid, i_grid = grid_branch_power(v_pcc, e_src, scn.network)
        s_wecs = v_pcc * inj_m.conjugate()
        s_stat = v_pcc * inj_s.conjugate()

        if k % cfg.record_decimation == 0 or k == n_steps:
            rows["time"].append(t)
            rows["pcc_v"].append(v_pu)
            rows["pcc_vd"].append(v_pcc.real)
            rows["pcc_vq"].append(v_pcc.imag)
            rows["grid_id"].append(i_grid.real)
            rows["grid_iq"].append(i_grid.imag)
            rows["grid_p"].append(p_grid)
            rows["grid_q"].append(q_grid)
            rows["wecs_v"].append(abs(v_mach) / scn.scig.rated_voltage)
            rows["wecs_id"].append(i_mach[0])
            rows["wecs_iq"].append(i_mach[1])
            rows["wecs_p"].append(s_wecs.real)
            rows["statcom_id"].append(y[5])
            rows["statcom_iq"].append(y[6])
            rows["statcom_p"].append(s_stat.real)
            rows["statcom_q"].append(s_stat.imag)
            rows["v_dc"].append(y[7])
            rows["omega_r"].append(y[4])
            rows["torque_e"].append(t_e)
            rows["torque_m"].append(t_m)
            rows["wind"].append(v_wind)
            rows["fault"].append(float(fault_now))
            rows["conv_sat"].append(float(conv_sat))
            rows["pll_coast"].append(float(control.pll.coasting))
            rows["load_fallback"].append(float(plant.load_fallback))
            rows["pi_sat"].append(
                float(out.dc_saturated or out.ac_saturated or out.current_saturated) if out else 0.0
            )
            if cfg.verbose:
                rows["i_dref"].append(out.i_dref if out else 0.0)
                rows["i_qref"].append(out.i_qref if out else 0.0)
                rows["v_td"].append(float(v_t[0]) if v_t is not None else 0.0)
                rows["v_tq"].append(float(v_t[1]) if v_t is not None else 0.0)
                rows["omega_hat"].append(omega_frame)
                rows["theta"].append(control.pll.theta)
                rows["v_g_filt"].append(out.v_g_filtered if out else v_pu)

        # event bookkeeping
        if plant.load_fallback:
            fallback_steps += 1
        if control.pll.coasting and not coast_logged:
            events.append(SimEvent(t, "pll_coast", f"|v|={v_pu:.3f} pu"))
            coast_logged = True
        if abs(1.0 - v_pu) > 0.2 and not deviation_logged:
            events.append(SimEvent(t, "deviation_above_20pct", f"|v|={v_pu:.3f} pu"))
            deviation_logged = True

        # divergence check on p.u.-scaled recorded quantities
        pu_quants = (
            v_pu,
            abs(i_s) / i_base_mach,
            math.hypot(y[5], y[6]) / i_base_stat,
            y[7] / sp.v_dc_rated,
            abs(y[4]) / scn.scig.base_freq,
        )
        if any(q > cfg.divergence_ceiling for q in pu_quants) or not np.all(np.isfinite(y)):
            events.append(SimEvent(t, "divergence", "p.u. ceiling exceeded: "
                                   + ", ".join(f"{q:.2f}" for q in pu_quants)))
            diverged = True
            break

        # energy ledger, trapezoid on instantaneous powers
        omega_m = 2.0 * y[4] / scn.scig.poles
        p_turb = -t_m * omega_m
        p_fault = (abs(v_pcc) ** 2 / scn.network.fault_resistance) if fault_now else 0.0
        i_load = inj_m + inj_s + i_grid - (v_pcc / scn.network.fault_resistance if fault_now else 0.0)
        p_load = (v_pcc * i_load.conjugate()).real
        p_xfmr = plant.z_xfmr.real * abs(i_s) ** 2
        p_cu = gen.copper_loss(y[0:4], scn.scig)
        p_filter = sp.r_f * (y[5] ** 2 + y[6] ** 2) if scn.statcom_enabled else 0.0
        p_rp = y[7] ** 2 / sp.r_parallel if scn.statcom_enabled else 0.0
        powers = np.array([p_grid, p_turb, p_load, p_fault, p_cu, p_xfmr, p_filter, p_rp])
        if prev_powers is not None:
            avg = 0.5 * (prev_powers + powers) * cfg.dt
            audit.grid_in += avg[0]
            audit.turbine_in += avg[1]
            audit.load_out += avg[2]
            audit.fault_out += avg[3]
            audit.machine_copper += avg[4]
            audit.transformer_loss += avg[5]
            audit.filter_loss += avg[6]
            audit.dc_loss += avg[7]
        prev_powers = powers

        if k == n_steps:
            break

        # integrate devices with the converter command held across the step
        try:
            y = stepper(
                lambda tt, yy: plant.derivative(yy, tt, t, theta, omega_frame, v_t, v_wind, fault_now),
                y,
                t,
                cfg.dt,
            )
        except DivergenceError as exc:
            events.append(SimEvent(exc.t, "divergence", str(exc)))
            diverged = True
            break
        theta = theta_next
        t = (k + 1) * cfg.dt

    audit.d_magnetic = gen.magnetic_energy(y[0:4], scn.scig) - e0_mag
    audit.d_kinetic = gen.kinetic_energy(y[4], scn.scig) - e0_kin
    audit.d_filter = 0.5 * sp.l_f * (y[5] ** 2 + y[6] ** 2) - e0_lf
    audit.d_dc_link = 0.5 * sp.c_dc * y[7] ** 2 - e0_dc

    if fallback_steps:
        events.append(SimEvent(t, "load_fallback", f"{fallback_steps} constant-impedance steps"))

    data = {name: np.asarray(vals, dtype=float) for name, vals in rows.items()}
    ts = TimeSeries(columns, data)
    ts.events = events
    ts.energy = audit
    ts.diverged = diverged
    ts.limit_violations = limit_violations
    ts.meta = {
        "name": scn.name,
        "statcom_enabled": scn.statcom_enabled,
        "expect_unstable": scn.expect_unstable,
        "e_source": init.e_mag,
    }
    return ts


# ---------------------------------------------------------------------------
# metrics and the grid-code envelope


@dataclass
class Metrics:
    v_max_pu: float
    v_min_pu: float
    overvoltage_pct: float
    recovery_time_s: float  # to 0.98 pu after fault end; nan if never
    max_deviation_pu: float
    post_fault_max_deviation_pu: float
    statcom_q_peak_var: float
    statcom_q_post_fault_mean_var: float
    grid_p_mean_w: float
    grid_q_post_fault_mean_var: float
    diverged: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def compute_metrics(ts: TimeSeries, fault: FaultSpec, settle_delay: float = 0.2) -> Metrics:
    t = ts["time"]
    v = ts["pcc_v"]
    if len(t) == 0:
        raise InvalidInputError("empty time series")
    dev = np.abs(v - 1.0)
    post = t >= fault.t_end
    post_settled = t >= fault.t_end + settle_delay

    recovery = math.nan
    hits = np.where(post & (v >= 0.98))[0]
    if hits.size:
        recovery = float(max(t[hits[0]] - fault.t_end, 0.0))

    q_st = ts["statcom_q"]
    q_grid = ts["grid_q"]
    return Metrics(
        v_max_pu=float(np.max(v)),
        v_min_pu=float(np.min(v)),
        overvoltage_pct=float(max(np.max(v) - 1.0, 0.0) * 100.0),
        recovery_time_s=recovery,
        max_deviation_pu=float(np.max(dev)),
        post_fault_max_deviation_pu=float(np.max(dev[post])) if np.any(post) else math.nan,
        statcom_q_peak_var=float(np.max(np.abs(q_st))) if len(q_st) else 0.0,
        statcom_q_post_fault_mean_var=float(np.mean(q_st[post_settled])) if np.any(post_settled) else math.nan,
        grid_p_mean_w=float(np.mean(ts["grid_p"])),
        grid_q_post_fault_mean_var=float(np.mean(q_grid[post_settled])) if np.any(post_settled) else math.nan,
        diverged=ts.diverged,
    )


@dataclass
class Violation:
    t: float
    v_pu: float
    bound: float

    @property
    def margin(self) -> float:
        return self.v_pu - self.bound


@dataclass
class GridCodeVerdict:
    passed: bool
    violations: list[Violation]
    truncated: bool = False


def grid_code_check(ts: TimeSeries, env: FrtEnvelope, fault: FaultSpec) -> GridCodeVerdict:
    """Pass iff the PCC voltage sits on/above the envelope lower bound at every
    sample from fault start through the recovery window.

    A run that diverged before the window closed cannot demonstrate compliance
    and fails with the truncation flag set.
    """
    t = ts["time"]
    v = ts["pcc_v"]
    t_lo, t_hi = fault.t_start, fault.t_start + env.recovery_window
    mask = (t >= t_lo) & (t <= t_hi)
    violations = [
        Violation(float(tt), float(vv), env.bound(tt - fault.t_start))
        for tt, vv in zip(t[mask], v[mask])
        if vv < env.bound(tt - fault.t_start)
    ]
    truncated = bool(ts.diverged and len(t) and t[-1] < t_hi)
    return GridCodeVerdict(passed=not violations and not truncated, violations=violations, truncated=truncated)
