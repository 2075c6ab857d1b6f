"""Scenario configuration: JSON tree with defaults, validation, round-trip.

The bundled paper preset carries the published machine/line/load ratings
verbatim (see PAPER_TABLE); omitted keys in a user file fall back to it.
Unknown keys are rejected by name.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

from .control import ControlGains, PllParams, loop_shaped_gains
from .errors import ConfigError, InvalidInputError
from .network import FaultSpec, NetworkParams
from .scig import ScigParams
from .sim import FrtEnvelope, Scenario, SimConfig, WindProfile, WindSegment
from .statcom import StatcomParams, K_M_DEFAULT
from .turbine import CpModel, TurbineParams

# Ratings published with the studied system, encoded verbatim in the preset.
PAPER_TABLE = {
    "rated_power_w": 1.5e6,
    "rated_wind_ms": 12.0,
    "inertia_constant": 64.0,
    "rated_voltage_v": 500.0,
    "frequency_hz": 50.0,
    "r_s": 0.01,
    "r_r": 0.01,
    "l_s": 0.041,
    "l_r": 0.041,
    "l_m": 0.035,
    "power_factor": 0.85,
    "line_r_per_km": 0.12,
    "line_x_per_km": -2.78,
    "load_mw": 80.0,
    "load_mvar": 10.0,
    "statcom_mvar": 25.0,
    "fault_start_s": 0.8,
    "fault_end_s": 0.82,
}


def paper_preset_dict() -> dict:
    """Full default configuration tree (the 'paper' scenario)."""
    return {
        "simulation": {
            "dt": 1e-4,
            "t_end": 2.0,
            "record_decimation": 5,
            "solver": "rk4",
            "divergence_ceiling": 10.0,
            "cold_start": False,
        },
        "wind": {
            "segments": [
                {"t_start": 0.0, "value": 3.0, "ramp": False},
                {"t_start": 0.5, "value": 12.0, "ramp": True},
                {"t_start": 1.0, "value": 12.0, "ramp": False},
            ]
        },
        "fault": {
            "t_start": PAPER_TABLE["fault_start_s"],
            "t_end": PAPER_TABLE["fault_end_s"],
            "kind": "three_phase_to_ground",
        },
        "envelope": {
            "floor": 0.15,
            "recovery_level": 0.8,
            "region2_duration": 0.15,
            "recovery_window": 1.0,
        },
        "turbine": {
            "rho": 1.225,
            "blade_length": 30.66,
            "rated_power": PAPER_TABLE["rated_power_w"],
            "rated_wind": PAPER_TABLE["rated_wind_ms"],
            "beta": 0.0,
            "v_min": 0.1,
            "omega_floor": 0.1,
        },
        "cp_model": {"c1": 0.5176, "c2": 116.0, "c3": 0.4, "c4": 5.0, "c5": 21.0, "c6": 0.0068},
        "scig": {
            "r_s": PAPER_TABLE["r_s"],
            "r_r": PAPER_TABLE["r_r"],
            "l_s": PAPER_TABLE["l_s"],
            "l_r": PAPER_TABLE["l_r"],
            "l_m": PAPER_TABLE["l_m"],
            "poles": 4,
            "rated_voltage": PAPER_TABLE["rated_voltage_v"],
            "rated_power": PAPER_TABLE["rated_power_w"],
            "power_factor": PAPER_TABLE["power_factor"],
            "inertia_constant": PAPER_TABLE["inertia_constant"],
            "frequency_hz": PAPER_TABLE["frequency_hz"],
        },
        "statcom": {
            "l_f": 0.065,
            "r_f": 0.8,
            "c_dc": 150e-6,
            "v_dc_rated": 130e3,
            "s_rated": PAPER_TABLE["statcom_mvar"] * 1e6,
            "v_nominal": 69e3,
            "i_max": 435.0,
            "k_m": K_M_DEFAULT,
            "r_parallel": 3.4e5,
            "v_dc_min_frac": 0.5,
        },
        "network": {
            "network_voltage": 69e3,
            "grid_voltage": None,
            "scr": 5.0,
            "grid_x_over_r": 10.0,
            "line_r_per_km": PAPER_TABLE["line_r_per_km"],
            "line_x_per_km": PAPER_TABLE["line_x_per_km"],
            "line_length_km": 10.0,
            "transformer_ratio": 138.0,
            "transformer_leakage_pu": 0.06,
            "transformer_r_pu": 0.006,
            "load_mw": PAPER_TABLE["load_mw"],
            "load_mvar": PAPER_TABLE["load_mvar"],
            "fault_resistance": 2.5,
            "load_max_iter": 50,
            "load_tol": 1e-9,
            "load_damping": 0.7,
            "load_collapse_threshold": 0.3,
        },
        "control": {
            "v_ref": 1.0,
            "v_dcref": None,
            "current_bw_hz": 500.0,
            "dc_bw_hz": 25.0,
            "ac_bw_hz": 25.0,
            "pll_kp": 188.5,
            "pll_ki": 8883.0,
            "pll_v_threshold": 0.25,
            "v_meas_cutoff_hz": 100.0,
            "q_overvoltage_headroom": 1.15,
        },
        "scenario": {
            "name": "paper",
            "statcom_enabled": True,
            "expect_unstable": False,
            "v_unsupported_target": 1.01,
            "gear_ratio": None,
        },
    }


# keys whose value may be null (meaning: derive at build time)
_NULLABLE = {"network.grid_voltage", "control.v_dcref", "scenario.gear_ratio"}

# explicit invariant checks that must name the offending key
_CHECKS: dict[str, tuple] = {
    "simulation.dt": (lambda v: v > 0, "must be > 0"),
    "simulation.t_end": (lambda v: v > 0, "must be > 0"),
    "simulation.record_decimation": (lambda v: v >= 1, "must be >= 1"),
    "simulation.solver": (lambda v: v in ("rk4", "euler"), "must be 'rk4' or 'euler'"),
    "turbine.rho": (lambda v: v > 0, "must be > 0"),
    "turbine.blade_length": (lambda v: v > 0, "must be > 0"),
    "turbine.rated_wind": (lambda v: v > 0, "must be > 0"),
    "scig.r_s": (lambda v: v > 0, "must be > 0"),
    "scig.r_r": (lambda v: v > 0, "must be > 0"),
    "scig.l_s": (lambda v: v > 0, "must be > 0"),
    "scig.l_r": (lambda v: v > 0, "must be > 0"),
    "scig.l_m": (lambda v: v > 0, "must be > 0"),
    "scig.poles": (lambda v: v >= 2 and v % 2 == 0, "must be even and >= 2"),
    "scig.inertia_constant": (lambda v: v > 0, "must be > 0"),
    "statcom.l_f": (lambda v: v > 0, "must be > 0"),
    "statcom.r_f": (lambda v: v > 0, "must be > 0"),
    "statcom.c_dc": (lambda v: v > 0, "must be > 0"),
    "statcom.v_dc_rated": (lambda v: v > 0, "must be > 0"),
    "network.network_voltage": (lambda v: v > 0, "must be > 0"),
    "network.fault_resistance": (lambda v: v > 0, "must be > 0"),
    "network.line_length_km": (lambda v: v >= 0, "must be >= 0"),
    "control.v_ref": (lambda v: v > 0, "must be > 0"),
}


def _validate_tree(user: dict, defaults: dict, path: str = "") -> dict:
    """Merge user keys over defaults, rejecting unknown keys by name."""
    merged = copy.deepcopy(defaults)
    for key, value in user.items():
        full = f"{path}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown configuration key '{full}'")
        if isinstance(defaults[key], dict) and key != "segments":
            if not isinstance(value, dict):
                raise ConfigError(f"'{full}' must be a table of keys")
            merged[key] = _validate_tree(value, defaults[key], f"{full}.")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _check_types_and_invariants(tree: dict):
    def leaf_check(full: str, value, default):
        if value is None:
            if full not in _NULLABLE:
                raise ConfigError(f"'{full}' must not be null")
            return
        if isinstance(default, bool) != isinstance(value, bool):
            raise ConfigError(f"'{full}' must be a boolean")
        if isinstance(default, str) and not isinstance(value, str):
            raise ConfigError(f"'{full}' must be a string")
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ConfigError(f"'{full}' must be a finite number")
        if full in _CHECKS:
            ok, msg = _CHECKS[full]
            if not ok(value):
                raise ConfigError(f"'{full}' {msg} (got {value!r})")

    defaults = paper_preset_dict()

    def walk(node: dict, dnode: dict, path: str):
        for key, value in node.items():
            full = f"{path}{key}"
            dval = dnode[key]
            if isinstance(dval, dict):
                walk(value, dval, f"{full}.")
            elif key == "segments":
                if not isinstance(value, list) or not value:
                    raise ConfigError(f"'{full}' must be a non-empty list")
                last = -math.inf
                for i, seg in enumerate(value):
                    extra = set(seg) - {"t_start", "value", "ramp"}
                    if extra:
                        raise ConfigError(f"unknown configuration key '{full}[{i}].{sorted(extra)[0]}'")
                    if seg.get("value", 0.0) < 0:
                        raise ConfigError(f"'{full}[{i}].value' must be >= 0")
                    if seg.get("t_start", 0.0) <= last:
                        raise ConfigError(f"'{full}[{i}].t_start' must be strictly increasing")
                    last = seg["t_start"]
            else:
                leaf_check(full, value, dval if dval is not None else 0.0)

    walk(tree, defaults, "")
    if tree["fault"]["t_start"] >= tree["fault"]["t_end"]:
        raise ConfigError("'fault.t_start' must be before 'fault.t_end'")
    if not tree["envelope"]["floor"] < tree["envelope"]["recovery_level"] <= 1.0:
        raise ConfigError("'envelope.floor' must be below 'envelope.recovery_level' (<= 1)")


@dataclass
class ScenarioConfig:
    """Validated configuration tree plus builders for runnable scenarios."""

    tree: dict

    @classmethod
    def from_dict(cls, user: dict) -> "ScenarioConfig":
        merged = _validate_tree(user, paper_preset_dict())
        _check_types_and_invariants(merged)
        cfg = cls(tree=merged)
        try:
            cfg.build_scenario()  # every module's own invariants fire on load
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def to_json(self) -> str:
        return json.dumps(self.tree, indent=2, sort_keys=True)

    def build_scenario(
        self,
        statcom_enabled: bool | None = None,
        name: str | None = None,
        verbose: bool = False,
    ) -> Scenario:
        t = self.tree
        sim = SimConfig(
            dt=t["simulation"]["dt"],
            t_end=t["simulation"]["t_end"],
            record_decimation=int(t["simulation"]["record_decimation"]),
            solver=t["simulation"]["solver"],
            divergence_ceiling=t["simulation"]["divergence_ceiling"],
            cold_start=t["simulation"]["cold_start"],
            verbose=verbose,
        )
        wind = WindProfile(
            tuple(WindSegment(s["t_start"], s["value"], s.get("ramp", False)) for s in t["wind"]["segments"])
        )
        fault = FaultSpec(t["fault"]["t_start"], t["fault"]["t_end"], t["fault"]["kind"])
        env = FrtEnvelope(
            floor=t["envelope"]["floor"],
            recovery_level=t["envelope"]["recovery_level"],
            region2_duration=t["envelope"]["region2_duration"],
            recovery_window=t["envelope"]["recovery_window"],
        )
        tp = TurbineParams(
            rho=t["turbine"]["rho"],
            blade_length=t["turbine"]["blade_length"],
            rated_power=t["turbine"]["rated_power"],
            rated_wind=t["turbine"]["rated_wind"],
            beta=t["turbine"]["beta"],
            v_min=t["turbine"]["v_min"],
            omega_floor=t["turbine"]["omega_floor"],
        )
        cp = CpModel(**t["cp_model"])
        sc = t["scig"]
        scig = ScigParams(
            r_s=sc["r_s"],
            r_r=sc["r_r"],
            l_s=sc["l_s"],
            l_r=sc["l_r"],
            l_m=sc["l_m"],
            poles=int(sc["poles"]),
            rated_voltage=sc["rated_voltage"],
            rated_power=sc["rated_power"],
            power_factor=sc["power_factor"],
            inertia_constant=sc["inertia_constant"],
            base_freq=2.0 * math.pi * sc["frequency_hz"],
        )
        stc = t["statcom"]
        statcom = StatcomParams(
            l_f=stc["l_f"],
            r_f=stc["r_f"],
            c_dc=stc["c_dc"],
            v_dc_rated=stc["v_dc_rated"],
            s_rated=stc["s_rated"],
            v_nominal=stc["v_nominal"],
            i_max=stc["i_max"],
            k_m=stc["k_m"],
            r_parallel=stc["r_parallel"],
            v_dc_min_frac=stc["v_dc_min_frac"],
        )
        nw = t["network"]
        network = NetworkParams(
            network_voltage=nw["network_voltage"],
            grid_voltage=nw["grid_voltage"],
            scr=nw["scr"],
            grid_x_over_r=nw["grid_x_over_r"],
            line_r_per_km=nw["line_r_per_km"],
            line_x_per_km=nw["line_x_per_km"],
            line_length_km=nw["line_length_km"],
            transformer_ratio=nw["transformer_ratio"],
            transformer_leakage_pu=nw["transformer_leakage_pu"],
            transformer_r_pu=nw["transformer_r_pu"],
            load_p=nw["load_mw"] * 1e6,
            load_q=nw["load_mvar"] * 1e6,
            fault_resistance=nw["fault_resistance"],
            load_max_iter=int(nw["load_max_iter"]),
            load_tol=nw["load_tol"],
            load_damping=nw["load_damping"],
            load_collapse_threshold=nw["load_collapse_threshold"],
        )
        ct = t["control"]
        shaped = loop_shaped_gains(
            statcom,
            x_thevenin=abs(network.z_thevenin.imag),
            omega_nominal=scig.base_freq,
            current_bw_hz=ct["current_bw_hz"],
            dc_bw_hz=ct["dc_bw_hz"],
            ac_bw_hz=ct["ac_bw_hz"],
        )
        gains = ControlGains(
            pll=PllParams(
                omega_nominal=scig.base_freq,
                k_p=ct["pll_kp"],
                k_i=ct["pll_ki"],
                v_threshold=ct["pll_v_threshold"],
                v_base=statcom.v_nominal,
            ),
            dc_loop=shaped.dc_loop,
            ac_loop=shaped.ac_loop,
            current_d=shaped.current_d,
            current_q=shaped.current_q,
            v_meas_cutoff_hz=ct["v_meas_cutoff_hz"],
            q_overvoltage_headroom=ct["q_overvoltage_headroom"],
        )
        scn = t["scenario"]
        return Scenario(
            sim=sim,
            wind=wind,
            fault=fault,
            envelope=env,
            turbine=tp,
            cp_model=cp,
            scig=scig,
            statcom=statcom,
            network=network,
            gains=gains,
            gear_ratio=scn["gear_ratio"],
            v_ref=ct["v_ref"],
            v_dcref=ct["v_dcref"],
            v_unsupported_target=scn["v_unsupported_target"],
            statcom_enabled=scn["statcom_enabled"] if statcom_enabled is None else statcom_enabled,
            expect_unstable=scn["expect_unstable"],
            name=name or scn["name"],
        )


def paper_preset() -> ScenarioConfig:
    return ScenarioConfig.from_dict({})


def parse_config(path: str) -> ScenarioConfig:
    """Load and validate a configuration file.

    An empty (or whitespace-only) file yields the full-default paper preset.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file '{path}': {exc}") from exc
    if not text.strip():
        return paper_preset()
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in '{path}': {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"config root in '{path}' must be a JSON object")
    return ScenarioConfig.from_dict(user)
