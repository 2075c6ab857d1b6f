"""Time-domain simulator for a fixed-speed wind generator with STATCOM voltage support.

The package couples a dq-frame squirrel-cage induction generator, an averaged
voltage-source-converter STATCOM with cascaded PI control, and a quasi-static
phasor network, and checks the simulated fault response against a grid-code
voltage envelope.
"""

from .errors import (
    ConfigError,
    DivergenceError,
    InvalidInputError,
    TopologyError,
    WindCutoffError,
)
from .frames import J, park, park_matrix, inverse_park, rotate_dq, wrap_angle
from .turbine import CpModel, TurbineParams, cp_peak, mechanical_power, mechanical_torque, power_coefficient, tip_speed_ratio
from .scig import ScigParams, currents_from_fluxes, electromagnetic_torque, flux_derivative, rotor_acceleration, shaft_torque, steady_state_torque_slip
from .statcom import StatcomParams, converter_voltage, dc_link_derivative, filter_current_derivative
from .control import ControlGains, FrtControl, PiController, PiGains, Pll
from .network import FaultSpec, NetworkParams, build_admittance, constant_power_load_current, fault_state, solve_pcc_voltage
from .sim import FrtEnvelope, Scenario, SimConfig, TimeSeries, WindProfile, WindSegment, compute_metrics, grid_code_check, rk4_step, run_scenario
from .config import ScenarioConfig, paper_preset, parse_config

__version__ = "0.1.0"
