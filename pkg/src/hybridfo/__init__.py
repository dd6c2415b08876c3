"""Supervisory control of a wind/solar/battery hybrid plant by online
feedback optimization, co-simulated against simplified plant models."""

from .backend import backend_name, compiled_available
from .config import ScenarioConfig, load_config, parse_config, save_config, write_config
from .controller import (
    ConstraintSet,
    ControllerConfig,
    ControlVector,
    MeasurementVector,
    SupervisoryController,
    assemble_constraints,
    fo_step,
    run_to_equilibrium,
    sensitivity,
)
from .cosim import SimLog, build_profile, run
from .costs import CostConfig, cost_gradient, cost_value
from .modes import Mode
from .oracle import FrozenProblem, solve_frozen, solve_frozen_detailed
from .plants import (
    BatteryLimitsOut,
    BatteryState,
    PlantLimits,
    SolarModel,
    WindModel,
    available_solar_power,
    available_wind_power,
    battery_limits,
    battery_step,
    solar_output,
    total_irradiance,
    wind_output,
)
from .profiles import DisturbanceProfile, synth_demand_profile, synth_wind_profile
from .qp import QpProblem, QpSolution, QpStatus, solve

__version__ = "0.1.0"

__all__ = [
    "BatteryLimitsOut",
    "BatteryState",
    "ConstraintSet",
    "ControllerConfig",
    "ControlVector",
    "CostConfig",
    "DisturbanceProfile",
    "FrozenProblem",
    "MeasurementVector",
    "Mode",
    "PlantLimits",
    "QpProblem",
    "QpSolution",
    "QpStatus",
    "ScenarioConfig",
    "SimLog",
    "SolarModel",
    "SupervisoryController",
    "WindModel",
    "assemble_constraints",
    "available_solar_power",
    "available_wind_power",
    "backend_name",
    "battery_limits",
    "battery_step",
    "build_profile",
    "compiled_available",
    "cost_gradient",
    "cost_value",
    "fo_step",
    "load_config",
    "parse_config",
    "run",
    "run_to_equilibrium",
    "save_config",
    "sensitivity",
    "solar_output",
    "solve",
    "solve_frozen",
    "solve_frozen_detailed",
    "synth_demand_profile",
    "synth_wind_profile",
    "total_irradiance",
    "wind_output",
    "write_config",
]
