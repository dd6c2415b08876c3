"""Simplified input-output plant models: each subsystem tracks its power
setpoint up to what the weather or the stored energy allows."""

from dataclasses import dataclass

from .battery import (
    BatteryLimitsOut,
    BatteryState,
    InconsistentStateError,
    battery_limits,
    battery_step,
)
from .solar import SolarModel, available_solar_power, solar_output, total_irradiance
from .wind import (
    NegativeSpeedError,
    WindModel,
    available_wind_power,
    load_cp_table,
    wind_output,
)


@dataclass(frozen=True)
class PlantLimits:
    """Rated setpoint limits of the three subsystems, kW."""

    p_max_w: float
    p_max_s: float
    p_max_b: float
    p_min_b: float
    p_min_w: float = 0.0
    p_min_s: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p_max_w", "p_max_s", "p_max_b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.p_min_b <= 0 <= self.p_max_b:
            raise ValueError("battery limits must satisfy p_min_b <= 0 <= p_max_b")
        if self.p_min_w != 0.0 or self.p_min_s != 0.0:
            raise ValueError("wind and solar minimum setpoints are fixed at zero")


__all__ = [
    "BatteryLimitsOut",
    "BatteryState",
    "InconsistentStateError",
    "NegativeSpeedError",
    "PlantLimits",
    "SolarModel",
    "WindModel",
    "available_solar_power",
    "available_wind_power",
    "battery_limits",
    "battery_step",
    "load_cp_table",
    "solar_output",
    "total_irradiance",
    "wind_output",
]
