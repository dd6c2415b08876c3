"""Solar plant availability from irradiance, tilt factors and temperature."""

from dataclasses import dataclass


@dataclass(frozen=True)
class SolarModel:
    """Flat-plate array with linear temperature derating.

    a_pv        total panel area, m^2
    eta_ref     efficiency at the reference temperature, in (0, 1)
    temp_coeff  efficiency loss per degree C above t_ref
    t_ref       reference air temperature, degC
    r_b, r_d, r_r  tilt factors for beam, diffuse and reflected irradiance
    rating_kw   plant rating that caps the availability, kW
    """

    a_pv: float
    rating_kw: float
    eta_ref: float = 0.2
    temp_coeff: float = 0.004
    t_ref: float = 25.0
    r_b: float = 1.0
    r_d: float = 1.0
    r_r: float = 0.0

    def __post_init__(self) -> None:
        if self.a_pv <= 0:
            raise ValueError("a_pv must be > 0")
        if not 0 < self.eta_ref < 1:
            raise ValueError("eta_ref must be in (0, 1)")
        if min(self.r_b, self.r_d, self.r_r) < 0:
            raise ValueError("tilt factors must be >= 0")
        if self.rating_kw <= 0:
            raise ValueError("rating_kw must be > 0")

    def efficiency(self, t_air: float) -> float:
        return max(0.0, self.eta_ref * (1.0 - self.temp_coeff * (t_air - self.t_ref)))


def total_irradiance(i_b: float, i_d: float, m: SolarModel) -> float:
    """Plane-of-array irradiance ``I_b R_b + I_d R_d + (I_b + I_d) R_r``, W/m^2."""
    return i_b * m.r_b + i_d * m.r_d + (i_b + i_d) * m.r_r


def available_solar_power(i_t: float, t_air: float, m: SolarModel) -> float:
    """Available power ``I_T eta(T_air) A_pv`` in kW, capped at the rating."""
    power_kw = i_t * m.efficiency(t_air) * m.a_pv / 1000.0
    return min(power_kw, m.rating_kw)


def solar_output(setpoint: float, i_t: float, t_air: float, m: SolarModel) -> float:
    """Delivered power: the setpoint saturated by current availability."""
    return min(setpoint, available_solar_power(i_t, t_air, m))
