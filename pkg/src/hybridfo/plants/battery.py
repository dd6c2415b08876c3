"""Battery storage: power limits from the energy state, and the energy
integration applied each simulation step.

Sign convention: the interface power ``p_b`` is >= 0 in both modes; the
mode decides whether it enters the energy update with + (charging) or -
(discharging).
"""

from dataclasses import dataclass, replace

from ..modes import Mode
from ..units import seconds_to_hours

_ENERGY_ATOL = 1e-9


class InconsistentStateError(ValueError):
    """Battery state implies an empty feasible power interval."""


@dataclass(frozen=True)
class BatteryState:
    """Energy state plus the static limits that travel with it.

    capacity_c  energy capacity, kWh
    soc         state of charge in [0, 1]; energy_e = soc * capacity_c
    energy_e    stored energy, kWh
    soc_min/max, e_min/max  operating band (e_* = soc_* * capacity_c)
    p_max_b, p_min_b        rated power band, kW (p_min_b <= 0)
    r_min, r_max            setpoint ramp bounds, kW/s (r_min <= 0 <= r_max)
    clamped     True when the last energy update hit a bound
    """

    capacity_c: float
    soc: float
    energy_e: float
    soc_min: float
    soc_max: float
    e_min: float
    e_max: float
    p_max_b: float
    p_min_b: float
    r_min: float = -2000.0
    r_max: float = 2000.0
    clamped: bool = False

    def __post_init__(self) -> None:
        if self.capacity_c <= 0:
            raise ValueError("capacity_c must be > 0")
        atol = _ENERGY_ATOL * max(1.0, self.capacity_c)
        if abs(self.energy_e - self.soc * self.capacity_c) > atol:
            raise ValueError("energy_e must equal soc * capacity_c")
        if abs(self.e_min - self.soc_min * self.capacity_c) > atol:
            raise ValueError("e_min must equal soc_min * capacity_c")
        if abs(self.e_max - self.soc_max * self.capacity_c) > atol:
            raise ValueError("e_max must equal soc_max * capacity_c")
        if not self.e_min - atol <= self.energy_e <= self.e_max + atol:
            raise ValueError("energy_e outside [e_min, e_max]")
        if not self.r_min <= 0 <= self.r_max:
            raise ValueError("ramp bounds must satisfy r_min <= 0 <= r_max")

    @classmethod
    def from_soc(
        cls,
        capacity_c: float,
        soc: float,
        soc_min: float = 0.1,
        soc_max: float = 0.9,
        p_max_b: float = 20000.0,
        p_min_b: float = -20000.0,
        r_min: float = -2000.0,
        r_max: float = 2000.0,
    ) -> "BatteryState":
        return cls(
            capacity_c=capacity_c,
            soc=soc,
            energy_e=soc * capacity_c,
            soc_min=soc_min,
            soc_max=soc_max,
            e_min=soc_min * capacity_c,
            e_max=soc_max * capacity_c,
            p_max_b=p_max_b,
            p_min_b=p_min_b,
            r_min=r_min,
            r_max=r_max,
        )


@dataclass(frozen=True)
class BatteryLimitsOut:
    """Feasible interval for the mode's battery setpoint channel, kW."""

    lower: float
    upper: float


def battery_limits(
    s: BatteryState, dt: float, mode: Mode, p_avail: float | None = None
) -> BatteryLimitsOut:
    """Power interval the battery accepts for the next ``dt`` seconds.

    The energy-headroom terms divide by ``dt`` in hours so they come out
    in kW.  ``p_avail`` caps the interval only in discharging mode and
    defaults to the rated power.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if p_avail is None:
        p_avail = s.p_max_b
    dt_h = seconds_to_hours(dt)
    c_h1 = (s.e_max - s.energy_e) / dt_h
    c_h2 = s.p_max_b
    c_l1 = (s.e_min - s.energy_e) / dt_h
    c_l2 = s.p_min_b
    lower = max(c_l1, c_l2)
    if mode is Mode.DISCHARGING:
        upper = min(c_h1, c_h2, p_avail)
    else:
        upper = min(c_h1, c_h2)
    if lower > upper:
        raise InconsistentStateError(
            f"battery limits empty: lower {lower:.6g} kW > upper {upper:.6g} kW"
        )
    return BatteryLimitsOut(lower=lower, upper=upper)


def battery_step(s: BatteryState, p_b: float, dt: float, mode: Mode) -> BatteryState:
    """Integrate the energy state over ``dt`` seconds at interface power ``p_b``.

    Charging adds energy, discharging removes it.  The result is clamped
    to the energy band with ``clamped`` set when that happens.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    signed = p_b if mode is Mode.CHARGING else -p_b
    energy = s.energy_e + signed * seconds_to_hours(dt)
    clamped = False
    if energy < s.e_min:
        energy = s.e_min
        clamped = True
    elif energy > s.e_max:
        energy = s.e_max
        clamped = True
    return replace(s, energy_e=energy, soc=energy / s.capacity_c, clamped=clamped)
