"""Wind farm availability from a tabulated power-coefficient curve.

Per turbine the available power is ``max(0, 0.5 rho A Cp(w) w^3)``, with
Cp looked up by monotone cubic interpolation in a (speed, Cp) table,
multiplied by a uniform wake-deficit factor, clipped to the turbine
rating, and zero outside the cut-in/cut-out band.  The farm total is the
sum over turbines; a single ambient speed may stand in for all of them.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

BETZ_LIMIT = 0.593

# Generic 5 MW reference curve: cubic rise to rated power at ~11.4 m/s,
# then Cp rolls off to hold the 5000 kW plateau (rho 1.225, D 126 m).
DEFAULT_CP_TABLE: tuple[tuple[float, float], ...] = (
    (3.0, 0.400),
    (4.0, 0.450),
    (5.0, 0.470),
    (6.0, 0.480),
    (7.0, 0.480),
    (8.0, 0.480),
    (9.0, 0.478),
    (10.0, 0.470),
    (11.0, 0.455),
    (11.4, 0.442),
    (12.0, 0.379),
    (13.0, 0.298),
    (14.0, 0.239),
    (15.0, 0.194),
    (16.0, 0.160),
    (18.0, 0.112),
    (20.0, 0.082),
    (22.0, 0.062),
    (25.0, 0.042),
)


class NegativeSpeedError(ValueError):
    pass


@dataclass(frozen=True)
class WindModel:
    """Farm of identical turbines with a shared Cp curve.

    n_t          turbine count
    rho          air density, kg/m^3
    rotor_area   swept area per turbine, m^2
    cp_table     (speed m/s, Cp) knots, speeds strictly increasing
    rated_power  per-turbine rating, kW
    cut_in, cut_out  operating speed band, m/s
    wake_factor  uniform wake deficit in (0, 1]
    """

    n_t: int
    rho: float = 1.225
    rotor_area: float = 12468.98
    cp_table: tuple[tuple[float, float], ...] = DEFAULT_CP_TABLE
    rated_power: float = 5000.0
    cut_in: float = 3.0
    cut_out: float = 25.0
    wake_factor: float = 1.0
    _cp_interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n_t < 1:
            raise ValueError("n_t must be >= 1")
        speeds = np.array([s for s, _ in self.cp_table], dtype=float)
        cps = np.array([c for _, c in self.cp_table], dtype=float)
        if speeds.size < 2 or np.any(np.diff(speeds) <= 0):
            raise ValueError("cp_table speeds must be strictly increasing")
        if np.any(cps < 0) or np.any(cps > BETZ_LIMIT):
            raise ValueError(f"Cp values must lie in [0, {BETZ_LIMIT}]")
        if not self.cut_in < self.cut_out:
            raise ValueError("cut_in must be below cut_out")
        if not 0 < self.wake_factor <= 1:
            raise ValueError("wake_factor must be in (0, 1]")
        if self.rho <= 0 or self.rotor_area <= 0 or self.rated_power <= 0:
            raise ValueError("rho, rotor_area and rated_power must be positive")
        object.__setattr__(self, "_cp_interp", PchipInterpolator(speeds, cps, extrapolate=False))

    def cp(self, speed: float) -> float:
        """Power coefficient at a given speed, zero outside the table."""
        value = self._cp_interp(speed)
        return float(value) if np.isfinite(value) else 0.0


def load_cp_table(path) -> tuple[tuple[float, float], ...]:
    """Read a two-column (speed m/s, Cp) text file; header line optional."""
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            parts = line.replace(",", " ").split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                speed, cp = float(parts[0]), float(parts[1])
            except (ValueError, IndexError):
                if line_no == 1:
                    continue  # header
                raise ValueError(f"{path}: line {line_no} is not 'speed cp'") from None
            rows.append((speed, cp))
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two (speed, Cp) rows")
    return tuple(rows)


def _turbine_power(speed: float, m: WindModel) -> float:
    if speed < m.cut_in or speed > m.cut_out:
        return 0.0
    raw = max(0.0, 0.5 * m.rho * m.rotor_area * m.cp(speed) * speed**3) / 1000.0
    return min(raw * m.wake_factor, m.rated_power)


def available_wind_power(speeds, m: WindModel) -> float:
    """Total available farm power in kW for per-turbine or ambient speeds.

    ``speeds`` holds one entry per turbine, or a single ambient speed
    applied to every turbine.
    """
    arr = np.atleast_1d(np.asarray(speeds, dtype=float))
    if np.any(arr < 0):
        raise NegativeSpeedError(f"wind speed must be >= 0, got {arr.min()}")
    if arr.size == 1:
        return m.n_t * _turbine_power(float(arr[0]), m)
    if arr.size != m.n_t:
        raise ValueError(f"expected 1 or {m.n_t} speeds, got {arr.size}")
    return float(sum(_turbine_power(float(s), m) for s in arr))


def wind_output(setpoint: float, speeds, m: WindModel) -> float:
    """Delivered power: the setpoint saturated by current availability."""
    return min(setpoint, available_wind_power(speeds, m))
