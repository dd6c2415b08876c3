"""Supervisory tracking costs and their measurement-space gradients.

The cost is a function of the five measurement channels ordered as
``(P_wl, P_wb, P_sl, P_sb, P_bl)``: wind-to-load, wind-to-battery,
solar-to-load, solar-to-battery, and battery-to-load power, all in kW.

Two mode-specific costs are provided.  Both share the quadratic demand
tracking term ``q_r/2 * (P_wl + P_sl + P_bl - p_r)^2``:

* charging: a reward ``-q_b * (P_wb + P_sb)`` for routing surplus power
  into storage;
* discharging: a penalty ``+q_b * P_bl`` that keeps the battery in
  reserve while renewables can cover the load.

While charging, the battery serves no load, so callers must pass
``P_bl = 0`` on the fifth channel; the gradient entry for that channel
is nevertheless the tracking error, as the discharge channel would see.
"""

from dataclasses import dataclass

import numpy as np

from .modes import Mode

N_CHANNELS = 5

# Channel indices of the measurement layout.
P_WL, P_WB, P_SL, P_SB, P_BL = range(N_CHANNELS)

# Measurement channel paired with each setpoint channel: the setpoint
# vector is ordered (wind->load, solar->load, battery->load,
# wind->battery, solar->battery).
MEASUREMENT_FOR_SETPOINT = (P_WL, P_SL, P_BL, P_WB, P_SB)


@dataclass(frozen=True)
class CostConfig:
    """Gains and demand reference for the supervisory cost.

    q_r   dimensionless demand-tracking gain, > 0
    q_b   dimensionless battery-usage gain, >= 0
    p_r   demand reference in kW, >= 0
    mode  battery operating mode the cost is written for
    """

    q_r: float
    q_b: float
    p_r: float
    mode: Mode

    def __post_init__(self) -> None:
        if not self.q_r > 0:
            raise ValueError(f"q_r must be > 0, got {self.q_r}")
        if self.q_b < 0:
            raise ValueError(f"q_b must be >= 0, got {self.q_b}")
        if self.p_r < 0:
            raise ValueError(f"p_r must be >= 0, got {self.p_r}")


def tracking_error(v: np.ndarray, cfg: CostConfig) -> float:
    """Scaled load-tracking error ``q_r * (P_wl + P_sl + P_bl - p_r)``."""
    return cfg.q_r * (v[P_WL] + v[P_SL] + v[P_BL] - cfg.p_r)


def cost_value(v: np.ndarray, cfg: CostConfig) -> float:
    """Evaluate the mode-specific cost at measurement vector ``v``."""
    v = np.asarray(v, dtype=float)
    track = 0.5 * cfg.q_r * (v[P_WL] + v[P_SL] + v[P_BL] - cfg.p_r) ** 2
    if cfg.mode is Mode.CHARGING:
        return track - cfg.q_b * (v[P_WB] + v[P_SB])
    return track + cfg.q_b * v[P_BL]


def cost_gradient(v: np.ndarray, cfg: CostConfig) -> np.ndarray:
    """Analytic gradient of :func:`cost_value` w.r.t. the five channels.

    Charging:    (e, -q_b, e, -q_b, e)
    Discharging: (e, 0, e, 0, e + q_b)

    with ``e`` the scaled tracking error.  Returned in measurement order.
    """
    v = np.asarray(v, dtype=float)
    e = tracking_error(v, cfg)
    g = np.zeros(N_CHANNELS)
    g[P_WL] = e
    g[P_SL] = e
    g[P_BL] = e
    if cfg.mode is Mode.CHARGING:
        g[P_WB] = -cfg.q_b
        g[P_SB] = -cfg.q_b
    else:
        g[P_BL] += cfg.q_b
    return g
