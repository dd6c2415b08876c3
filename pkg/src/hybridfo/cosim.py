"""Deterministic time-stepped closed loop.

Replaces a federated co-simulation with an in-process loop: interpolate
disturbances, run the controller at its own (slower) rate with freshly
measured availability, evaluate the plants against the held setpoints,
integrate the battery, and log one record per plant step.  Identical
config and seed give a bit-identical log.
"""

from dataclasses import dataclass, field

import numpy as np

from . import profiles as profiles_mod
from .config import (
    ScenarioConfig,
    build_battery_state,
    build_controller_config,
    build_cost_config,
    build_plant_limits,
    build_solar_model,
    build_wind_model,
)
from .controller import (
    U_BL,
    U_SB,
    U_SL,
    U_WB,
    U_WL,
    ControlVector,
    MeasurementVector,
    SupervisoryController,
    assemble_constraints,
)
from .modes import Mode
from .plants import (
    available_solar_power,
    available_wind_power,
    battery_limits,
    battery_step,
    solar_output,
    total_irradiance,
    wind_output,
)
from .profiles import DisturbanceProfile

LOG_COLUMNS = (
    "t_s",
    "u_w_dl_kw",
    "u_s_dl_kw",
    "u_b_dl_kw",
    "u_w_db_kw",
    "u_s_db_kw",
    "y_wl_kw",
    "y_wb_kw",
    "y_sl_kw",
    "y_sb_kw",
    "y_b_kw",
    "avail_wind_kw",
    "avail_solar_kw",
    "batt_soc",
    "batt_energy_kwh",
    "demand_kw",
    "qp_status",
    "active_set_size",
    "tracking_error_kw",
)


class SimulationStepError(RuntimeError):
    """Controller or plant failure, annotated with the simulation time."""


@dataclass
class SimLog:
    """Append-only per-plant-step records."""

    rows: list[tuple] = field(default_factory=list)

    def append(self, row: tuple) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        idx = LOG_COLUMNS.index(name)
        return np.array([row[idx] for row in self.rows])

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(",".join(LOG_COLUMNS) + "\n")
            for row in self.rows:
                handle.write(",".join(_format_cell(v) for v in row) + "\n")


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.6g}"


def build_profile(cfg: ScenarioConfig, seed: int | None = None) -> DisturbanceProfile:
    """Profile columns from the CSV when given, synthesized otherwise."""
    p = cfg.profiles
    seed = p.seed if seed is None else seed
    horizon = cfg.horizon_s

    columns: dict[str, np.ndarray] = {}
    if p.file:
        columns = profiles_mod.read_profile_csv(p.file)
        grid = columns["t_s"]
    else:
        grid = profiles_mod.default_grid(max(horizon, profiles_mod.GRID_STEP_S))

    if "wind_ms" not in columns:
        _, wind = profiles_mod.synth_wind_profile(p.wind_mean_ms, grid[-1], seed, grid=grid)
        columns["wind_ms"] = wind
    if "demand_kw" not in columns:
        _, demand = profiles_mod.synth_demand_profile(
            p.demand_base_kw, p.demand_variation_kw, p.demand_period_s, seed, grid[-1], grid=grid
        )
        columns["demand_kw"] = demand
    if "dni_wm2" not in columns:
        columns["dni_wm2"] = profiles_mod.ramp(p.dni_start_wm2, p.dni_end_wm2, grid[-1], grid)
    if "dhi_wm2" not in columns:
        columns["dhi_wm2"] = np.full(grid.shape, p.dhi_wm2)
    if "tair_c" not in columns:
        columns["tair_c"] = np.full(grid.shape, p.tair_c)

    return DisturbanceProfile(
        t=grid,
        wind_ms=columns["wind_ms"],
        dni_wm2=columns["dni_wm2"],
        dhi_wm2=columns["dhi_wm2"],
        tair_c=columns["tair_c"],
        demand_kw=columns["demand_kw"],
    )


def _initial_control(
    cfg: ScenarioConfig, mode: Mode, avail_w: float, avail_s: float, batt_upper: float, demand: float
) -> ControlVector:
    """Feasible starting setpoints.

    "zero" starts from the origin; "proportional" splits the initial
    demand across the load channels in proportion to availability (with a
    5% back-off from the availability rows) and lets the battery cover
    any remainder in discharging mode.
    """
    if cfg.controller.u0 == "zero":
        return ControlVector.zero()
    w_cap = 0.95 * min(avail_w, cfg.limits.p_max_w_kw)
    s_cap = 0.95 * min(avail_s, cfg.limits.p_max_s_kw)
    total = w_cap + s_cap
    share = min(1.0, demand / total) if total > 0 else 0.0
    u = np.zeros(5)
    u[U_WL] = w_cap * share
    u[U_SL] = s_cap * share
    if mode is Mode.DISCHARGING:
        gap = demand - u[U_WL] - u[U_SL]
        u[U_BL] = float(np.clip(gap, 0.0, 0.9 * max(batt_upper, 0.0)))
    return ControlVector.from_array(u)


def run(cfg: ScenarioConfig, profile: DisturbanceProfile | None = None, seed: int | None = None) -> SimLog:
    """Run the closed loop for ``cfg.horizon_s`` simulated seconds."""
    mode = cfg.mode
    wind_model = build_wind_model(cfg)
    solar_model = build_solar_model(cfg)
    limits = build_plant_limits(cfg)
    batt = build_battery_state(cfg)
    ctrl_cfg = build_controller_config(cfg)
    if profile is None:
        profile = build_profile(cfg, seed=seed)

    dt_p = cfg.controller.plant_dt_s
    dt_c = cfg.controller.dt_s
    ratio = int(round(dt_c / dt_p))
    n_steps = int(round(cfg.horizon_s / dt_p))
    log = SimLog()
    if n_steps == 0:
        return log

    wind0, dni0, dhi0, tair0, demand0 = profile.sample(0.0)
    avail_w0 = available_wind_power(wind0, wind_model)
    avail_s0 = available_solar_power(total_irradiance(dni0, dhi0, solar_model), tair0, solar_model)
    batt_lim0 = battery_limits(batt, dt_c, mode)
    u0 = _initial_control(cfg, mode, avail_w0, avail_s0, batt_lim0.upper, demand0)
    controller = SupervisoryController(ctrl_cfg, build_cost_config(cfg, demand0), u0)

    # Initial sensor reading, taken before the first control update.
    y_last = _evaluate_renewables(controller.u, wind0, dni0, dhi0, tair0, wind_model, solar_model)
    y_last = MeasurementVector(*y_last, 0.0)

    qp_status = "none"
    active_size = 0
    for k in range(n_steps):
        t = k * dt_p
        wind, dni, dhi, tair, demand = profile.sample(t)
        i_t = total_irradiance(dni, dhi, solar_model)
        avail_w = available_wind_power(wind, wind_model)
        avail_s = available_solar_power(i_t, tair, solar_model)

        if k % ratio == 0:
            try:
                cs = assemble_constraints(
                    mode, limits, avail_w, avail_s, battery_limits(batt, dt_c, mode)
                )
                controller.step(y_last, cs, demand)
            except Exception as exc:
                raise SimulationStepError(f"t = {t:.6g} s: {exc}") from exc
            assert controller.last_solution is not None
            qp_status = controller.last_solution.status.value
            active_size = len(controller.last_solution.active_set)

        u = controller.u.as_array()
        uc = np.maximum(u, 0.0)
        y_wl = wind_output(uc[U_WL], wind, wind_model)
        y_wb = wind_output(uc[U_WB], wind, wind_model)
        y_sl = solar_output(uc[U_SL], i_t, tair, solar_model)
        y_sb = solar_output(uc[U_SB], i_t, tair, solar_model)

        plant_lim = battery_limits(batt, dt_p, mode)
        if mode is Mode.DISCHARGING:
            p_b = min(uc[U_BL], plant_lim.upper)
        else:
            p_b = min(y_wb + y_sb, plant_lim.upper)
        p_b = max(p_b, 0.0)
        batt = battery_step(batt, p_b, dt_p, mode)

        y_last = MeasurementVector(y_wl, y_wb, y_sl, y_sb, p_b)
        delivered = y_wl + y_sl + (p_b if mode is Mode.DISCHARGING else 0.0)
        log.append(
            (
                t,
                u[U_WL],
                u[U_SL],
                u[U_BL],
                u[U_WB],
                u[U_SB],
                y_wl,
                y_wb,
                y_sl,
                y_sb,
                p_b,
                avail_w,
                avail_s,
                batt.soc,
                batt.energy_e,
                demand,
                qp_status,
                active_size,
                delivered - demand,
            )
        )
    return log


def _evaluate_renewables(u: ControlVector, wind, dni, dhi, tair, wind_model, solar_model):
    uc = np.maximum(u.as_array(), 0.0)
    i_t = total_irradiance(dni, dhi, solar_model)
    return (
        wind_output(uc[U_WL], wind, wind_model),
        wind_output(uc[U_WB], wind, wind_model),
        solar_output(uc[U_SL], i_t, tair, solar_model),
        solar_output(uc[U_SB], i_t, tair, solar_model),
    )
