"""Scenario configuration: a flat, diff-friendly ``section.key = value``
text format, plus builders that turn a validated config into model
objects.

Capacities are listed in MW (as rated), setpoint limits in kW; the MW
values are converted exactly once, inside the builders.  Unknown keys are
rejected by name; validation failures name the violated constraint.
"""

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .controller import ControllerConfig
from .costs import CostConfig
from .modes import Mode
from .plants import BatteryState, PlantLimits, SolarModel, WindModel, load_cp_table
from .units import mw_to_kw

# Mode presets for the cost gains, applied when the cost block is omitted.
COST_PRESETS = {Mode.CHARGING: (45.0, 2.0), Mode.DISCHARGING: (10.0, 80.0)}

SUPPORTED_COMPONENTS = "wind,solar,battery"


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


@dataclass(frozen=True)
class PlantBlock:
    num_turbines: int = 10
    wind_capacity_mw: float = 50.0
    solar_capacity_mw: float = 100.0
    battery_capacity_mw: float = 20.0
    battery_hours: float = 4.0
    wake_factor: float = 1.0
    air_density: float = 1.225
    rotor_area_m2: float = 12468.98
    cut_in_ms: float = 3.0
    cut_out_ms: float = 25.0
    cp_table_file: str = ""
    solar_area_m2: float = 0.0  # 0 derives the area from the solar rating
    solar_eta_ref: float = 0.2
    solar_temp_coeff: float = 0.004
    solar_t_ref_c: float = 25.0
    solar_r_b: float = 1.0
    solar_r_d: float = 1.0
    solar_r_r: float = 0.0


@dataclass(frozen=True)
class ControllerBlock:
    dt_s: float = 0.03
    plant_dt_s: float = 0.01
    eta: float = 0.95
    beta: float = 1.0
    battery_mode: str = "discharge"
    components: str = SUPPORTED_COMPONENTS
    rate_limit_wind_kw_s: float = 2000.0
    rate_limit_solar_kw_s: float = 2000.0
    u0: str = "proportional"


@dataclass(frozen=True)
class LimitsBlock:
    p_max_w_kw: float = 50000.0
    p_max_s_kw: float = 100000.0
    p_max_b_kw: float = 20000.0
    p_min_b_kw: float = -20000.0


@dataclass(frozen=True)
class BatteryBlock:
    soc0: float = 0.5
    soc_min: float = 0.1
    soc_max: float = 0.9
    r_max_kw_s: float = 2000.0
    r_min_kw_s: float = -2000.0


@dataclass(frozen=True)
class CostBlock:
    # Zero means "use the mode preset"; resolved at load time.
    q_r: float = 0.0
    q_b: float = -1.0


@dataclass(frozen=True)
class ProfilesBlock:
    file: str = ""
    seed: int = 1
    wind_mean_ms: float = 9.5
    dni_start_wm2: float = 600.0
    dni_end_wm2: float = 1000.0
    dhi_wm2: float = 100.0
    tair_c: float = 25.0
    demand_base_kw: float = 77500.0
    demand_variation_kw: float = 2000.0
    demand_period_s: float = 120.0


@dataclass(frozen=True)
class SummaryBlock:
    settle_s: float = 60.0
    rmse_pct_max: float = 5.0


@dataclass(frozen=True)
class VerifyBlock:
    seed: int = 2025
    n_oracle: int = 20
    n_invariance_starts: int = 100
    invariance_steps: int = 1000
    n_gradient_points: int = 100


@dataclass(frozen=True)
class ScenarioConfig:
    plant: PlantBlock = field(default_factory=PlantBlock)
    controller: ControllerBlock = field(default_factory=ControllerBlock)
    limits: LimitsBlock = field(default_factory=LimitsBlock)
    battery: BatteryBlock = field(default_factory=BatteryBlock)
    cost: CostBlock = field(default_factory=CostBlock)
    profiles: ProfilesBlock = field(default_factory=ProfilesBlock)
    summary: SummaryBlock = field(default_factory=SummaryBlock)
    verify: VerifyBlock = field(default_factory=VerifyBlock)
    horizon_s: float = 600.0

    @property
    def mode(self) -> Mode:
        return Mode.from_string(self.controller.battery_mode)


_SECTIONS = {
    "plant": PlantBlock,
    "controller": ControllerBlock,
    "limits": LimitsBlock,
    "battery": BatteryBlock,
    "cost": CostBlock,
    "profiles": ProfilesBlock,
    "summary": SummaryBlock,
    "verify": VerifyBlock,
}
_TOP_LEVEL = {"horizon_s": float}


def _known_keys() -> dict[str, type]:
    keys: dict[str, type] = {}
    for section, cls in _SECTIONS.items():
        for f in fields(cls):
            keys[f"{section}.{f.name}"] = f.type if isinstance(f.type, type) else type(f.default)
    keys.update(_TOP_LEVEL)
    return keys


def _parse_value(raw: str, target: type, key: str, line_no: int):
    raw = raw.strip()
    try:
        if target is int:
            return int(raw)
        if target is float:
            return float(raw)
        return raw
    except ValueError:
        raise ParseError(f"line {line_no}: key {key!r} expects {target.__name__}, got {raw!r}") from None


def parse_config(text: str) -> ScenarioConfig:
    known = _known_keys()
    values: dict[str, object] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(f"line {line_no}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in known:
            raise ParseError(f"line {line_no}: unknown key {key!r}")
        if key in values:
            raise ParseError(f"line {line_no}: duplicate key {key!r}")
        values[key] = _parse_value(raw, known[key], key, line_no)

    sections = {}
    for section, cls in _SECTIONS.items():
        kwargs = {
            f.name: values[f"{section}.{f.name}"]
            for f in fields(cls)
            if f"{section}.{f.name}" in values
        }
        sections[section] = cls(**kwargs)
    horizon = values.get("horizon_s", ScenarioConfig.horizon_s)
    cfg = ScenarioConfig(horizon_s=float(horizon), **sections)
    cfg = _resolve_cost_presets(cfg)
    validate_config(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def write_config(cfg: ScenarioConfig) -> str:
    """Canonical text form; ``parse_config`` round-trips it exactly."""
    lines = [f"horizon_s = {cfg.horizon_s!r}"]
    for section, cls in _SECTIONS.items():
        block = getattr(cfg, section)
        lines.append("")
        for f in fields(cls):
            value = getattr(block, f.name)
            rendered = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{section}.{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def save_config(cfg: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(write_config(cfg))


def _resolve_cost_presets(cfg: ScenarioConfig) -> ScenarioConfig:
    q_r, q_b = cfg.cost.q_r, cfg.cost.q_b
    try:
        preset = COST_PRESETS[cfg.mode]
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if q_r == 0.0:
        q_r = preset[0]
    if q_b < 0.0:
        q_b = preset[1]
    return replace(cfg, cost=CostBlock(q_r=q_r, q_b=q_b))


def validate_config(cfg: ScenarioConfig) -> None:
    def fail(constraint: str) -> None:
        raise ValidationError(constraint)

    p, c, lim, bat = cfg.plant, cfg.controller, cfg.limits, cfg.battery
    if p.num_turbines < 1:
        fail("plant.num_turbines must be >= 1")
    for name in ("wind_capacity_mw", "solar_capacity_mw", "battery_capacity_mw", "battery_hours"):
        if getattr(p, name) <= 0:
            fail(f"plant.{name} must be > 0")
    if not 0 < p.wake_factor <= 1:
        fail("plant.wake_factor must be in (0, 1]")
    try:
        Mode.from_string(c.battery_mode)
    except ValueError as exc:
        fail(str(exc))
    if c.components != SUPPORTED_COMPONENTS:
        fail(f"controller.components must be {SUPPORTED_COMPONENTS!r}")
    if c.u0 not in ("proportional", "zero"):
        fail("controller.u0 must be 'proportional' or 'zero'")
    if c.dt_s <= 0 or c.plant_dt_s <= 0:
        fail("controller steps must be > 0")
    ratio = c.dt_s / c.plant_dt_s
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        fail("controller.dt_s must be an integer multiple of controller.plant_dt_s")
    if c.eta <= 0 or c.beta <= 0:
        fail("controller.eta and controller.beta must be > 0")
    if c.rate_limit_wind_kw_s <= 0 or c.rate_limit_solar_kw_s <= 0:
        fail("controller rate limits must be > 0")
    if lim.p_max_w_kw <= 0 or lim.p_max_w_kw > mw_to_kw(p.wind_capacity_mw) + 1e-9:
        fail("limits.p_max_w_kw must be in (0, wind capacity in kW]")
    if lim.p_max_s_kw <= 0 or lim.p_max_s_kw > mw_to_kw(p.solar_capacity_mw) + 1e-9:
        fail("limits.p_max_s_kw must be in (0, solar capacity in kW]")
    if lim.p_max_b_kw <= 0 or lim.p_max_b_kw > mw_to_kw(p.battery_capacity_mw) + 1e-9:
        fail("limits.p_max_b_kw must be in (0, battery capacity in kW]")
    if lim.p_min_b_kw > 0:
        fail("limits.p_min_b_kw must be <= 0")
    if not 0 <= bat.soc_min < bat.soc_max <= 1:
        fail("battery soc band must satisfy 0 <= soc_min < soc_max <= 1")
    if not bat.soc_min <= bat.soc0 <= bat.soc_max:
        fail("battery.soc0 must lie inside [soc_min, soc_max]")
    if bat.r_max_kw_s <= 0 or bat.r_min_kw_s > 0:
        fail("battery ramp bounds must satisfy r_min <= 0 < r_max")
    if cfg.cost.q_r <= 0:
        fail("cost.q_r must be > 0")
    if cfg.cost.q_b < 0:
        fail("cost.q_b must be >= 0")
    if cfg.horizon_s < 0:
        fail("horizon_s must be >= 0")
    if cfg.summary.settle_s < 0:
        fail("summary.settle_s must be >= 0")
    if not p.cut_in_ms < p.cut_out_ms:
        fail("plant.cut_in_ms must be below plant.cut_out_ms")


def build_wind_model(cfg: ScenarioConfig) -> WindModel:
    p = cfg.plant
    rated = mw_to_kw(p.wind_capacity_mw) / p.num_turbines
    kwargs = dict(
        n_t=p.num_turbines,
        rho=p.air_density,
        rotor_area=p.rotor_area_m2,
        rated_power=rated,
        cut_in=p.cut_in_ms,
        cut_out=p.cut_out_ms,
        wake_factor=p.wake_factor,
    )
    if p.cp_table_file:
        kwargs["cp_table"] = load_cp_table(p.cp_table_file)
    return WindModel(**kwargs)


def build_solar_model(cfg: ScenarioConfig) -> SolarModel:
    p = cfg.plant
    rating = mw_to_kw(p.solar_capacity_mw)
    # Default area: the plant reaches its rating at 1000 W/m^2 and t_ref.
    area = p.solar_area_m2 if p.solar_area_m2 > 0 else rating / p.solar_eta_ref
    return SolarModel(
        a_pv=area,
        rating_kw=rating,
        eta_ref=p.solar_eta_ref,
        temp_coeff=p.solar_temp_coeff,
        t_ref=p.solar_t_ref_c,
        r_b=p.solar_r_b,
        r_d=p.solar_r_d,
        r_r=p.solar_r_r,
    )


def build_battery_state(cfg: ScenarioConfig) -> BatteryState:
    capacity = mw_to_kw(cfg.plant.battery_capacity_mw) * cfg.plant.battery_hours
    return BatteryState.from_soc(
        capacity_c=capacity,
        soc=cfg.battery.soc0,
        soc_min=cfg.battery.soc_min,
        soc_max=cfg.battery.soc_max,
        p_max_b=cfg.limits.p_max_b_kw,
        p_min_b=cfg.limits.p_min_b_kw,
        r_min=cfg.battery.r_min_kw_s,
        r_max=cfg.battery.r_max_kw_s,
    )


def build_plant_limits(cfg: ScenarioConfig) -> PlantLimits:
    lim = cfg.limits
    return PlantLimits(
        p_max_w=lim.p_max_w_kw,
        p_max_s=lim.p_max_s_kw,
        p_max_b=lim.p_max_b_kw,
        p_min_b=lim.p_min_b_kw,
    )


def build_controller_config(cfg: ScenarioConfig) -> ControllerConfig:
    batt_rate = min(cfg.battery.r_max_kw_s, -cfg.battery.r_min_kw_s or cfg.battery.r_max_kw_s)
    if batt_rate <= 0:
        batt_rate = cfg.battery.r_max_kw_s
    rate = np.array(
        [
            cfg.controller.rate_limit_wind_kw_s,
            cfg.controller.rate_limit_solar_kw_s,
            batt_rate,
            cfg.controller.rate_limit_wind_kw_s,
            cfg.controller.rate_limit_solar_kw_s,
        ]
    )
    return ControllerConfig(
        eta=cfg.controller.eta, beta=cfg.controller.beta, dt=cfg.controller.dt_s, rate_limit=rate
    )


def build_cost_config(cfg: ScenarioConfig, demand0: float = 0.0) -> CostConfig:
    return CostConfig(q_r=cfg.cost.q_r, q_b=cfg.cost.q_b, p_r=demand0, mode=cfg.mode)
