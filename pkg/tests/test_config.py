"""Config parsing, validation, and round-trip."""

from dataclasses import replace

import pytest

from hybridfo.config import (
    ParseError,
    ScenarioConfig,
    ValidationError,
    load_config,
    parse_config,
    write_config,
)
from hybridfo.modes import Mode


class TestReferenceConfig:
    def test_table_values_parse_to_canonical_scenario(self, discharging_config_path):
        cfg = load_config(discharging_config_path)
        assert cfg.plant.num_turbines == 10
        assert cfg.plant.wind_capacity_mw == 50
        assert cfg.plant.solar_capacity_mw == 100
        assert cfg.plant.battery_capacity_mw == 20
        assert cfg.controller.dt_s == 0.03
        assert cfg.controller.eta == 0.95
        assert cfg.controller.beta == 1.0
        assert cfg.limits.p_max_w_kw == 50000
        assert cfg.limits.p_min_b_kw == -20000
        assert cfg.mode is Mode.DISCHARGING

    def test_discharge_cost_presets(self, discharging_config_path):
        cfg = load_config(discharging_config_path)
        assert cfg.cost.q_r == 10.0
        assert cfg.cost.q_b == 80.0

    def test_charge_cost_presets(self, charging_config_path):
        cfg = load_config(charging_config_path)
        assert cfg.cost.q_r == 45.0
        assert cfg.cost.q_b == 2.0


class TestParsing:
    def test_unknown_key_named(self):
        with pytest.raises(ParseError, match="plant.numm_turbines"):
            parse_config("plant.numm_turbines = 10\n")

    def test_bad_value_type_named(self):
        with pytest.raises(ParseError, match="plant.num_turbines"):
            parse_config("plant.num_turbines = ten\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ParseError, match="duplicate"):
            parse_config("horizon_s = 1\nhorizon_s = 2\n")

    def test_comments_and_blank_lines_ignored(self):
        cfg = parse_config("# comment\n\nhorizon_s = 12  # trailing\n")
        assert cfg.horizon_s == 12.0

    def test_invalid_battery_mode_rejected(self):
        with pytest.raises(ValidationError, match="hold"):
            parse_config("controller.battery_mode = hold\n")


class TestValidation:
    def test_limit_above_capacity_rejected(self):
        with pytest.raises(ValidationError, match="p_max_w_kw"):
            parse_config("plant.wind_capacity_mw = 40\nlimits.p_max_w_kw = 50000\n")

    def test_controller_step_must_divide(self):
        with pytest.raises(ValidationError, match="integer multiple"):
            parse_config("controller.dt_s = 0.025\ncontroller.plant_dt_s = 0.01\n")

    def test_soc_band_checked(self):
        with pytest.raises(ValidationError, match="soc0"):
            parse_config("battery.soc0 = 0.95\n")

    def test_unsupported_components_rejected(self):
        with pytest.raises(ValidationError, match="components"):
            parse_config("controller.components = wind,battery\n")


class TestRoundTrip:
    def test_default_round_trips(self):
        cfg = parse_config(write_config(parse_config("")))
        assert cfg == parse_config("")

    def test_randomized_round_trips(self):
        import numpy as np

        rng = np.random.default_rng(0)
        for _ in range(20):
            base = parse_config("")
            cfg = replace(
                base,
                horizon_s=float(rng.uniform(0, 3600)),
                plant=replace(
                    base.plant,
                    wind_capacity_mw=float(rng.uniform(10, 80)),
                    wake_factor=float(rng.uniform(0.5, 1.0)),
                ),
                limits=replace(base.limits, p_max_w_kw=float(rng.uniform(1, 10) * 1000)),
                profiles=replace(
                    base.profiles,
                    seed=int(rng.integers(0, 2**31)),
                    wind_mean_ms=float(rng.uniform(4, 12)),
                ),
            )
            assert parse_config(write_config(cfg)) == cfg

    def test_written_file_loads(self, tmp_path):
        from hybridfo.config import save_config

        cfg = ScenarioConfig()
        path = tmp_path / "c.cfg"
        save_config(cfg, path)
        assert load_config(path) == parse_config(write_config(cfg))
