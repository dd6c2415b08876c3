"""Plant model tests: wind availability, solar availability, battery."""

import numpy as np
import pytest

from hybridfo.modes import Mode
from hybridfo.plants import (
    BatteryState,
    InconsistentStateError,
    NegativeSpeedError,
    PlantLimits,
    SolarModel,
    WindModel,
    available_solar_power,
    available_wind_power,
    battery_limits,
    battery_step,
    load_cp_table,
    solar_output,
    total_irradiance,
    wind_output,
)
from hybridfo.plants.wind import DEFAULT_CP_TABLE
from scipy.interpolate import PchipInterpolator


@pytest.fixture
def one_turbine():
    return WindModel(n_t=1)


@pytest.fixture
def farm():
    return WindModel(n_t=10)


class TestWind:
    def test_zero_wind_gives_zero(self, farm):
        assert available_wind_power(0.0, farm) == 0.0

    def test_above_rated_clips_at_rating(self, one_turbine):
        assert available_wind_power(13.0, one_turbine) == pytest.approx(5000.0)

    def test_fig3_speed_against_direct_formula(self, one_turbine):
        # Independent evaluation of 0.5 rho A Cp w^3 with its own interpolant.
        speeds = np.array([s for s, _ in DEFAULT_CP_TABLE])
        cps = np.array([c for _, c in DEFAULT_CP_TABLE])
        cp = float(PchipInterpolator(speeds, cps)(9.8))
        expected = 0.5 * 1.225 * 12468.98 * cp * 9.8**3 / 1000.0
        assert available_wind_power(9.8, one_turbine) == pytest.approx(expected, rel=1e-12)

    def test_outside_cut_band_gives_zero(self, one_turbine):
        assert available_wind_power(2.9, one_turbine) == 0.0
        assert available_wind_power(25.5, one_turbine) == 0.0

    def test_ambient_speed_scales_with_turbine_count(self, farm, one_turbine):
        assert available_wind_power(9.0, farm) == pytest.approx(
            10 * available_wind_power(9.0, one_turbine)
        )

    def test_per_turbine_speeds(self, farm):
        speeds = np.full(10, 8.0)
        assert available_wind_power(speeds, farm) == pytest.approx(
            available_wind_power(8.0, farm)
        )
        with pytest.raises(ValueError, match="expected 1 or 10"):
            available_wind_power(np.full(3, 8.0), farm)

    def test_negative_speed_rejected(self, farm):
        with pytest.raises(NegativeSpeedError):
            available_wind_power(-1.0, farm)

    def test_wake_factor_scales_below_rating(self, one_turbine):
        waked = WindModel(n_t=1, wake_factor=0.8)
        assert available_wind_power(8.0, waked) == pytest.approx(
            0.8 * available_wind_power(8.0, one_turbine)
        )

    def test_monotone_up_to_rated_knot(self, one_turbine):
        grid = np.linspace(3.0, 11.4, 400)
        values = np.array([available_wind_power(s, one_turbine) for s in grid])
        assert np.all(np.diff(values) >= -1e-9)

    def test_output_saturates_at_availability(self, farm):
        avail = available_wind_power(8.0, farm)
        assert wind_output(10000.0, 8.0, farm) == pytest.approx(10000.0)
        assert wind_output(60000.0, 8.0, farm) == pytest.approx(avail)
        assert wind_output(0.0, 8.0, farm) == 0.0

    def test_betz_violation_rejected(self):
        with pytest.raises(ValueError, match="Betz|Cp"):
            WindModel(n_t=1, cp_table=((3.0, 0.7), (10.0, 0.4)))

    def test_cp_table_from_file(self, tmp_path):
        path = tmp_path / "cp.txt"
        path.write_text("speed_ms cp\n3.0 0.40\n10.0 0.45\n25.0 0.05\n")
        table = load_cp_table(path)
        assert table == ((3.0, 0.40), (10.0, 0.45), (25.0, 0.05))
        # header line is optional
        path.write_text("3.0 0.40\n10.0 0.45\n")
        assert len(load_cp_table(path)) == 2


@pytest.fixture
def panel():
    return SolarModel(a_pv=1000.0, rating_kw=1e9, eta_ref=0.2, r_b=1.0, r_d=1.0, r_r=0.1)


class TestSolar:
    def test_night_is_zero(self, panel):
        assert total_irradiance(0.0, 0.0, panel) == 0.0
        assert available_solar_power(0.0, 25.0, panel) == 0.0

    def test_tilt_combination_hand_computed(self, panel):
        assert total_irradiance(800.0, 100.0, panel) == pytest.approx(990.0)

    def test_no_ground_reflection_reduces_to_two_terms(self):
        m = SolarModel(a_pv=10.0, rating_kw=100.0, r_b=0.9, r_d=0.8, r_r=0.0)
        assert total_irradiance(500.0, 200.0, m) == pytest.approx(500 * 0.9 + 200 * 0.8)

    def test_reference_temperature_point(self):
        m = SolarModel(a_pv=1000.0, rating_kw=1e9, eta_ref=0.2)
        assert available_solar_power(500.0, m.t_ref, m) == pytest.approx(100.0)

    def test_rating_cap_near_full_sun(self):
        # 100 MW plant with the derived default area reaches its rating
        # as irradiance approaches 1000 W/m^2.
        m = SolarModel(a_pv=100000.0 / 0.2, rating_kw=100000.0)
        avail = available_solar_power(995.0, m.t_ref, m)
        assert 0.99 * m.rating_kw <= avail <= m.rating_kw
        assert available_solar_power(1200.0, m.t_ref, m) == m.rating_kw

    def test_linear_in_irradiance_below_cap(self, panel):
        base = available_solar_power(250.0, 30.0, panel)
        assert available_solar_power(500.0, 30.0, panel) == pytest.approx(2 * base)

    def test_hot_panels_derate_and_never_go_negative(self, panel):
        cool = available_solar_power(800.0, 20.0, panel)
        hot = available_solar_power(800.0, 45.0, panel)
        assert hot < cool
        scorching = SolarModel(a_pv=10.0, rating_kw=10.0, temp_coeff=0.05)
        assert available_solar_power(800.0, 500.0, scorching) == 0.0

    def test_output_saturation(self, panel):
        avail = available_solar_power(700.0, 25.0, panel)
        assert solar_output(avail / 2, 700.0, 25.0, panel) == pytest.approx(avail / 2)
        assert solar_output(2 * avail, 700.0, 25.0, panel) == pytest.approx(avail)


@pytest.fixture
def battery():
    # 4-hour 20 MW battery at half charge.
    return BatteryState.from_soc(capacity_c=80000.0, soc=0.5)


class TestBatteryLimits:
    def test_headroom_at_one_hour_step(self, battery):
        lim = battery_limits(battery, 3600.0, Mode.DISCHARGING, p_avail=25000.0)
        # c_h1 = (72000 - 40000) / 1 h = 32000 kW; c_h2 = 20000 caps it.
        assert lim.upper == pytest.approx(min(32000.0, 20000.0, 25000.0))

    def test_full_battery_stops_charging(self):
        full = BatteryState.from_soc(capacity_c=80000.0, soc=0.9)
        lim = battery_limits(full, 3600.0, Mode.CHARGING)
        assert lim.upper == pytest.approx(0.0)

    def test_rated_power_from_configuration(self, battery):
        assert battery.p_max_b == 20000.0
        lim = battery_limits(battery, 0.03, Mode.CHARGING)
        assert lim.upper == pytest.approx(20000.0)

    def test_p_avail_defaults_to_rating_and_applies_only_discharging(self, battery):
        dis = battery_limits(battery, 0.03, Mode.DISCHARGING, p_avail=5000.0)
        chg = battery_limits(battery, 0.03, Mode.CHARGING, p_avail=5000.0)
        assert dis.upper == pytest.approx(5000.0)
        assert chg.upper == pytest.approx(20000.0)

    def test_inconsistent_interval_raises(self):
        # p_avail below the lower power bound empties the interval
        with pytest.raises(InconsistentStateError):
            battery_limits(
                BatteryState.from_soc(80000.0, 0.5, p_min_b=-1000.0),
                3600.0,
                Mode.DISCHARGING,
                p_avail=-2000.0,
            )


class TestBatteryStep:
    def test_charging_arithmetic(self, battery):
        after = battery_step(battery, 20000.0, 36.0, Mode.CHARGING)  # 0.01 h
        assert after.energy_e == pytest.approx(40200.0)
        assert after.soc == pytest.approx(40200.0 / 80000.0)
        assert not after.clamped

    def test_zero_power_no_change(self, battery):
        after = battery_step(battery, 0.0, 36.0, Mode.DISCHARGING)
        assert after.energy_e == battery.energy_e

    def test_discharging_is_signed(self, battery):
        after = battery_step(battery, 20000.0, 36.0, Mode.DISCHARGING)
        assert after.energy_e == pytest.approx(39800.0)

    def test_clamp_flag_at_band_edge(self):
        near_full = BatteryState.from_soc(capacity_c=80000.0, soc=0.89999)
        after = battery_step(near_full, 20000.0, 3600.0, Mode.CHARGING)
        assert after.clamped
        assert after.energy_e == pytest.approx(72000.0)

    def test_energy_bookkeeping_over_random_run(self, battery):
        rng = np.random.default_rng(8)
        state = battery
        total = 0.0
        dt = 0.5
        for _ in range(2000):
            mode = Mode.CHARGING if rng.random() < 0.5 else Mode.DISCHARGING
            lim = battery_limits(state, dt, mode)
            p = rng.uniform(0.0, max(min(lim.upper, 20000.0), 0.0))
            state = battery_step(state, p, dt, mode)
            assert not state.clamped
            total += (p if mode is Mode.CHARGING else -p) * dt / 3600.0
        assert state.energy_e - battery.energy_e == pytest.approx(total, abs=1e-6)

    def test_soc_stays_in_band_under_feasible_setpoints(self):
        rng = np.random.default_rng(12)
        state = BatteryState.from_soc(capacity_c=2000.0, soc=0.5)
        dt = 30.0
        for _ in range(3000):
            mode = Mode.CHARGING if rng.random() < 0.6 else Mode.DISCHARGING
            lim = battery_limits(state, dt, mode)
            upper = lim.upper if mode is Mode.CHARGING else min(lim.upper, -lim.lower if lim.lower < 0 else lim.upper)
            p = rng.uniform(0.0, max(upper, 0.0))
            if mode is Mode.DISCHARGING:
                # the discharge interval caps by headroom, not by the energy
                # floor; respecting the floor is on the setpoint source here
                p = min(p, max((state.energy_e - state.e_min) / (dt / 3600.0), 0.0))
            state = battery_step(state, p, dt, mode)
            assert state.soc_min - 1e-9 <= state.soc <= state.soc_max + 1e-9


def test_plant_limits_invariants():
    with pytest.raises(ValueError):
        PlantLimits(p_max_w=0.0, p_max_s=1.0, p_max_b=1.0, p_min_b=-1.0)
    with pytest.raises(ValueError):
        PlantLimits(p_max_w=1.0, p_max_s=1.0, p_max_b=1.0, p_min_b=0.5)
    with pytest.raises(ValueError):
        PlantLimits(p_max_w=1.0, p_max_s=1.0, p_max_b=1.0, p_min_b=-1.0, p_min_w=1.0)
