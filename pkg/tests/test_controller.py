"""Controller tests: constraint assembly, the update step, invariance."""

import numpy as np
import pytest

import hybridfo.controller as ctrl
from hybridfo import qp
from hybridfo.controller import (
    ConstraintSet,
    ControllerConfig,
    ControlVector,
    InfeasibleBoxError,
    MeasurementVector,
    QpInfeasibleError,
    StalledStepError,
    SupervisoryController,
    assemble_constraints,
    cost_gradient,
    fo_step,
    run_to_equilibrium,
    sensitivity,
)
from hybridfo.costs import MEASUREMENT_FOR_SETPOINT, CostConfig
from hybridfo.modes import Mode
from hybridfo.oracle import FrozenProblem, solve_frozen_detailed
from hybridfo.plants import BatteryLimitsOut, PlantLimits

LIMITS = PlantLimits(p_max_w=50000.0, p_max_s=100000.0, p_max_b=20000.0, p_min_b=-20000.0)
BATT = BatteryLimitsOut(lower=-20000.0, upper=20000.0)


def make_cfg(**kw):
    defaults = dict(eta=0.95, beta=1.0, dt=0.03, rate_limit=np.full(5, 2000.0))
    defaults.update(kw)
    return ControllerConfig(**defaults)


class TestControlVector:
    def test_mode_invariants(self):
        ControlVector(1.0, 2.0, 3.0, 0.0, 0.0).validate(Mode.DISCHARGING)
        ControlVector(1.0, 2.0, 0.0, 4.0, 5.0).validate(Mode.CHARGING)
        with pytest.raises(ValueError, match=">= 0"):
            ControlVector(-1.0, 0.0, 0.0, 0.0, 0.0).validate(Mode.CHARGING)
        with pytest.raises(ValueError, match="p_w_db"):
            ControlVector(1.0, 2.0, 0.0, 4.0, 5.0).validate(Mode.DISCHARGING)
        with pytest.raises(ValueError, match="p_b_dl"):
            ControlVector(1.0, 2.0, 3.0, 0.0, 0.0).validate(Mode.CHARGING)

    def test_array_round_trip(self):
        u = ControlVector(1.0, 2.0, 3.0, 4.0, 5.0)
        assert ControlVector.from_array(u.as_array()) == u


class TestMeasurementVector:
    def test_rejects_negative_renewables_and_nonfinite(self):
        with pytest.raises(ValueError, match=">= 0"):
            MeasurementVector(-1.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError, match="finite"):
            MeasurementVector(np.nan, 0.0, 0.0, 0.0, 0.0)


class TestSensitivity:
    def test_identity(self):
        np.testing.assert_array_equal(sensitivity(), np.eye(5))

    def test_symmetric(self):
        np.testing.assert_array_equal(sensitivity(), sensitivity().T)

    def test_gamma_assembly_is_paired_gradient(self):
        cfg = CostConfig(q_r=10.0, q_b=80.0, p_r=1000.0, mode=Mode.DISCHARGING)
        y = MeasurementVector(p_wl=100.0, p_wb=0.0, p_sl=200.0, p_sb=0.0, p_b=50.0)
        grad_y = cost_gradient(y, cfg)
        gamma = sensitivity().T @ grad_y[list(MEASUREMENT_FOR_SETPOINT)]
        np.testing.assert_allclose(gamma, grad_y[list(MEASUREMENT_FOR_SETPOINT)])
        # load channels share the tracking error, the battery channel
        # carries the extra usage penalty
        e = 10.0 * (100.0 + 200.0 + 50.0 - 1000.0)
        np.testing.assert_allclose(gamma, [e, e, e + 80.0, 0.0, 0.0])


class TestCostGradientMapping:
    def test_charging_ignores_measured_battery_power(self):
        # While charging, the battery measurement is charging power and
        # contributes nothing to the load-tracking error.
        cfg = CostConfig(q_r=45.0, q_b=2.0, p_r=50000.0, mode=Mode.CHARGING)
        y = MeasurementVector(p_wl=30000.0, p_wb=4000.0, p_sl=15000.0, p_sb=6000.0, p_b=10000.0)
        grad = cost_gradient(y, cfg)
        e = 45.0 * (30000.0 + 15000.0 - 50000.0)
        np.testing.assert_allclose(grad, [e, -2.0, e, -2.0, e])

    def test_discharging_counts_battery_toward_load(self):
        cfg = CostConfig(q_r=10.0, q_b=80.0, p_r=50000.0, mode=Mode.DISCHARGING)
        y = MeasurementVector(p_wl=20000.0, p_wb=0.0, p_sl=20000.0, p_sb=0.0, p_b=10000.0)
        e = 10.0 * (20000.0 + 20000.0 + 10000.0 - 50000.0)
        np.testing.assert_allclose(cost_gradient(y, cfg), [e, 0.0, e, 0.0, e + 80.0])


class TestAssembleConstraints:
    def test_wind_row_takes_the_tighter_cap(self):
        cs = assemble_constraints(Mode.CHARGING, LIMITS, 40000.0, 90000.0, BATT)
        np.testing.assert_array_equal(cs.a_ineq[0], [1, 0, 0, 1, 0])
        assert cs.b_ineq[0] == pytest.approx(40000.0)
        # rating binds when availability exceeds it
        cs = assemble_constraints(Mode.CHARGING, LIMITS, 60000.0, 90000.0, BATT)
        assert cs.b_ineq[0] == pytest.approx(50000.0)

    def test_discharging_equality_row(self):
        cs = assemble_constraints(Mode.DISCHARGING, LIMITS, 1000.0, 1000.0, BATT)
        np.testing.assert_array_equal(cs.a_eq, [[0, 0, 0, 1, 1]])
        assert cs.b_eq[0] == 0.0

    def test_charging_equality_pins_battery_load_channel(self):
        cs = assemble_constraints(Mode.CHARGING, LIMITS, 1000.0, 1000.0, BATT)
        np.testing.assert_array_equal(cs.a_eq, [[0, 0, 1, 0, 0]])

    def test_zero_availability_forces_zero_setpoint(self):
        cs = assemble_constraints(Mode.DISCHARGING, LIMITS, 0.0, 5000.0, BATT)
        assert cs.b_ineq[0] == 0.0  # with u >= 0 this pins the wind total at 0

    def test_battery_rows_per_mode(self):
        dis = assemble_constraints(Mode.DISCHARGING, LIMITS, 1.0, 1.0, BATT)
        np.testing.assert_array_equal(dis.a_ineq[2], [0, 0, 1, 0, 0])
        chg = assemble_constraints(Mode.CHARGING, LIMITS, 1.0, 1.0, BATT)
        np.testing.assert_array_equal(chg.a_ineq[2], [0, 0, 0, 1, 1])

    def test_empty_battery_interval_rejected(self):
        with pytest.raises(InfeasibleBoxError):
            assemble_constraints(
                Mode.CHARGING, LIMITS, 1.0, 1.0, BatteryLimitsOut(lower=5.0, upper=-5.0)
            )


class TestFoStep:
    def test_stationary_point_stays_put(self):
        cs = assemble_constraints(Mode.DISCHARGING, LIMITS, 30000.0, 60000.0, BATT)
        u = ControlVector(10000.0, 20000.0, 0.0, 0.0, 0.0)
        # zero gradient: demand exactly met with q_b = 0
        cost = CostConfig(q_r=10.0, q_b=0.0, p_r=30000.0, mode=Mode.DISCHARGING)
        y = MeasurementVector(10000.0, 0.0, 20000.0, 0.0, 0.0)
        result = fo_step(u, y, cs, make_cfg(), cost)
        np.testing.assert_allclose(result.theta, 0.0, atol=1e-9)
        np.testing.assert_allclose(result.u_next.as_array(), u.as_array(), atol=1e-9)

    def test_violated_row_contracts_geometrically(self):
        cfg = make_cfg()
        cs = assemble_constraints(Mode.DISCHARGING, LIMITS, 20000.0, 60000.0, BATT)
        # wind total exceeds availability by 1500 kW, within the rate budget
        u = ControlVector(21500.0, 10000.0, 0.0, 0.0, 0.0)
        cost = CostConfig(q_r=10.0, q_b=0.0, p_r=31500.0, mode=Mode.DISCHARGING)
        y = MeasurementVector(20000.0, 0.0, 10000.0, 0.0, 0.0)
        g_before = cs.a_ineq @ u.as_array() - cs.b_ineq
        result = fo_step(u, y, cs, cfg, cost)
        g_after = cs.a_ineq @ result.u_next.as_array() - cs.b_ineq
        shrink = 1.0 - cfg.eta * cfg.dt * cfg.beta
        for row in range(len(g_before)):
            if g_before[row] > 0:
                assert g_after[row] <= g_before[row] * shrink + 1e-9

    def test_infeasible_qp_raises(self):
        # rate budget far too small to decay a huge violation
        cs = ConstraintSet(
            a_ineq=np.array([[1.0, 0, 0, 0, 0]]),
            b_ineq=np.array([0.0]),
            a_eq=np.zeros((0, 5)),
            b_eq=np.zeros(0),
        )
        u = ControlVector(1e6, 0.0, 0.0, 0.0, 0.0)
        cost = CostConfig(q_r=1.0, q_b=0.0, p_r=0.0, mode=Mode.DISCHARGING)
        y = MeasurementVector(0.0, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(QpInfeasibleError):
            fo_step(u, y, cs, make_cfg(rate_limit=np.full(5, 1.0)), cost)

    def test_mode_equality_exact_along_trajectory(self):
        cfg = make_cfg()
        cs = assemble_constraints(Mode.DISCHARGING, LIMITS, 30000.0, 60000.0, BATT)
        cost = CostConfig(q_r=10.0, q_b=80.0, p_r=70000.0, mode=Mode.DISCHARGING)
        u = ControlVector.zero()
        for _ in range(500):
            y = MeasurementVector(*np.maximum(u.as_array(), 0.0)[[0, 3, 1, 4, 2]])
            u = fo_step(u, y, cs, cfg, cost).u_next
            arr = u.as_array()
            assert abs(arr[3] + arr[4]) <= 1e-6


class TestSupervisoryController:
    def test_initial_control_clipped_into_mode_box(self):
        cost = CostConfig(q_r=10.0, q_b=80.0, p_r=0.0, mode=Mode.DISCHARGING)
        c = SupervisoryController(make_cfg(), cost, ControlVector(-5.0, 1.0, 2.0, 3.0, 4.0))
        np.testing.assert_allclose(c.u.as_array(), [0.0, 1.0, 2.0, 0.0, 0.0])
        cost = CostConfig(q_r=10.0, q_b=80.0, p_r=0.0, mode=Mode.CHARGING)
        c = SupervisoryController(make_cfg(), cost, ControlVector(1.0, 1.0, 2.0, 3.0, 4.0))
        np.testing.assert_allclose(c.u.as_array(), [1.0, 1.0, 0.0, 3.0, 4.0])

    def test_two_consecutive_iteration_caps_stall(self, monkeypatch):
        cost = CostConfig(q_r=10.0, q_b=80.0, p_r=0.0, mode=Mode.DISCHARGING)
        c = SupervisoryController(make_cfg(), cost, ControlVector.zero())
        cs = assemble_constraints(Mode.DISCHARGING, LIMITS, 1000.0, 1000.0, BATT)
        y = MeasurementVector(0.0, 0.0, 0.0, 0.0, 0.0)

        capped = qp.QpSolution(
            theta=np.zeros(5),
            active_set=(),
            kkt_residual=1.0,
            status=qp.QpStatus.MAX_ITERATIONS,
        )
        monkeypatch.setattr(ctrl.qp, "solve", lambda *a, **k: capped)
        c.step(y, cs)
        with pytest.raises(StalledStepError):
            c.step(y, cs)

    def test_counter_resets_after_clean_solve(self, monkeypatch):
        cost = CostConfig(q_r=10.0, q_b=80.0, p_r=0.0, mode=Mode.DISCHARGING)
        c = SupervisoryController(make_cfg(), cost, ControlVector.zero())
        cs = assemble_constraints(Mode.DISCHARGING, LIMITS, 1000.0, 1000.0, BATT)
        y = MeasurementVector(0.0, 0.0, 0.0, 0.0, 0.0)
        capped = qp.QpSolution(
            theta=np.zeros(5), active_set=(), kkt_residual=1.0, status=qp.QpStatus.MAX_ITERATIONS
        )
        clean = qp.QpSolution(
            theta=np.zeros(5), active_set=(), kkt_residual=0.0, status=qp.QpStatus.OPTIMAL
        )
        answers = iter([capped, clean, capped, capped])
        monkeypatch.setattr(ctrl.qp, "solve", lambda *a, **k: next(answers))
        c.step(y, cs)
        c.step(y, cs)
        c.step(y, cs)
        with pytest.raises(StalledStepError):
            c.step(y, cs)


class TestForwardInvariance:
    def test_randomized_feasible_starts_stay_feasible(self):
        from hybridfo.verify import forward_invariance_suite

        worst, ok = forward_invariance_suite(n_starts=60, n_steps=400, seed=4)
        assert ok == 60
        assert worst <= 1e-6

    def test_attraction_from_infeasible_start(self):
        cfg = make_cfg()
        cs = assemble_constraints(Mode.DISCHARGING, LIMITS, 20000.0, 40000.0, BATT)
        # violates both availability rows, within the rate budget
        u = np.array([21000.0, 41500.0, 0.0, 0.0, 0.0])
        cost = CostConfig(q_r=1.0, q_b=1.0, p_r=70000.0, mode=Mode.DISCHARGING)
        prev = cs.a_ineq @ u - cs.b_ineq
        for _ in range(1200):
            y = MeasurementVector(*np.maximum(u, 0.0)[[0, 3, 1, 4, 2]])
            u = fo_step(ControlVector.from_array(u), y, cs, cfg, cost).u_next.as_array()
            cur = cs.a_ineq @ u - cs.b_ineq
            for row in range(len(cur)):
                if prev[row] > 0:
                    assert cur[row] <= prev[row] + 1e-9
            prev = cur
        assert np.max(prev) <= 1e-6


class TestEquilibrium:
    @pytest.mark.parametrize("mode", [Mode.CHARGING, Mode.DISCHARGING])
    def test_fixed_point_matches_oracle(self, mode):
        if mode is Mode.DISCHARGING:
            problem = FrozenProblem(
                p_bar_w=20000.0,
                p_bar_s=30000.0,
                batt=BatteryLimitsOut(lower=-20000.0, upper=15000.0),
                limits=LIMITS,
                cost=CostConfig(q_r=8.0, q_b=4000.0, p_r=58000.0, mode=mode),
            )
        else:
            problem = FrozenProblem(
                p_bar_w=0.0,
                p_bar_s=60000.0,
                batt=BatteryLimitsOut(lower=-20000.0, upper=10000.0),
                limits=LIMITS,
                cost=CostConfig(q_r=20.0, q_b=4000.0, p_r=30000.0, mode=mode),
            )
        cs = assemble_constraints(mode, LIMITS, problem.p_bar_w, problem.p_bar_s, problem.batt)
        result = run_to_equilibrium(
            ControlVector.zero(), cs, make_cfg(), problem.cost, max_steps=300_000
        )
        assert result.converged
        detail = solve_frozen_detailed(problem)
        assert detail.unique
        u_eq, u_star = result.u.as_array(), detail.u.as_array()
        for a, b in zip(u_eq, u_star):
            if abs(b) > 1.0:
                assert abs(a - b) <= 1e-3 * abs(b)
            else:
                assert abs(a - b) <= 1.0
