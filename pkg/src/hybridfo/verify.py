"""Certification suites: the anti-drift checks behind the `verify` verb.

Three independent routes are compared against the controller:

* oracle equivalence — the feedback loop, run to equilibrium on frozen
  instances, must land on the brute-force enumerated minimizer;
* forward invariance — from feasible starts the tightened steps must
  never leave the constraint set;
* gradient fidelity — analytic cost gradients against central finite
  differences.

Frozen instances are drawn only from regimes where the minimizer is
isolated (the convergence theory assumes an isolated KKT point); the
demand-tracking cost is flat along load-split directions otherwise and
no per-coordinate comparison would be meaningful.  The sampler below
constructs such regimes by placing availability, demand and battery
bounds so that every free direction is pinned, and the oracle's
uniqueness probe double-checks each draw.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .controller import (
    ControllerConfig,
    ControlVector,
    EquilibriumResult,
    assemble_constraints,
    run_to_equilibrium,
)
from .costs import CostConfig, cost_gradient, cost_value
from .modes import Mode
from .oracle import FrozenProblem, solve_frozen_detailed
from .plants import BatteryLimitsOut, PlantLimits

TABLE_LIMITS = PlantLimits(p_max_w=50000.0, p_max_s=100000.0, p_max_b=20000.0, p_min_b=-20000.0)


@dataclass(frozen=True)
class OracleCase:
    problem: FrozenProblem
    u_controller: ControlVector
    u_oracle: ControlVector
    rel_error: float
    converged: bool
    redraws: int


@dataclass(frozen=True)
class SuiteReport:
    name: str
    passed: bool
    margin: float
    detail: str


def sample_frozen_instance(rng: np.random.Generator, mode: Mode) -> FrozenProblem:
    """Draw one frozen instance with an isolated minimizer.

    Families per mode (chosen uniformly; a coin flip mirrors the
    single-resource families between wind and solar):

    discharging — (a) availability deficit, battery setpoint interior;
    (b) deficit deep enough to pin the battery at its cap; (c) one
    resource absent, the other in surplus, battery idle at zero.

    charging — (a) deficit, so every available kW serves the load and
    charging stays at zero; (b) one resource absent, the other rich
    enough to serve demand and pin charging at the battery cap; (c) one
    resource absent with its availability row active, splitting it
    between load and charging.
    """
    delta = rng.uniform(100.0, 1500.0)  # q_b / q_r, the marginal trade in kW
    batt_up = rng.uniform(5000.0, 20000.0)
    batt_lo = -rng.uniform(0.0, 20000.0)
    family = int(rng.integers(0, 3))
    wind_side = bool(rng.integers(0, 2))  # which resource the 1-resource families keep

    if mode is Mode.DISCHARGING:
        q_r = rng.uniform(3.0, 15.0)
        if family == 0:
            w_bar = rng.uniform(5000.0, 45000.0)
            s_bar = rng.uniform(5000.0, 90000.0)
            p_r = w_bar + s_bar + rng.uniform(0.15, 0.85) * batt_up + delta
        elif family == 1:
            w_bar = rng.uniform(5000.0, 45000.0)
            s_bar = rng.uniform(5000.0, 90000.0)
            p_r = w_bar + s_bar + batt_up + delta + rng.uniform(200.0, 4000.0)
        else:
            avail = rng.uniform(15000.0, 45000.0)
            w_bar, s_bar = (avail, 0.0) if wind_side else (0.0, avail)
            p_r = rng.uniform(0.2, 0.8) * avail
    else:
        q_r = rng.uniform(3.0, 25.0)
        if family == 0:
            w_bar = rng.uniform(5000.0, 45000.0)
            s_bar = rng.uniform(5000.0, 90000.0)
            p_r = w_bar + s_bar + delta * rng.uniform(1.5, 3.0) + rng.uniform(500.0, 8000.0)
        elif family == 1:
            p_r = rng.uniform(10000.0, 40000.0)
            avail = p_r + batt_up + rng.uniform(2000.0, 8000.0)
            w_bar, s_bar = (avail, 0.0) if wind_side else (0.0, avail)
        else:
            p_r = rng.uniform(10000.0, 40000.0)
            charge_target = rng.uniform(500.0, batt_up - 500.0)
            avail = p_r - delta + charge_target
            w_bar, s_bar = (avail, 0.0) if wind_side else (0.0, avail)
    q_b = delta * q_r

    cost = CostConfig(q_r=float(q_r), q_b=float(q_b), p_r=float(min(p_r, 150000.0)), mode=mode)
    return FrozenProblem(
        p_bar_w=float(np.clip(w_bar, 0.0, 50000.0)),
        p_bar_s=float(np.clip(s_bar, 0.0, 100000.0)),
        batt=BatteryLimitsOut(lower=float(batt_lo), upper=float(batt_up)),
        limits=TABLE_LIMITS,
        cost=cost,
    )


def _controller_equilibrium(problem: FrozenProblem, max_steps: int = 400_000) -> EquilibriumResult:
    cs = assemble_constraints(
        problem.mode, problem.limits, problem.p_bar_w, problem.p_bar_s, problem.batt
    )
    cfg = ControllerConfig(eta=0.95, beta=1.0, dt=0.03, rate_limit=np.full(5, 2000.0))
    return run_to_equilibrium(
        ControlVector.zero(), cs, cfg, problem.cost, max_steps=max_steps, theta_tol=1e-6
    )


def oracle_equivalence_suite(
    n_instances: int, seed: int, modes: tuple[Mode, ...] = (Mode.CHARGING, Mode.DISCHARGING)
) -> list[OracleCase]:
    """Certify controller equilibria against the enumeration oracle."""
    rng = np.random.default_rng(seed)
    cases: list[OracleCase] = []
    for mode in modes:
        for _ in range(n_instances):
            redraws = 0
            while True:
                problem = sample_frozen_instance(rng, mode)
                detail = solve_frozen_detailed(problem)
                if detail.unique:
                    break
                redraws += 1
                if redraws > 50:
                    raise RuntimeError("sampler failed to find an isolated minimizer")
            eq = _controller_equilibrium(problem)
            u_c = eq.u.as_array()
            u_o = detail.u.as_array()
            rel = _per_coordinate_error(u_c, u_o)
            cases.append(
                OracleCase(
                    problem=problem,
                    u_controller=eq.u,
                    u_oracle=detail.u,
                    rel_error=rel,
                    converged=eq.converged,
                    redraws=redraws,
                )
            )
    return cases


def _per_coordinate_error(u_c: np.ndarray, u_o: np.ndarray, zero_tol: float = 1.0) -> float:
    """Max relative error over nonzero oracle coordinates; coordinates the
    oracle puts (essentially) at zero are compared absolutely against
    ``zero_tol`` kW."""
    worst = 0.0
    for a, b in zip(u_c, u_o):
        if abs(b) > zero_tol:
            worst = max(worst, abs(a - b) / abs(b))
        else:
            worst = max(worst, abs(a - b) / zero_tol * 1e-3)
    return worst


def forward_invariance_suite(
    n_starts: int, n_steps: int, seed: int, tol_kw: float = 1e-6
) -> tuple[float, int]:
    """Random feasible starts against constant constraints.

    Returns (worst violation in kW, number of starts that stayed within
    ``tol_kw``).  Gains are drawn with ``eta dt beta <= 1``.
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf
    ok = 0
    for _ in range(n_starts):
        mode = Mode.CHARGING if rng.integers(0, 2) else Mode.DISCHARGING
        w_bar = rng.uniform(0.0, 50000.0)
        s_bar = rng.uniform(0.0, 100000.0)
        batt = BatteryLimitsOut(lower=-rng.uniform(0.0, 20000.0), upper=rng.uniform(1000.0, 20000.0))
        cs = assemble_constraints(mode, TABLE_LIMITS, w_bar, s_bar, batt)
        eta = rng.uniform(0.5, 1.2)
        beta = rng.uniform(0.3, 3.0)
        dt = 0.03
        assert eta * dt * beta <= 1.0
        rate = np.full(5, rng.uniform(500.0, 4000.0))

        u0 = rng.uniform(0.0, 1.0, size=5) * np.array([w_bar, s_bar, batt.upper, w_bar, s_bar])
        if mode is Mode.DISCHARGING:
            u0[3] = u0[4] = 0.0
        else:
            u0[2] = 0.0
        conflicts = cs.a_ineq @ u0 - cs.b_ineq
        scale = 1.0
        for row, violation in enumerate(conflicts):
            if violation > 0:
                row_dot = cs.a_ineq[row] @ u0
                if row_dot > 0:
                    scale = min(scale, cs.b_ineq[row] / row_dot)
        u0 *= max(scale, 0.0) * rng.uniform(0.5, 1.0)

        gamma = rng.uniform(-1e5, 1e5, size=5)
        _, _, _, max_viol, _, code, _ = backend.frozen_loop(
            u0,
            cs.a_ineq,
            cs.b_ineq,
            cs.a_eq,
            cs.b_eq,
            rate,
            eta,
            beta,
            dt,
            backend.GAMMA_FIXED,
            0.0,
            0.0,
            0.0,
            gamma,
            n_steps,
            0.0,
        )
        if code == backend.LOOP_INFEASIBLE:
            raise RuntimeError("invariance run became infeasible from a feasible start")
        worst = max(worst, max_viol)
        if max_viol <= tol_kw:
            ok += 1
    return float(worst), ok


def gradient_check_suite(n_points: int, seed: int) -> float:
    """Central finite differences of the cost against the analytic
    gradient; returns the worst scaled relative error."""
    rng = np.random.default_rng(seed)
    h = 64.0  # power-of-two step; the cost is quadratic, so FD is exact
    worst = 0.0
    for mode in (Mode.CHARGING, Mode.DISCHARGING):
        for _ in range(n_points):
            cfg = CostConfig(
                q_r=rng.uniform(1.0, 50.0),
                q_b=rng.uniform(0.0, 100.0),
                p_r=rng.uniform(0.0, 1e5),
                mode=mode,
            )
            v = rng.uniform(0.0, 1e5, size=5)
            grad = cost_gradient(v, cfg)
            fd = np.zeros(5)
            for i in range(5):
                vp, vm = v.copy(), v.copy()
                vp[i] += h
                vm[i] -= h
                fd[i] = (cost_value(vp, cfg) - cost_value(vm, cfg)) / (2.0 * h)
            err = np.max(np.abs(grad - fd)) / (1.0 + np.max(np.abs(grad)))
            worst = max(worst, err)
    return float(worst)


def run_all(
    n_oracle: int,
    n_invariance_starts: int,
    invariance_steps: int,
    n_gradient_points: int,
    seed: int,
) -> list[SuiteReport]:
    reports = []

    cases = oracle_equivalence_suite(n_oracle, seed)
    worst = max(case.rel_error for case in cases)
    all_converged = all(case.converged for case in cases)
    reports.append(
        SuiteReport(
            name="oracle-equivalence",
            passed=worst <= 1e-3 and all_converged,
            margin=worst,
            detail=f"{len(cases)} instances, worst per-coordinate relative error {worst:.3e}",
        )
    )

    viol, ok = forward_invariance_suite(n_invariance_starts, invariance_steps, seed + 1)
    reports.append(
        SuiteReport(
            name="forward-invariance",
            passed=ok == n_invariance_starts,
            margin=viol,
            detail=f"{ok}/{n_invariance_starts} starts within 1e-6 kW, worst violation {viol:.3e} kW",
        )
    )

    err = gradient_check_suite(n_gradient_points, seed + 2)
    reports.append(
        SuiteReport(
            name="gradient-fidelity",
            passed=err <= 1e-6,
            margin=err,
            detail=f"worst scaled relative error {err:.3e} over {2 * n_gradient_points} points",
        )
    )
    return reports
