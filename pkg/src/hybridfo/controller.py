"""The supervisory feedback-optimization control law.

Each step solves a projection QP around the current setpoints ``u``:

    theta* = argmin ||theta + gamma||^2
             s.t.  A theta <= -beta (A u - b)      (tightened inequalities)
                   C theta  = -beta (C u - d)      (tightened equalities)
                   |theta_i| <= rate_i             (rate boxes)

with ``gamma`` the measurement-space cost gradient mapped into setpoint
space, then integrates ``u += eta * dt * theta*`` (explicit Euler).

Setpoint order: (wind->load, solar->load, battery->load, wind->battery,
solar->battery).  Measurement order: (wind->load, wind->battery,
solar->load, solar->battery, battery).  The plant sensitivity is the
identity per paired channel; the pairing permutation lives in
``costs.MEASUREMENT_FOR_SETPOINT`` and is applied exactly once, when
``gamma`` is assembled.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import backend, qp
from .costs import MEASUREMENT_FOR_SETPOINT, CostConfig, cost_gradient as _cost_gradient_v
from .modes import Mode
from .plants import BatteryLimitsOut, PlantLimits

N_U = 5

# Setpoint channel indices.
U_WL, U_SL, U_BL, U_WB, U_SB = range(N_U)

MODE_EQUALITY_TOL = 1e-6


class InfeasibleBoxError(ValueError):
    """Battery setpoint interval is empty; constraint assembly cannot proceed."""


class QpInfeasibleError(RuntimeError):
    """The projection QP has no feasible rate; fatal for the step."""


class StalledStepError(RuntimeError):
    """Two consecutive steps hit the QP iteration cap."""


@dataclass(frozen=True)
class ControlVector:
    """The five supervisory setpoints, kW."""

    p_w_dl: float
    p_s_dl: float
    p_b_dl: float
    p_w_db: float
    p_s_db: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_w_dl, self.p_s_dl, self.p_b_dl, self.p_w_db, self.p_s_db])

    @classmethod
    def from_array(cls, u) -> "ControlVector":
        u = np.asarray(u, dtype=float)
        return cls(*(float(x) for x in u))

    @classmethod
    def zero(cls) -> "ControlVector":
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)

    def validate(self, mode: Mode, tol: float = MODE_EQUALITY_TOL) -> None:
        u = self.as_array()
        if np.min(u) < -tol:
            raise ValueError(f"setpoints must be >= 0, got {u}")
        if mode is Mode.DISCHARGING and abs(u[U_WB] + u[U_SB]) > tol:
            raise ValueError("discharging requires p_w_db + p_s_db = 0")
        if mode is Mode.CHARGING and abs(u[U_BL]) > tol:
            raise ValueError("charging requires p_b_dl = 0")


@dataclass(frozen=True)
class MeasurementVector:
    """The five plant outputs, kW."""

    p_wl: float
    p_wb: float
    p_sl: float
    p_sb: float
    p_b: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_wl, self.p_wb, self.p_sl, self.p_sb, self.p_b])

    def __post_init__(self) -> None:
        arr = self.as_array()
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"measurements must be finite, got {arr}")
        if min(self.p_wl, self.p_wb, self.p_sl, self.p_sb) < 0:
            raise ValueError("renewable measurements must be >= 0")


@dataclass(frozen=True)
class ControllerConfig:
    """Gains and step size of the integration law.

    eta         integration gain, 1/s
    beta        constraint-decay gain, 1/s
    dt          controller step, s
    rate_limit  per-setpoint rate bound, kW/s (battery channel carries
                the storage ramp limit min(r_max, -r_min))
    """

    eta: float
    beta: float
    dt: float
    rate_limit: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "rate_limit", np.broadcast_to(np.asarray(self.rate_limit, dtype=float), (N_U,)).copy()
        )
        if self.eta <= 0 or self.beta <= 0 or self.dt <= 0:
            raise ValueError("eta, beta and dt must be > 0")
        if np.any(self.rate_limit <= 0):
            raise ValueError("rate limits must be > 0 elementwise")


@dataclass(frozen=True)
class ConstraintSet:
    """Linear setpoint constraints ``a_ineq u <= b_ineq``, ``a_eq u = b_eq``."""

    a_ineq: np.ndarray
    b_ineq: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray

    def __post_init__(self) -> None:
        if self.a_ineq.shape[1] != N_U or self.a_eq.shape[1] != N_U:
            raise ValueError("constraint rows must have 5 columns")


def sensitivity() -> np.ndarray:
    """Setpoint-to-output sensitivity of the paired channels: identity.

    Kept as an explicit seam so non-unit plant gains can slot in later.
    """
    return np.eye(N_U)


def cost_gradient(y: MeasurementVector, cfg: CostConfig) -> np.ndarray:
    """Measurement-space cost gradient, ordered as the measurements.

    While charging, the battery measurement is charging power and its
    load contribution is zero by construction, so the tracking error is
    evaluated with a zero battery-load term.
    """
    p_bl = y.p_b if cfg.mode is Mode.DISCHARGING else 0.0
    v = np.array([y.p_wl, y.p_wb, y.p_sl, y.p_sb, p_bl])
    return _cost_gradient_v(v, cfg)


def assemble_constraints(
    mode: Mode,
    limits: PlantLimits,
    p_bar_w: float,
    p_bar_s: float,
    batt: BatteryLimitsOut,
) -> ConstraintSet:
    """Build the mode's setpoint constraints from measured availability.

    Rows: total wind and solar setpoints capped by min(rating,
    availability); the battery channel boxed by ``batt``; nonnegativity
    of every channel; and the mode equality that pins the inactive
    battery route.
    """
    if p_bar_w < 0 or p_bar_s < 0:
        raise ValueError("availability must be >= 0")
    if batt.lower > batt.upper:
        raise InfeasibleBoxError(
            f"battery interval empty: [{batt.lower:.6g}, {batt.upper:.6g}] kW"
        )

    rows = [
        [1.0, 0.0, 0.0, 1.0, 0.0],  # wind farm total
        [0.0, 1.0, 0.0, 0.0, 1.0],  # solar farm total
    ]
    rhs = [min(limits.p_max_w, p_bar_w), min(limits.p_max_s, p_bar_s)]

    if mode is Mode.DISCHARGING:
        batt_row = [0.0, 0.0, 1.0, 0.0, 0.0]
        eq_row = [0.0, 0.0, 0.0, 1.0, 1.0]
    else:
        batt_row = [0.0, 0.0, 0.0, 1.0, 1.0]
        eq_row = [0.0, 0.0, 1.0, 0.0, 0.0]
    rows.append(batt_row)
    rhs.append(batt.upper)
    rows.append([-c for c in batt_row])
    rhs.append(-batt.lower)

    for i in range(N_U):
        row = [0.0] * N_U
        row[i] = -1.0
        rows.append(row)
        rhs.append(0.0)

    return ConstraintSet(
        a_ineq=np.array(rows),
        b_ineq=np.array(rhs, dtype=float),
        a_eq=np.array([eq_row]),
        b_eq=np.zeros(1),
    )


@dataclass(frozen=True)
class StepResult:
    u_next: ControlVector
    theta: np.ndarray
    qp_solution: qp.QpSolution


def fo_step(
    u: ControlVector,
    y: MeasurementVector,
    cs: ConstraintSet,
    cfg: ControllerConfig,
    cost: CostConfig,
) -> StepResult:
    """One feedback-optimization update ``u+ = u + eta dt theta*``.

    Raises :class:`QpInfeasibleError` when the tightened QP is empty
    (over-tight rate limits or a constraint assembly bug).  A
    ``MAX_ITERATIONS`` QP status is returned in the result for the caller
    to track; the best iterate is still integrated.
    """
    u_arr = u.as_array()
    grad_y = cost_gradient(y, cost)
    gamma = sensitivity().T @ grad_y[list(MEASUREMENT_FOR_SETPOINT)]

    problem = qp.QpProblem(
        gamma=gamma,
        a_ineq=cs.a_ineq,
        b_ineq=-cfg.beta * (cs.a_ineq @ u_arr - cs.b_ineq),
        a_eq=cs.a_eq,
        b_eq=-cfg.beta * (cs.a_eq @ u_arr - cs.b_eq),
        lower=-cfg.rate_limit,
        upper=cfg.rate_limit,
    )
    solution = qp.solve(problem)
    if solution.status is qp.QpStatus.INFEASIBLE:
        raise QpInfeasibleError(
            "projection QP infeasible; rate limits cannot restore the constraints"
        )
    u_next = u_arr + cfg.eta * cfg.dt * solution.theta
    return StepResult(
        u_next=ControlVector.from_array(u_next),
        theta=solution.theta,
        qp_solution=solution,
    )


class SupervisoryController:
    """Owns the setpoint state and advances it one measurement at a time.

    The initial control is clipped into the sign/mode box before the
    first step so forward invariance applies from step zero.  Two
    consecutive iteration-capped QP solves raise
    :class:`StalledStepError`.
    """

    def __init__(self, cfg: ControllerConfig, cost: CostConfig, u0: ControlVector):
        self.cfg = cfg
        self.cost = cost
        self.u = _clip_to_mode_box(u0, cost.mode)
        self.last_solution: qp.QpSolution | None = None
        self._consecutive_maxiter = 0

    def step(
        self, y: MeasurementVector, cs: ConstraintSet, demand: float | None = None
    ) -> ControlVector:
        cost = self.cost if demand is None else replace(self.cost, p_r=demand)
        result = fo_step(self.u, y, cs, self.cfg, cost)
        if result.qp_solution.status is qp.QpStatus.MAX_ITERATIONS:
            self._consecutive_maxiter += 1
            if self._consecutive_maxiter >= 2:
                raise StalledStepError("QP hit its iteration cap twice in a row")
        else:
            self._consecutive_maxiter = 0
        self.u = result.u_next
        self.last_solution = result.qp_solution
        return self.u


def _clip_to_mode_box(u: ControlVector, mode: Mode) -> ControlVector:
    arr = np.maximum(u.as_array(), 0.0)
    if mode is Mode.DISCHARGING:
        arr[U_WB] = 0.0
        arr[U_SB] = 0.0
    else:
        arr[U_BL] = 0.0
    return ControlVector.from_array(arr)


@dataclass(frozen=True)
class EquilibriumResult:
    u: ControlVector
    converged: bool
    steps: int
    theta_norm: float
    max_ineq_violation: float
    max_eq_violation: float


def run_to_equilibrium(
    u0: ControlVector,
    cs: ConstraintSet,
    cfg: ControllerConfig,
    cost: CostConfig,
    max_steps: int = 200_000,
    theta_tol: float = 1e-6,
) -> EquilibriumResult:
    """Iterate the law against frozen constraints and demand until
    ``||theta*|| <= theta_tol``.

    Uses the unsaturated plant identity (outputs equal setpoints), which
    holds while the trajectory respects the availability rows.  Runs in
    the active kernel backend, so long horizons stay cheap.
    """
    recipe = (
        backend.GAMMA_CHARGING if cost.mode is Mode.CHARGING else backend.GAMMA_DISCHARGING
    )
    u, steps, theta_norm, max_viol, max_eq, code, _ = backend.frozen_loop(
        u0.as_array(),
        cs.a_ineq,
        cs.b_ineq,
        cs.a_eq,
        cs.b_eq,
        cfg.rate_limit,
        cfg.eta,
        cfg.beta,
        cfg.dt,
        recipe,
        cost.q_r,
        cost.q_b,
        cost.p_r,
        np.zeros(N_U),
        max_steps,
        theta_tol,
    )
    if code == backend.LOOP_INFEASIBLE:
        raise QpInfeasibleError("projection QP became infeasible during the frozen run")
    if code == backend.LOOP_STALLED:
        raise StalledStepError("QP hit its iteration cap twice in a row")
    return EquilibriumResult(
        u=ControlVector.from_array(u),
        converged=code == backend.LOOP_CONVERGED,
        steps=int(steps),
        theta_norm=float(theta_norm),
        max_ineq_violation=float(max_viol),
        max_eq_violation=float(max_eq),
    )
