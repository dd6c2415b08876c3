"""Brute-force ground truth for the frozen supervisory problem.

With disturbances, demand and battery limits frozen, the supervisory
problem is a convex QP in the five setpoints: quadratic demand tracking
plus a linear battery/charging term over linear constraints.  This
module solves it by exhaustive active-set enumeration — every subset of
the ~10 constraint rows is treated as an equality system, the reduced
problem is minimized in closed form, and the best feasible candidate
wins.  No iterative machinery is shared with the controller path, which
is the point: equilibria of the feedback loop are certified against this
module.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .controller import N_U, U_BL, U_SB, U_WB, ControlVector
from .costs import CostConfig
from .modes import Mode
from .plants import BatteryLimitsOut, PlantLimits

_FEAS_TOL = 1e-7
_COST_TIE_TOL = 1e-9
_UNIQUE_TOL = 1e-4  # kW spread among cost-tied candidates that flags a ridge


class InfeasibleProblemError(ValueError):
    """No candidate satisfies all constraint rows."""


@dataclass(frozen=True)
class FrozenProblem:
    """Availability, battery interval and cost of one frozen instance."""

    p_bar_w: float
    p_bar_s: float
    batt: BatteryLimitsOut
    limits: PlantLimits
    cost: CostConfig

    @property
    def mode(self) -> Mode:
        return self.cost.mode


@dataclass(frozen=True)
class FrozenSolution:
    u: ControlVector
    cost_value: float
    kkt_residual: float
    unique: bool
    active_rows: tuple[int, ...]


def _constraint_rows(p: FrozenProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Inequality rows (A u <= b) and the mode equality, built directly
    from the frozen data (deliberately not reusing the controller's
    assembly)."""
    rows = []
    rhs = []
    rows.append([1, 0, 0, 1, 0])
    rhs.append(min(p.limits.p_max_w, p.p_bar_w))
    rows.append([0, 1, 0, 0, 1])
    rhs.append(min(p.limits.p_max_s, p.p_bar_s))
    if p.mode is Mode.DISCHARGING:
        batt_row = [0, 0, 1, 0, 0]
        eq_row = [0.0, 0.0, 0.0, 1.0, 1.0]
    else:
        batt_row = [0, 0, 0, 1, 1]
        eq_row = [0.0, 0.0, 1.0, 0.0, 0.0]
    rows.append(batt_row)
    rhs.append(p.batt.upper)
    rows.append([-c for c in batt_row])
    rhs.append(-p.batt.lower)
    for i in range(N_U):
        row = [0.0] * N_U
        row[i] = -1.0
        rows.append(row)
        rhs.append(0.0)
    return (
        np.array(rows, dtype=float),
        np.array(rhs, dtype=float),
        np.array([eq_row]),
        np.zeros(1),
    )


def _cost_terms(p: FrozenProblem) -> tuple[np.ndarray, np.ndarray, float]:
    """Cost as q_r/2 (c.u - p_r)^2 + g.u over the setpoint vector."""
    c = np.zeros(N_U)
    g = np.zeros(N_U)
    c[0] = c[1] = 1.0
    if p.mode is Mode.DISCHARGING:
        c[U_BL] = 1.0
        g[U_BL] = p.cost.q_b
    else:
        g[U_WB] = -p.cost.q_b
        g[U_SB] = -p.cost.q_b
    return c, g, p.cost.p_r


def _cost_at(u: np.ndarray, c, g, p_r, q_r) -> float:
    return 0.5 * q_r * (c @ u - p_r) ** 2 + g @ u


def _reduced_minimizer(m_rows, m_rhs, c, g, p_r, q_r):
    """Minimize the cost on the affine set {m_rows u = m_rhs}.

    Returns a minimizer or None when the reduced problem is unbounded
    below (such subsets contribute no candidate).
    """
    u0, *_ = np.linalg.lstsq(m_rows, m_rhs, rcond=None)
    if np.linalg.norm(m_rows @ u0 - m_rhs) > 1e-6 * (1.0 + np.linalg.norm(m_rhs)):
        return None  # inconsistent equality system
    _, sv, vt = np.linalg.svd(m_rows)
    rank = int(np.sum(sv > 1e-10 * max(1.0, sv[0] if sv.size else 1.0)))
    null = vt[rank:].T  # (n, k) orthonormal null-space basis
    if null.shape[1] == 0:
        return u0
    a = null.T @ c
    h = null.T @ g
    a_norm = np.linalg.norm(a)
    if a_norm < 1e-12:
        return u0 if np.linalg.norm(h) < 1e-12 else None
    h_perp = h - (h @ a) / a_norm**2 * a
    if np.linalg.norm(h_perp) > 1e-10 * (1.0 + np.linalg.norm(h)):
        return None  # strict descent direction with no curvature
    kappa = (h @ a) / a_norm**2
    sigma = c @ u0 - p_r
    xi = -sigma - kappa / q_r
    w = a * (xi / a_norm**2)
    return u0 + null @ w


def _kkt_residual(u, grad, a_ineq, b_ineq, a_eq) -> float:
    """Stationarity residual with sign-constrained multipliers via NNLS."""
    active = np.flatnonzero(np.abs(a_ineq @ u - b_ineq) <= _FEAS_TOL * 10)
    cols = []
    for i in active:
        cols.append(a_ineq[i])
    for row in a_eq:
        cols.append(row)
        cols.append(-row)
    if not cols:
        return float(np.linalg.norm(grad)) / (1.0 + float(np.linalg.norm(grad)))
    basis = np.array(cols).T
    _, resid = nnls(basis, -grad)
    return float(resid) / (1.0 + float(np.linalg.norm(grad)))


def solve_frozen_detailed(p: FrozenProblem) -> FrozenSolution:
    """Global minimizer by enumeration, with certification details."""
    a_ineq, b_ineq, a_eq, b_eq = _constraint_rows(p)
    c, g, p_r = _cost_terms(p)
    q_r = p.cost.q_r
    m = a_ineq.shape[0]

    row_norms = np.linalg.norm(a_ineq, axis=1)
    candidates: list[tuple[float, np.ndarray, tuple[int, ...]]] = []
    max_active = N_U - a_eq.shape[0]
    for size in range(0, max_active + 1):
        for subset in itertools.combinations(range(m), size):
            m_rows = np.vstack([a_eq, a_ineq[list(subset)]]) if subset else a_eq
            m_rhs = np.concatenate([b_eq, b_ineq[list(subset)]]) if subset else b_eq
            if np.linalg.matrix_rank(m_rows, tol=1e-9) < m_rows.shape[0]:
                continue
            u = _reduced_minimizer(m_rows, m_rhs, c, g, p_r, q_r)
            if u is None:
                continue
            slack = (a_ineq @ u - b_ineq) / row_norms
            if np.max(slack) > _FEAS_TOL:
                continue
            candidates.append((_cost_at(u, c, g, p_r, q_r), u, subset))

    if not candidates:
        raise InfeasibleProblemError("active-set enumeration found no feasible candidate")

    best_cost = min(cost for cost, _, _ in candidates)
    tie_tol = _COST_TIE_TOL * (1.0 + abs(best_cost))
    tied = [(cost, u, s) for cost, u, s in candidates if cost <= best_cost + tie_tol]
    tied.sort(key=lambda item: tuple(np.round(item[1], 6)))
    _, u_best, subset = tied[0]

    unique = all(np.max(np.abs(u - u_best)) <= _UNIQUE_TOL for _, u, _ in tied)

    grad = q_r * (c @ u_best - p_r) * c + g
    residual = _kkt_residual(u_best, grad, a_ineq, b_ineq, a_eq)
    return FrozenSolution(
        u=ControlVector.from_array(u_best),
        cost_value=float(best_cost),
        kkt_residual=residual,
        unique=unique,
        active_rows=tuple(int(i) for i in subset),
    )


def solve_frozen(p: FrozenProblem) -> ControlVector:
    """Global minimizer of the frozen supervisory problem."""
    return solve_frozen_detailed(p).u


def frozen_cost(p: FrozenProblem, u: np.ndarray) -> float:
    """Cost of an arbitrary setpoint vector under the frozen problem."""
    c, g, p_r = _cost_terms(p)
    return _cost_at(np.asarray(u, dtype=float), c, g, p_r, p.cost.q_r)


def frozen_feasible(p: FrozenProblem, u: np.ndarray, tol: float = _FEAS_TOL) -> bool:
    """Check a point against every constraint row of the frozen problem."""
    a_ineq, b_ineq, a_eq, b_eq = _constraint_rows(p)
    u = np.asarray(u, dtype=float)
    norms = np.linalg.norm(a_ineq, axis=1)
    if np.max((a_ineq @ u - b_ineq) / norms) > tol:
        return False
    return bool(np.max(np.abs(a_eq @ u - b_eq)) <= tol)
