"""Dense projection quadratic programs for the feedback-optimization step.

Solves, for a handful of decision variables,

    min  ||theta + gamma||^2
    s.t. A_ineq theta <= b_ineq
         A_eq   theta  = b_eq
         lower <= theta <= upper

The Hessian is twice the identity, so the problem is the Euclidean
projection of ``-gamma`` onto a polyhedron and always has a unique
solution when feasible.  Solving happens in the active-set kernel picked
by :mod:`hybridfo.backend`; this module owns validation, duplicate-row
removal, row scaling policy, and KKT certification of the result.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from . import backend


class QpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


_STATUS_FROM_CODE = {
    backend.OPTIMAL: QpStatus.OPTIMAL,
    backend.INFEASIBLE: QpStatus.INFEASIBLE,
    backend.MAX_ITERATIONS: QpStatus.MAX_ITERATIONS,
}

# Certification threshold on the scaled KKT residual.
KKT_TOL = 1e-8


@dataclass
class QpProblem:
    """Projection QP data.  Missing blocks may be passed as None.

    gamma   (n,) linear-term source, kW-scaled
    a_ineq  (n_g, n) inequality rows, b_ineq (n_g,) right-hand sides
    a_eq    (n_c, n) equality rows (must have full row rank), b_eq (n_c,)
    lower/upper (n,) box bounds; +-inf entries disable a side
    """

    gamma: np.ndarray
    a_ineq: np.ndarray | None = None
    b_ineq: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        n = self.n
        self.a_ineq, self.b_ineq = _as_rows(self.a_ineq, self.b_ineq, n, "a_ineq")
        self.a_eq, self.b_eq = _as_rows(self.a_eq, self.b_eq, n, "a_eq")
        self.lower = _as_bound(self.lower, n, -np.inf)
        self.upper = _as_bound(self.upper, n, np.inf)
        if not np.all(np.isfinite(self.gamma)):
            raise ValueError("gamma must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower > upper in box bounds")
        if self.a_eq.shape[0]:
            rank = np.linalg.matrix_rank(self.a_eq)
            if rank < self.a_eq.shape[0]:
                raise ValueError(
                    f"equality rows are linearly dependent (rank {rank} < {self.a_eq.shape[0]})"
                )

    @property
    def n(self) -> int:
        return self.gamma.shape[0]


@dataclass
class QpSolution:
    """Solver output.

    ``active_set`` indexes the combined inequality list: original rows
    0..n_g-1 (duplicates collapse onto their first occurrence), then
    finite lower-bound rows, then finite upper-bound rows.
    ``kkt_residual`` is the scaled max of stationarity, feasibility and
    complementarity residuals; Optimal implies it is <= the solver
    tolerance.  Multipliers follow the gradient ``2 (theta + gamma)``.
    """

    theta: np.ndarray
    active_set: tuple[int, ...]
    kkt_residual: float
    status: QpStatus
    lam_ineq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mu_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lam_lower: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lam_upper: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0


def _as_rows(a, b, n, name):
    if a is None:
        return np.zeros((0, n)), np.zeros(0)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape[1] != n or a.shape[0] != b.shape[0]:
        raise ValueError(f"{name} has shape {a.shape}, rhs {b.shape}, for n = {n}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError(f"{name} must be finite")
    return a, b


def _as_bound(v, n, default):
    if v is None:
        return np.full(n, default)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (n,):
        raise ValueError(f"bound has shape {v.shape}, expected ({n},)")
    return v


def _dedupe_rows(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapse exact coefficient duplicates, keeping the tightest rhs.

    Returns (rows, rhs, keep_index) where keep_index maps each kept row
    back to the original index whose rhs it carries.
    """
    kept: dict[bytes, int] = {}
    rows, rhs, keep_idx = [], [], []
    for i in range(a.shape[0]):
        key = a[i].tobytes()
        if key in kept:
            j = kept[key]
            if b[i] < rhs[j]:
                rhs[j] = b[i]
                keep_idx[j] = i
        else:
            kept[key] = len(rows)
            rows.append(a[i])
            rhs.append(b[i])
            keep_idx.append(i)
    if not rows:
        return np.zeros((0, a.shape[1])), np.zeros(0), np.zeros(0, dtype=int)
    return np.array(rows), np.array(rhs), np.array(keep_idx, dtype=int)


def solve(problem: QpProblem, pivot_rule: str = "greedy") -> QpSolution:
    """Solve the projection QP to optimality or a certified failure.

    ``pivot_rule`` is "greedy" (most violated row first) or "bland"
    (lowest violated index); both give the same minimizer and exist so
    tests can check path independence.
    """
    n = problem.n
    rule = {"greedy": 0, "bland": 1}[pivot_rule]
    gamma = problem.gamma

    a, b, keep_idx = _dedupe_rows(problem.a_ineq, problem.b_ineq)

    # Zero rows constrain nothing: drop if slack, certify infeasible if not.
    if a.shape[0]:
        norms = np.linalg.norm(a, axis=1)
        zero = norms == 0.0
        if np.any(zero):
            if np.any(b[zero] < 0.0):
                return QpSolution(
                    theta=-gamma.copy(),
                    active_set=(),
                    kkt_residual=np.inf,
                    status=QpStatus.INFEASIBLE,
                    lam_ineq=np.zeros(problem.a_ineq.shape[0]),
                    mu_eq=np.zeros(problem.a_eq.shape[0]),
                    lam_lower=np.zeros(n),
                    lam_upper=np.zeros(n),
                )
            a, b, keep_idx = a[~zero], b[~zero], keep_idx[~zero]

    # Expand finite box bounds into rows so the kernel sees one list.
    combo_rows = [a]
    combo_rhs = [b]
    combo_tags: list[tuple[str, int]] = [("ineq", int(i)) for i in keep_idx]
    eye = np.eye(n)
    for i in range(n):
        if np.isfinite(problem.lower[i]):
            combo_rows.append(-eye[i : i + 1])
            combo_rhs.append(np.array([-problem.lower[i]]))
            combo_tags.append(("lower", i))
    for i in range(n):
        if np.isfinite(problem.upper[i]):
            combo_rows.append(eye[i : i + 1])
            combo_rhs.append(np.array([problem.upper[i]]))
            combo_tags.append(("upper", i))
    R = np.vstack(combo_rows)
    rhs = np.concatenate(combo_rhs)

    n_g = problem.a_ineq.shape[0]
    n_c = problem.a_eq.shape[0]
    max_iter = 50 * (n + n_g + n_c) + 50 * R.shape[0]

    theta, lam, mu, active, code, iters = backend.qp_kernel(
        gamma, R, rhs, problem.a_eq, problem.b_eq, rule, max_iter
    )
    status = _STATUS_FROM_CODE[int(code)]

    lam_ineq = np.zeros(n_g)
    lam_lower = np.zeros(n)
    lam_upper = np.zeros(n)
    for row, value in enumerate(lam):
        kind, idx = combo_tags[row]
        if kind == "ineq":
            lam_ineq[idx] = value
        elif kind == "lower":
            lam_lower[idx] = value
        else:
            lam_upper[idx] = value

    if status is QpStatus.INFEASIBLE:
        residual = np.inf
    else:
        residual = _kkt_residual(problem, theta, lam_ineq, np.asarray(mu), lam_lower, lam_upper)
        if status is QpStatus.OPTIMAL and residual > KKT_TOL:
            status = QpStatus.MAX_ITERATIONS

    return QpSolution(
        theta=theta,
        active_set=tuple(int(combo_tags[i][1]) if combo_tags[i][0] == "ineq" else int(i) for i in active),
        kkt_residual=float(residual),
        status=status,
        lam_ineq=lam_ineq,
        mu_eq=np.asarray(mu),
        lam_lower=lam_lower,
        lam_upper=lam_upper,
        iterations=int(iters),
    )


def _kkt_residual(problem, theta, lam_ineq, mu_eq, lam_lower, lam_upper):
    """Scaled KKT residual: max of stationarity, feasibility, complementarity."""
    gamma = problem.gamma
    scale = 1.0 + float(np.linalg.norm(gamma))

    stat = 2.0 * (theta + gamma)
    if problem.a_ineq.shape[0]:
        stat = stat + problem.a_ineq.T @ lam_ineq
    if problem.a_eq.shape[0]:
        stat = stat + problem.a_eq.T @ mu_eq
    stat = stat - lam_lower + lam_upper
    r_stat = np.linalg.norm(stat) / scale

    r_feas = 0.0
    comp = 0.0
    if problem.a_ineq.shape[0]:
        norms = np.maximum(np.linalg.norm(problem.a_ineq, axis=1), 1e-300)
        slack = (problem.a_ineq @ theta - problem.b_ineq) / norms
        r_feas = max(r_feas, float(np.max(slack, initial=0.0)))
        comp = max(comp, float(np.max(np.abs(lam_ineq * norms / (2.0 * scale) * slack), initial=0.0)))
    if problem.a_eq.shape[0]:
        norms = np.maximum(np.linalg.norm(problem.a_eq, axis=1), 1e-300)
        r_feas = max(r_feas, float(np.max(np.abs(problem.a_eq @ theta - problem.b_eq) / norms)))
    lo, hi = problem.lower, problem.upper
    lo_slack = np.where(np.isfinite(lo), lo - theta, 0.0)
    hi_slack = np.where(np.isfinite(hi), theta - hi, 0.0)
    r_feas = max(r_feas, float(np.max(lo_slack, initial=0.0)), float(np.max(hi_slack, initial=0.0)))
    comp = max(
        comp,
        float(np.max(np.abs(lam_lower / (2.0 * scale) * lo_slack), initial=0.0)),
        float(np.max(np.abs(lam_upper / (2.0 * scale) * hi_slack), initial=0.0)),
    )
    return max(r_stat, r_feas, comp)
