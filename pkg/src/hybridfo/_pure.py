"""Pure-NumPy implementation of the hot numerical kernels.

The compiled extension :mod:`hybridfo._core` implements the same two entry
points with identical semantics; :mod:`hybridfo.backend` picks whichever is
available at import time.  Keep the two in lock step — the parity test
suite compares them on random problems.

Kernel 1 — ``qp_kernel``: dual active-set solve of the projection QP

    min  ||theta + gamma||^2
    s.t. R theta <= b        (inequality rows, includes any box rows)
         E theta  = f        (equality rows, assumed independent)

The objective Hessian is twice the identity, so every working-set
subproblem is the Euclidean projection of ``-gamma`` onto an affine set,
solved through the dense KKT (Gram) system.  Constraints are added one at
a time starting from the unconstrained minimizer; blocking constraints
whose multiplier would turn negative are dropped along the way.  Rows are
scaled to unit norm internally; the returned multipliers refer to the
rows as passed in.

Kernel 2 — ``frozen_loop``: repeated feedback-optimization steps against a
fixed constraint set, used by equilibrium certification and the
forward-invariance suites where millions of steps are required.
"""

import numpy as np

# qp_kernel status codes
OPTIMAL = 0
INFEASIBLE = 1
MAX_ITERATIONS = 2

# frozen_loop exit codes
LOOP_RAN = 0
LOOP_CONVERGED = 1
LOOP_INFEASIBLE = 2
LOOP_STALLED = 3

# gamma recipes for frozen_loop
GAMMA_CHARGING = 0
GAMMA_DISCHARGING = 1
GAMMA_FIXED = 2

# Feasibility tolerance on unit-norm constraint residuals.
VIOLATION_TOL = 1e-9
_DEP_TOL = 1e-11


def _scale_rows(rows: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scale each constraint row (and its rhs) to unit coefficient norm."""
    rows = np.array(rows, dtype=float, copy=True)
    rhs = np.array(rhs, dtype=float, copy=True)
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms <= 0.0):
        raise ValueError("zero constraint row reached the kernel")
    rows /= norms[:, None]
    rhs /= norms
    return rows, rhs, norms


def _resolve_working_set(z, En, fn, Rn, bn, work):
    """Exact projection of z onto the affine set of the working rows.

    Returns (theta, rho, lam) where rho/lam are the half-objective
    multipliers for the equality rows and the working inequality rows.
    """
    p = En.shape[0]
    if p == 0 and not work:
        return z.copy(), np.zeros(0), np.zeros(0)
    if work:
        m_rows = np.vstack([En, Rn[work]]) if p else Rn[work]
        rhs = np.concatenate([fn, bn[work]]) if p else bn[work]
    else:
        m_rows = En
        rhs = fn
    gram = m_rows @ m_rows.T
    duals = np.linalg.solve(gram, m_rows @ z - rhs)
    theta = z - m_rows.T @ duals
    return theta, duals[:p], duals[p:]


def qp_kernel(gamma, R, b, E, f, pivot_rule=0, max_iter=1000):
    """Solve the projection QP; see the module docstring for the form.

    Parameters
    ----------
    gamma : (n,) array
        Linear-term source; the unconstrained minimizer is ``-gamma``.
    R, b : (m, n), (m,) arrays
        Inequality rows ``R theta <= b``; rows must be nonzero.
    E, f : (p, n), (p,) arrays
        Equality rows, linearly independent (caller-checked).
    pivot_rule : int
        0 selects the most violated row each outer pass, 1 the lowest
        violated index (Bland); both reach the same unique minimizer.
    max_iter : int
        Iteration cap; exceeding it returns ``MAX_ITERATIONS`` with the
        current iterate.

    Returns
    -------
    theta : (n,) array
    lam : (m,) array — multipliers of the original inequality rows,
        for the gradient convention ``2 (theta + gamma)``.
    mu : (p,) array — equality multipliers, same convention.
    active : list of int — working inequality rows at exit.
    status : int
    iters : int
    """
    gamma = np.asarray(gamma, dtype=float)
    n = gamma.shape[0]
    R = np.asarray(R, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).reshape(-1)
    E = np.asarray(E, dtype=float).reshape(-1, n)
    f = np.asarray(f, dtype=float).reshape(-1)
    m, p = R.shape[0], E.shape[0]

    if m:
        Rn, bn, r_norms = _scale_rows(R, b)
    else:
        Rn = np.zeros((0, n))
        bn = np.zeros(0)
        r_norms = np.zeros(0)
    if p:
        En, fn, e_norms = _scale_rows(E, f)
    else:
        En = np.zeros((0, n))
        fn = np.zeros(0)
        e_norms = np.zeros(0)

    z = -gamma
    work: list[int] = []
    theta, rho, lam_w = _resolve_working_set(z, En, fn, Rn, bn, work)

    status = OPTIMAL
    iters = 0
    while True:
        iters += 1
        if iters > max_iter:
            status = MAX_ITERATIONS
            break

        s = Rn @ theta - bn if m else np.zeros(0)
        for idx in work:
            s[idx] = 0.0
        violated = np.flatnonzero(s > VIOLATION_TOL)
        if violated.size == 0:
            status = OPTIMAL
            break
        if pivot_rule == 0:
            p_idx = violated[np.argmax(s[violated])]
        else:
            p_idx = violated[0]

        a_p = Rn[p_idx]
        s_p = s[p_idx]
        lam_p = 0.0
        while True:
            iters += 1
            if iters > max_iter:
                status = MAX_ITERATIONS
                break
            q = len(work)
            if p + q:
                m_rows = np.vstack([En, Rn[work]]) if (p and q) else (En if p else Rn[work])
                gram = m_rows @ m_rows.T
                r_full = np.linalg.solve(gram, m_rows @ a_p)
                d = a_p - m_rows.T @ r_full
            else:
                r_full = np.zeros(0)
                d = a_p.copy()

            apd = float(a_p @ d)
            t_full = s_p / apd if apd > _DEP_TOL else np.inf

            t_block = np.inf
            k_block = -1
            for j in range(q):
                rj = r_full[p + j]
                if rj > _DEP_TOL:
                    tj = max(lam_w[j], 0.0) / rj
                    # Bland-style: on ties prefer the lowest row index.
                    if tj < t_block - 1e-14 or (
                        abs(tj - t_block) <= 1e-14 and (k_block < 0 or work[j] < work[k_block])
                    ):
                        t_block = tj
                        k_block = j

            t = min(t_full, t_block)
            if not np.isfinite(t):
                status = INFEASIBLE
                break

            if t > 0.0:
                theta = theta - t * d
                rho = rho - t * r_full[:p]
                lam_w = lam_w - t * r_full[p:]
                lam_p += t
                s_p -= t * apd

            if t_block < t_full:
                work.pop(k_block)
                lam_w = np.delete(lam_w, k_block)
                continue
            # Full step: constraint p joins the working set; re-solve the
            # projection exactly to keep the iterate free of drift.
            work.append(p_idx)
            theta, rho, lam_w = _resolve_working_set(z, En, fn, Rn, bn, work)
            break
        if status != OPTIMAL:
            break

    lam = np.zeros(m)
    for j, idx in enumerate(work):
        lam[idx] = 2.0 * max(lam_w[j], 0.0) / r_norms[idx]
    mu = 2.0 * rho / e_norms if p else np.zeros(0)
    return theta, lam, mu, list(work), status, iters


def _frozen_gamma(u, recipe, q_r, q_b, p_r, gamma_fixed):
    """Setpoint-space gradient for the frozen closed loop.

    Uses the unsaturated plant mapping (output equals setpoint), valid
    while the trajectory respects the availability rows.  Setpoint order:
    (wind->load, solar->load, battery->load, wind->batt, solar->batt).
    """
    if recipe == GAMMA_FIXED:
        return gamma_fixed
    g = np.zeros(5)
    if recipe == GAMMA_CHARGING:
        e = q_r * (u[0] + u[1] - p_r)
        g[0] = e
        g[1] = e
        g[2] = e
        g[3] = -q_b
        g[4] = -q_b
    else:
        e = q_r * (u[0] + u[1] + u[2] - p_r)
        g[0] = e
        g[1] = e
        g[2] = e + q_b
        g[3] = 0.0
        g[4] = 0.0
    return g


def frozen_loop(
    u0,
    R,
    b,
    E,
    f,
    rate,
    eta,
    beta,
    dt,
    recipe,
    q_r,
    q_b,
    p_r,
    gamma_fixed,
    n_steps,
    theta_tol,
):
    """Advance the feedback-optimization law against fixed constraints.

    Every step solves the projection QP with rows tightened by
    ``-beta * (R u - b)`` plus symmetric rate boxes ``|theta_i| <= rate_i``
    and integrates ``u += eta * dt * theta``.

    Returns
    -------
    (u, steps, theta_norm, max_ineq_viol, max_eq_viol, exit_code, maxiter_events)
        Violations are reported in original (unscaled) row units, i.e. kW.
    """
    u = np.array(u0, dtype=float, copy=True)
    n = u.shape[0]
    R = np.asarray(R, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).reshape(-1)
    E = np.asarray(E, dtype=float).reshape(-1, n)
    f = np.asarray(f, dtype=float).reshape(-1)
    rate = np.asarray(rate, dtype=float).reshape(-1)
    m, p = R.shape[0], E.shape[0]

    if m:
        Rn, bn, r_norms = _scale_rows(R, b)
    else:
        Rn, bn, r_norms = np.zeros((0, n)), np.zeros(0), np.zeros(0)
    if p:
        En, fn, _ = _scale_rows(E, f)
    else:
        En, fn = np.zeros((0, n)), np.zeros(0)

    # Constant stacked inequality matrix: tightened rows first, then the
    # rate box expanded to +/- identity rows.
    R_all = np.vstack([Rn, np.eye(n), -np.eye(n)])
    rhs_all = np.empty(m + 2 * n)
    rhs_all[m : m + n] = rate
    rhs_all[m + n :] = rate
    max_iter = 50 * (n + R_all.shape[0] + p)

    max_ineq = -np.inf if m else 0.0
    max_eq = 0.0
    maxiter_events = 0
    consec_maxiter = 0
    theta_norm = np.inf
    exit_code = LOOP_RAN
    steps = 0

    def _track_violation() -> None:
        nonlocal max_ineq, max_eq
        if m:
            viol = np.max((Rn @ u - bn) * r_norms)
            if viol > max_ineq:
                max_ineq = viol
        if p:
            eq_res = np.max(np.abs(E @ u - f))
            if eq_res > max_eq:
                max_eq = eq_res

    _track_violation()
    for _ in range(int(n_steps)):
        gamma = _frozen_gamma(u, recipe, q_r, q_b, p_r, gamma_fixed)
        rhs_all[:m] = -beta * (Rn @ u - bn)
        f_t = -beta * (En @ u - fn) if p else fn
        theta, _, _, _, status, _ = qp_kernel(gamma, R_all, rhs_all, En, f_t, 0, max_iter)
        if status == INFEASIBLE:
            exit_code = LOOP_INFEASIBLE
            break
        if status == MAX_ITERATIONS:
            maxiter_events += 1
            consec_maxiter += 1
            if consec_maxiter >= 2:
                exit_code = LOOP_STALLED
                break
        else:
            consec_maxiter = 0
        u += eta * dt * theta
        steps += 1
        _track_violation()
        theta_norm = float(np.linalg.norm(theta))
        if theta_tol > 0.0 and theta_norm <= theta_tol:
            exit_code = LOOP_CONVERGED
            break

    if m == 0:
        max_ineq = 0.0
    return u, steps, theta_norm, float(max_ineq), float(max_eq), exit_code, maxiter_events
