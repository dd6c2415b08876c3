# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of :mod:`hybridfo._pure`.

Same two entry points, same semantics, same status codes; the inner
active-set iteration runs as plain C loops with a small dense Cholesky
for the working-set Gram systems.  Keep behaviour in lock step with the
pure module — the parity test suite compares the two on random problems.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

OPTIMAL = 0
INFEASIBLE = 1
MAX_ITERATIONS = 2

LOOP_RAN = 0
LOOP_CONVERGED = 1
LOOP_INFEASIBLE = 2
LOOP_STALLED = 3

GAMMA_CHARGING = 0
GAMMA_DISCHARGING = 1
GAMMA_FIXED = 2

VIOLATION_TOL = 1e-9

cdef enum:
    C_OPTIMAL = 0
    C_INFEASIBLE = 1
    C_MAX_ITERATIONS = 2
    C_GAMMA_CHARGING = 0
    C_GAMMA_DISCHARGING = 1
    C_GAMMA_FIXED = 2

cdef double _VIOL_TOL = 1e-9
cdef double _DEP_TOL = 1e-11
cdef double _TIE_TOL = 1e-14


cdef int _chol_solve(double[:, ::1] G, double[::1] x, int k) noexcept nogil:
    """In-place Cholesky of the SPD k-by-k leading block of G, then solve
    G x = rhs where rhs arrives in x.  Returns -1 on a non-positive pivot."""
    cdef int i, j, l
    cdef double s
    for i in range(k):
        for j in range(i + 1):
            s = G[i, j]
            for l in range(j):
                s -= G[i, l] * G[j, l]
            if i == j:
                if s <= 0.0:
                    return -1
                G[i, i] = s ** 0.5
            else:
                G[i, j] = s / G[j, j]
    # forward substitution L y = rhs
    for i in range(k):
        s = x[i]
        for l in range(i):
            s -= G[i, l] * x[l]
        x[i] = s / G[i, i]
    # back substitution L^T x = y
    for i in range(k - 1, -1, -1):
        s = x[i]
        for l in range(i + 1, k):
            s -= G[l, i] * x[l]
        x[i] = s / G[i, i]
    return 0


cdef int _stack_rows(
    double[:, ::1] En,
    double[::1] fn,
    double[:, ::1] Rn,
    double[::1] bn,
    int[::1] work,
    int q,
    double[:, ::1] M,
    double[::1] rhs,
) noexcept nogil:
    """Copy the p equality rows then the q working rows into M/rhs."""
    cdef int p = En.shape[0]
    cdef int n = En.shape[1] if p else Rn.shape[1]
    cdef int i, j
    for i in range(p):
        for j in range(n):
            M[i, j] = En[i, j]
        rhs[i] = fn[i]
    for i in range(q):
        for j in range(n):
            M[p + i, j] = Rn[work[i], j]
        rhs[p + i] = bn[work[i]]
    return p + q


cdef int _resolve_working_set(
    double[::1] z,
    double[:, ::1] En,
    double[::1] fn,
    double[:, ::1] Rn,
    double[::1] bn,
    int[::1] work,
    int q,
    double[::1] theta,
    double[::1] rho,
    double[::1] lam_w,
    double[:, ::1] M,
    double[::1] rhs,
    double[:, ::1] G,
    double[::1] duals,
) noexcept nogil:
    """Exact projection of z onto the affine set of the working rows."""
    cdef int p = En.shape[0]
    cdef int n = z.shape[0]
    cdef int rows = p + q
    cdef int i, j, l
    if rows == 0:
        for j in range(n):
            theta[j] = z[j]
        return 0
    _stack_rows(En, fn, Rn, bn, work, q, M, rhs)
    for i in range(rows):
        for l in range(i + 1):
            G[i, l] = 0.0
            for j in range(n):
                G[i, l] += M[i, j] * M[l, j]
            G[l, i] = G[i, l]
        duals[i] = -rhs[i]
        for j in range(n):
            duals[i] += M[i, j] * z[j]
    if _chol_solve(G, duals, rows) != 0:
        return -1
    for j in range(n):
        theta[j] = z[j]
        for i in range(rows):
            theta[j] -= M[i, j] * duals[i]
    for i in range(p):
        rho[i] = duals[i]
    for i in range(q):
        lam_w[i] = duals[p + i]
    return 0


cdef int _gi_solve(
    double[::1] z,
    double[:, ::1] En,
    double[::1] fn,
    double[:, ::1] Rn,
    double[::1] bn,
    int pivot_rule,
    long max_iter,
    double[::1] theta,
    double[::1] rho,
    double[::1] lam_w,
    int[::1] work,
    int* q_out,
    long* iters_out,
    # scratch
    double[::1] s,
    double[:, ::1] M,
    double[::1] rhs,
    double[:, ::1] G,
    double[::1] duals,
    double[::1] d,
    double[::1] r_full,
    double[::1] a_p,
) noexcept nogil:
    cdef int m = Rn.shape[0]
    cdef int p = En.shape[0]
    cdef int n = z.shape[0]
    cdef int q = 0
    cdef long iters = 0
    cdef int status = C_OPTIMAL
    cdef int i, j, l, rows, p_idx, k_block, in_work
    cdef double s_p, best, apd, t_full, t_block, t, tj, lam_p, rj

    if _resolve_working_set(z, En, fn, Rn, bn, work, 0, theta, rho, lam_w, M, rhs, G, duals) != 0:
        q_out[0] = 0
        iters_out[0] = 0
        return -1

    while True:
        iters += 1
        if iters > max_iter:
            status = C_MAX_ITERATIONS
            break

        # violation scan over rows not in the working set
        p_idx = -1
        best = _VIOL_TOL
        for i in range(m):
            in_work = 0
            for j in range(q):
                if work[j] == i:
                    in_work = 1
                    break
            if in_work:
                continue
            s_p = -bn[i]
            for j in range(n):
                s_p += Rn[i, j] * theta[j]
            s[i] = s_p
            if s_p > best:
                if pivot_rule == 0:
                    best = s_p
                    p_idx = i
                elif p_idx < 0:
                    p_idx = i
        if p_idx < 0:
            status = C_OPTIMAL
            break

        s_p = s[p_idx]
        for j in range(n):
            a_p[j] = Rn[p_idx, j]
        lam_p = 0.0

        while True:
            iters += 1
            if iters > max_iter:
                status = C_MAX_ITERATIONS
                break
            rows = p + q
            if rows > 0:
                _stack_rows(En, fn, Rn, bn, work, q, M, rhs)
                for i in range(rows):
                    for l in range(i + 1):
                        G[i, l] = 0.0
                        for j in range(n):
                            G[i, l] += M[i, j] * M[l, j]
                        G[l, i] = G[i, l]
                    r_full[i] = 0.0
                    for j in range(n):
                        r_full[i] += M[i, j] * a_p[j]
                if _chol_solve(G, r_full, rows) != 0:
                    return -1
                for j in range(n):
                    d[j] = a_p[j]
                    for i in range(rows):
                        d[j] -= M[i, j] * r_full[i]
            else:
                for j in range(n):
                    d[j] = a_p[j]

            apd = 0.0
            for j in range(n):
                apd += a_p[j] * d[j]
            t_full = s_p / apd if apd > _DEP_TOL else -1.0  # -1 marks +inf

            t_block = -1.0
            k_block = -1
            for j in range(q):
                rj = r_full[p + j]
                if rj > _DEP_TOL:
                    tj = lam_w[j] if lam_w[j] > 0.0 else 0.0
                    tj /= rj
                    if t_block < 0.0 or tj < t_block - _TIE_TOL or (
                        tj - t_block <= _TIE_TOL
                        and tj - t_block >= -_TIE_TOL
                        and (k_block < 0 or work[j] < work[k_block])
                    ):
                        t_block = tj
                        k_block = j

            if t_full < 0.0 and t_block < 0.0:
                status = C_INFEASIBLE
                break
            if t_full < 0.0:
                t = t_block
            elif t_block < 0.0:
                t = t_full
            else:
                t = t_full if t_full < t_block else t_block

            if t > 0.0:
                for j in range(n):
                    theta[j] -= t * d[j]
                for i in range(p):
                    rho[i] -= t * r_full[i]
                for j in range(q):
                    lam_w[j] -= t * r_full[p + j]
                lam_p += t
                s_p -= t * apd

            if t_block >= 0.0 and (t_full < 0.0 or t_block < t_full):
                # drop the blocking row
                for j in range(k_block, q - 1):
                    work[j] = work[j + 1]
                    lam_w[j] = lam_w[j + 1]
                q -= 1
                continue
            # full step: p_idx joins the working set; re-solve exactly
            work[q] = p_idx
            q += 1
            if _resolve_working_set(z, En, fn, Rn, bn, work, q, theta, rho, lam_w, M, rhs, G, duals) != 0:
                return -1
            break
        if status != C_OPTIMAL:
            break

    q_out[0] = q
    iters_out[0] = iters
    return status


def _scaled(a, rhs):
    a = np.array(a, dtype=np.float64, order="C", copy=True).reshape(len(rhs), -1)
    rhs = np.array(rhs, dtype=np.float64, copy=True)
    norms = np.linalg.norm(a, axis=1)
    if np.any(norms <= 0.0):
        raise ValueError("zero constraint row reached the kernel")
    a /= norms[:, None]
    rhs /= norms
    return a, rhs, norms


def qp_kernel(gamma, R, b, E, f, pivot_rule=0, max_iter=1000):
    """Compiled projection-QP solve; mirrors ``_pure.qp_kernel``."""
    gamma = np.ascontiguousarray(gamma, dtype=np.float64)
    cdef int n = gamma.shape[0]
    R = np.asarray(R, dtype=np.float64).reshape(-1, n)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    E = np.asarray(E, dtype=np.float64).reshape(-1, n)
    f = np.asarray(f, dtype=np.float64).reshape(-1)
    cdef int m = R.shape[0]
    cdef int p = E.shape[0]

    if m:
        Rn, bn, r_norms = _scaled(R, b)
    else:
        Rn, bn, r_norms = np.zeros((0, n)), np.zeros(0), np.zeros(0)
    if p:
        En, fn, e_norms = _scaled(E, f)
    else:
        En, fn, e_norms = np.zeros((0, n)), np.zeros(0), np.zeros(0)

    z = -gamma
    max_rows = p + n + 1
    theta = np.zeros(n)
    rho = np.zeros(max(p, 1))
    lam_w = np.zeros(max_rows)
    work = np.zeros(max_rows, dtype=np.intc)
    s = np.zeros(max(m, 1))
    M = np.zeros((max_rows, n))
    rhs = np.zeros(max_rows)
    G = np.zeros((max_rows, max_rows))
    duals = np.zeros(max_rows)
    d = np.zeros(n)
    r_full = np.zeros(max_rows)
    a_p = np.zeros(n)

    cdef int q = 0
    cdef long iters = 0
    cdef long cap = int(max_iter)
    cdef int status = _gi_solve(
        z, En, fn, Rn, bn, int(pivot_rule), cap,
        theta, rho, lam_w, work, &q, &iters,
        s, M, rhs, G, duals, d, r_full, a_p,
    )
    if status < 0:
        raise RuntimeError("working-set Gram system lost positive definiteness")

    lam = np.zeros(m)
    active = []
    for j in range(q):
        idx = int(work[j])
        active.append(idx)
        lam[idx] = 2.0 * max(float(lam_w[j]), 0.0) / r_norms[idx]
    mu = 2.0 * rho[:p] / e_norms if p else np.zeros(0)
    return theta, lam, mu, active, int(status), int(iters)


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
    """Compiled frozen-constraint stepping loop; mirrors ``_pure.frozen_loop``."""
    u = np.array(u0, dtype=np.float64, copy=True)
    cdef int n = u.shape[0]
    R = np.ascontiguousarray(np.asarray(R, dtype=np.float64).reshape(-1, n))
    b = np.ascontiguousarray(np.asarray(b, dtype=np.float64).reshape(-1))
    E = np.ascontiguousarray(np.asarray(E, dtype=np.float64).reshape(-1, n))
    f = np.ascontiguousarray(np.asarray(f, dtype=np.float64).reshape(-1))
    rate_arr = np.ascontiguousarray(np.asarray(rate, dtype=np.float64).reshape(-1))
    gamma_fix = np.ascontiguousarray(gamma_fixed, dtype=np.float64)
    cdef int m = R.shape[0]
    cdef int p = E.shape[0]

    if m:
        Rn_np, bn_np, r_norms_np = _scaled(R, b)
    else:
        Rn_np, bn_np, r_norms_np = np.zeros((0, n)), np.zeros(0), np.zeros(0)
    if p:
        En_np, fn_np, _ = _scaled(E, f)
    else:
        En_np, fn_np = np.zeros((0, n)), np.zeros(0)

    cdef int m_all = m + 2 * n
    R_all_np = np.vstack([Rn_np, np.eye(n), -np.eye(n)])
    rhs_all_np = np.empty(m_all)
    rhs_all_np[m : m + n] = rate_arr
    rhs_all_np[m + n :] = rate_arr
    cdef long max_iter = 50 * (n + m_all + p)

    cdef double[:, ::1] Rn = Rn_np
    cdef double[::1] bn = bn_np
    cdef double[::1] r_norms = r_norms_np
    cdef double[:, ::1] En = En_np
    cdef double[::1] fn = fn_np
    cdef double[:, ::1] R_all = R_all_np
    cdef double[::1] rhs_all = rhs_all_np
    cdef double[::1] u_v = u
    cdef double[::1] gamma_fix_v = gamma_fix
    cdef double[::1] E_raw_f = f
    E_raw_np = E
    cdef double[:, ::1] E_raw = E_raw_np if p else np.zeros((0, n))

    max_rows = p + n + 1
    gamma = np.zeros(n)
    z = np.zeros(n)
    f_t = np.zeros(max(p, 1))
    theta = np.zeros(n)
    rho = np.zeros(max(p, 1))
    lam_w = np.zeros(max_rows)
    work = np.zeros(max_rows, dtype=np.intc)
    s = np.zeros(m_all)
    M = np.zeros((max_rows, n))
    rhs = np.zeros(max_rows)
    G = np.zeros((max_rows, max_rows))
    duals = np.zeros(max_rows)
    d = np.zeros(n)
    r_full = np.zeros(max_rows)
    a_p = np.zeros(n)

    cdef double[::1] gamma_v = gamma
    cdef double[::1] z_v = z
    cdef double[::1] f_t_v = f_t
    cdef double[::1] theta_v = theta

    cdef double max_ineq = -np.inf if m else 0.0
    cdef double max_eq = 0.0
    cdef long maxiter_events = 0
    cdef int consec_maxiter = 0
    cdef double theta_norm = np.inf
    cdef int exit_code = LOOP_RAN
    cdef long steps = 0
    cdef long total = int(n_steps)
    cdef double tol = float(theta_tol)
    cdef double eta_c = float(eta), beta_c = float(beta), dt_c = float(dt)
    cdef double qr_c = float(q_r), qb_c = float(q_b), pr_c = float(p_r)
    cdef int recipe_c = int(recipe)
    cdef int q_ws = 0
    cdef long iters = 0
    cdef int status
    cdef int i, j
    cdef double viol, e_term, acc
    cdef long step_idx

    # track violations of the initial point
    for i in range(m):
        viol = -bn[i]
        for j in range(n):
            viol += Rn[i, j] * u_v[j]
        viol *= r_norms[i]
        if viol > max_ineq:
            max_ineq = viol
    for i in range(p):
        acc = -E_raw_f[i]
        for j in range(n):
            acc += E_raw[i, j] * u_v[j]
        if acc < 0.0:
            acc = -acc
        if acc > max_eq:
            max_eq = acc

    for step_idx in range(total):
        # gamma for the current setpoints
        if recipe_c == C_GAMMA_FIXED:
            for j in range(n):
                gamma_v[j] = gamma_fix_v[j]
        elif recipe_c == C_GAMMA_CHARGING:
            e_term = qr_c * (u_v[0] + u_v[1] - pr_c)
            gamma_v[0] = e_term
            gamma_v[1] = e_term
            gamma_v[2] = e_term
            gamma_v[3] = -qb_c
            gamma_v[4] = -qb_c
        else:
            e_term = qr_c * (u_v[0] + u_v[1] + u_v[2] - pr_c)
            gamma_v[0] = e_term
            gamma_v[1] = e_term
            gamma_v[2] = e_term + qb_c
            gamma_v[3] = 0.0
            gamma_v[4] = 0.0
        for j in range(n):
            z_v[j] = -gamma_v[j]

        # tightened right-hand sides
        for i in range(m):
            acc = -bn[i]
            for j in range(n):
                acc += Rn[i, j] * u_v[j]
            rhs_all[i] = -beta_c * acc
        for i in range(p):
            acc = -fn[i]
            for j in range(n):
                acc += En[i, j] * u_v[j]
            f_t_v[i] = -beta_c * acc

        status = _gi_solve(
            z_v, En, f_t_v[:p], R_all, rhs_all, 0, max_iter,
            theta_v, rho, lam_w, work, &q_ws, &iters,
            s, M, rhs, G, duals, d, r_full, a_p,
        )
        if status < 0:
            raise RuntimeError("working-set Gram system lost positive definiteness")
        if status == C_INFEASIBLE:
            exit_code = LOOP_INFEASIBLE
            break
        if status == C_MAX_ITERATIONS:
            maxiter_events += 1
            consec_maxiter += 1
            if consec_maxiter >= 2:
                exit_code = LOOP_STALLED
                break
        else:
            consec_maxiter = 0

        acc = 0.0
        for j in range(n):
            u_v[j] += eta_c * dt_c * theta_v[j]
            acc += theta_v[j] * theta_v[j]
        theta_norm = acc ** 0.5
        steps += 1

        for i in range(m):
            viol = -bn[i]
            for j in range(n):
                viol += Rn[i, j] * u_v[j]
            viol *= r_norms[i]
            if viol > max_ineq:
                max_ineq = viol
        for i in range(p):
            acc = -E_raw_f[i]
            for j in range(n):
                acc += E_raw[i, j] * u_v[j]
            if acc < 0.0:
                acc = -acc
            if acc > max_eq:
                max_eq = acc

        if tol > 0.0 and theta_norm <= tol:
            exit_code = LOOP_CONVERGED
            break

    if m == 0:
        max_ineq = 0.0
    return u, int(steps), float(theta_norm), float(max_ineq), float(max_eq), exit_code, int(maxiter_events)
