"""Pure-Python kernels.

Same algorithms, argument conventions and tie-breaking rules as the compiled
``_core`` extension; used when the extension is missing, when
``ZONODPP_PURE_PYTHON=1`` is set, and for verbose pivot tracing.
"""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger("zonodpp.lp")

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
ITERATION_LIMIT = 3

AT_LOWER = 0
AT_UPPER = 1
BASIC = 2
FREE_ZERO = 3

# relative window for ratio-test ties
_RATIO_TIE = 1e-12


def lu_log_abs_det(S, tol):
    """log|det S| by LU with partial pivoting; -inf if a pivot is <= tol."""
    U = np.array(S, dtype=np.float64, copy=True)
    k = U.shape[0]
    acc = 0.0
    for col in range(k):
        p = col + int(np.argmax(np.abs(U[col:, col])))
        piv = U[p, col]
        if abs(piv) <= tol:
            return -np.inf
        if p != col:
            U[[col, p]] = U[[p, col]]
        acc += np.log(abs(piv))
        if col + 1 < k:
            f = U[col + 1:, col] / piv
            U[col + 1:, col + 1:] -= np.outer(f, U[col, col + 1:])
    return float(acc)


def lu_solve(S, rhs, tol):
    """Solve ``S z = rhs`` by LU with partial pivoting; None if a pivot is <= tol."""
    U = np.array(S, dtype=np.float64, copy=True)
    R = np.array(rhs, dtype=np.float64, copy=True)
    k = U.shape[0]
    for col in range(k):
        p = col + int(np.argmax(np.abs(U[col:, col])))
        piv = U[p, col]
        if abs(piv) <= tol:
            return None
        if p != col:
            U[[col, p]] = U[[p, col]]
            R[[col, p]] = R[[p, col]]
        if col + 1 < k:
            f = U[col + 1:, col] / piv
            U[col + 1:, col + 1:] -= np.outer(f, U[col, col + 1:])
            U[col + 1:, col] = 0.0
            if R.ndim == 1:
                R[col + 1:] -= f * R[col]
            else:
                R[col + 1:] -= np.outer(f, R[col])
    for col in range(k - 1, -1, -1):
        if col + 1 < k:
            R[col] -= U[col, col + 1:] @ R[col + 1:]
        R[col] /= U[col, col]
    return R


def simplex_solve(M, b, c, lo, hi, phase1_only, hint_basis, hint_status,
                  bland_after, max_iter, feas_tol, piv_tol, opt_tol,
                  y_out, status_out, basis_out, d_out, verbose=False):
    """Bounded-variable primal simplex on ``min c.y, M y = b, lo <= y <= hi``.

    Writes the solution into the ``*_out`` buffers and returns
    ``(code, objective, iterations)``. Infinite bounds are allowed; a
    variable with both bounds infinite sits nonbasic at zero.
    """
    r, m = M.shape
    N = m + r
    T = np.zeros((r, N))
    beta = np.zeros(r)
    head = np.zeros(r, dtype=np.int64)
    x = np.zeros(N)
    stat = np.zeros(N, dtype=np.int8)
    lo_all = np.concatenate([lo, np.zeros(r)])
    hi_all = np.concatenate([hi, np.full(r, np.inf)])
    active = np.ones(N, dtype=bool)
    cost = np.zeros(N)

    warm = hint_basis is not None and _warm_start(
        M, b, lo_all, hi_all, hint_basis, hint_status, T, beta, head, x, stat,
        active, feas_tol, piv_tol)

    it = 0
    if not warm:
        _cold_start(M, b, lo_all, hi_all, T, beta, head, x, stat)
        cost[m:] = 1.0
        d = _reduced_costs(cost, T, head)
        code, it = _iterate(T, beta, head, x, stat, lo_all, hi_all, active, d,
                            it, bland_after, max_iter, piv_tol, opt_tol, 1, verbose)
        if code != OPTIMAL:
            return _finish(M, b, c, code, T, beta, head, x, stat, d, m, it,
                           y_out, status_out, basis_out, d_out, piv_tol)
        infeasible = False
        for i in range(r):
            if head[i] >= m and beta[i] > feas_tol:
                infeasible = True
        if infeasible:
            return _finish(M, b, c, INFEASIBLE, T, beta, head, x, stat, d, m, it,
                           y_out, status_out, basis_out, d_out, piv_tol)
        _drive_out_artificials(T, beta, head, x, stat, active, d, m, piv_tol)
        hi_all[m:] = 0.0
        active[m:] = False
        if phase1_only:
            return _finish(M, b, c, OPTIMAL, T, beta, head, x, stat, d, m, it,
                           y_out, status_out, basis_out, d_out, piv_tol)

    cost[:m] = c
    cost[m:] = 0.0
    d = _reduced_costs(cost, T, head)
    code, it = _iterate(T, beta, head, x, stat, lo_all, hi_all, active, d,
                        it, bland_after, max_iter, piv_tol, opt_tol, 2, verbose)
    return _finish(M, b, c, code, T, beta, head, x, stat, d, m, it,
                   y_out, status_out, basis_out, d_out, piv_tol)


def _reduced_costs(cost, T, head):
    d = cost.copy()
    for i in range(T.shape[0]):
        cb = cost[head[i]]
        if cb != 0.0:
            d -= cb * T[i]
    return d


def _cold_start(M, b, lo_all, hi_all, T, beta, head, x, stat):
    r, m = M.shape
    for j in range(m):
        if np.isfinite(lo_all[j]):
            x[j] = lo_all[j]
            stat[j] = AT_LOWER
        elif np.isfinite(hi_all[j]):
            x[j] = hi_all[j]
            stat[j] = AT_UPPER
        else:
            x[j] = 0.0
            stat[j] = FREE_ZERO
    res = b.astype(np.float64, copy=True)
    for j in range(m):
        if x[j] != 0.0:
            res -= M[:, j] * x[j]
    for i in range(r):
        s = 1.0 if res[i] >= 0.0 else -1.0
        T[i, :m] = s * M[i]
        T[i, m + i] = 1.0
        beta[i] = abs(res[i])
        head[i] = m + i
        stat[m + i] = BASIC
        x[m + i] = 0.0


def _warm_start(M, b, lo_all, hi_all, hint_basis, hint_status, T, beta, head,
                x, stat, active, feas_tol, piv_tol):
    r, m = M.shape
    hb = np.asarray(hint_basis, dtype=np.int64)
    if hb.shape[0] != r or np.any(hb < 0) or np.any(hb >= m):
        return False
    if np.unique(hb).shape[0] != r:
        return False
    is_basic = np.zeros(m, dtype=bool)
    is_basic[hb] = True
    for j in range(m):
        if is_basic[j]:
            stat[j] = BASIC
            x[j] = 0.0
            continue
        s = hint_status[j]
        if s == AT_LOWER and np.isfinite(lo_all[j]):
            x[j] = lo_all[j]
        elif s == AT_UPPER and np.isfinite(hi_all[j]):
            x[j] = hi_all[j]
        elif s == FREE_ZERO and not np.isfinite(lo_all[j]) and not np.isfinite(hi_all[j]):
            x[j] = 0.0
        else:
            return False
        stat[j] = s
    res = b.astype(np.float64, copy=True)
    for j in range(m):
        if not is_basic[j] and x[j] != 0.0:
            res -= M[:, j] * x[j]
    scale = max(1.0, float(np.max(np.abs(M))))
    sol = lu_solve(M[:, hb], np.column_stack([M, res]), piv_tol * scale)
    if sol is None:
        return False
    vals = sol[:, m]
    for i in range(r):
        j = hb[i]
        if vals[i] < lo_all[j] - feas_tol or vals[i] > hi_all[j] + feas_tol:
            return False
    T[:, :m] = sol[:, :m]
    T[:, m:] = 0.0
    beta[:] = vals
    head[:] = hb
    for i in range(r):
        stat[m + i] = AT_LOWER
        x[m + i] = 0.0
    hi_all[m:] = 0.0
    active[m:] = False
    return True


def _drive_out_artificials(T, beta, head, x, stat, active, d, m, piv_tol):
    r = T.shape[0]
    for i in range(r):
        if head[i] < m:
            continue
        best = -1
        bestval = piv_tol
        for j in range(m):
            if stat[j] != BASIC and abs(T[i, j]) > bestval:
                best = j
                bestval = abs(T[i, j])
        if best < 0:
            continue  # redundant row; artificial stays basic, fixed at zero
        art = head[i]
        _pivot(T, d, i, best)
        beta[i] = x[best]
        stat[art] = AT_LOWER
        x[art] = 0.0
        head[i] = best
        stat[best] = BASIC


def _pivot(T, d, row, col):
    prow = T[row] / T[row, col]
    alpha = T[:, col].copy()
    alpha[row] = 0.0
    T -= np.outer(alpha, prow)
    T[row] = prow
    dq = d[col]
    if dq != 0.0:
        d -= dq * prow
    d[col] = 0.0


def _iterate(T, beta, head, x, stat, lo_all, hi_all, active, d, it,
             bland_after, max_iter, piv_tol, opt_tol, phase, verbose):
    r, N = T.shape
    movable = active & (lo_all != hi_all)
    while True:
        if it >= max_iter:
            return ITERATION_LIMIT, it
        bland = it >= bland_after
        elig = movable & (((stat == AT_LOWER) & (d < -opt_tol))
                          | ((stat == AT_UPPER) & (d > opt_tol))
                          | ((stat == FREE_ZERO) & (np.abs(d) > opt_tol)))
        idx = np.flatnonzero(elig)
        if idx.shape[0] == 0:
            return OPTIMAL, it
        if bland:
            q = int(idx[0])
        else:
            q = int(idx[np.argmax(np.abs(d[idx]))])
        if stat[q] == AT_LOWER or (stat[q] == FREE_ZERO and d[q] < 0.0):
            direction = 1.0
        else:
            direction = -1.0

        alpha = T[:, q].copy()
        theta_flip = hi_all[q] - lo_all[q]
        a = direction * alpha
        t = np.full(r, np.inf)
        lo_h = lo_all[head]
        hi_h = hi_all[head]
        dec = (a > piv_tol) & np.isfinite(lo_h)
        inc = (a < -piv_tol) & np.isfinite(hi_h)
        t[dec] = (beta[dec] - lo_h[dec]) / a[dec]
        t[inc] = (hi_h[inc] - beta[inc]) / (-a[inc])
        t = np.maximum(t, 0.0)
        tmin = float(np.min(t)) if r else np.inf

        if theta_flip <= tmin:
            if not np.isfinite(theta_flip):
                return UNBOUNDED, it
            theta = theta_flip
            leave = -1
        else:
            window = tmin + _RATIO_TIE * max(1.0, tmin)
            ties = np.flatnonzero(t <= window)
            if bland:
                leave = int(ties[np.argmin(head[ties])])
            else:
                leave = int(ties[np.argmax(np.abs(a[ties]))])
            theta = float(t[leave])

        x_new = x[q] + direction * theta
        if theta != 0.0:
            beta -= (direction * theta) * alpha
        if verbose:
            log.debug("phase=%d it=%d enter=%d dir=%+d leave=%s theta=%.6g",
                      phase, it, q, int(direction),
                      "flip" if leave < 0 else int(head[leave]), theta)
        if leave < 0:
            stat[q] = AT_UPPER if direction > 0 else AT_LOWER
            x[q] = hi_all[q] if direction > 0 else lo_all[q]
        else:
            h = head[leave]
            if a[leave] > 0.0:
                stat[h] = AT_LOWER
                x[h] = lo_all[h]
            else:
                stat[h] = AT_UPPER
                x[h] = hi_all[h]
            _pivot(T, d, leave, q)
            beta[leave] = x_new
            head[leave] = q
            stat[q] = BASIC
            x[q] = 0.0
        it += 1


def _finish(M, b, c, code, T, beta, head, x, stat, d, m, it,
            y_out, status_out, basis_out, d_out, piv_tol):
    r = M.shape[0]
    y_out[:] = x[:m]
    all_structural = True
    for i in range(r):
        if head[i] < m:
            y_out[head[i]] = beta[i]
        else:
            all_structural = False
    if code == OPTIMAL and all_structural and r > 0:
        basic = np.zeros(m, dtype=bool)
        basic[head] = True
        res = b - M[:, ~basic] @ y_out[~basic]
        scale = max(1.0, float(np.max(np.abs(M))))
        z = lu_solve(M[:, head], res, piv_tol * scale)
        if z is not None:
            y_out[head] = z
    status_out[:] = stat[:m]
    basis_out[:] = head
    d_out[:] = d[:m]
    obj = float(np.dot(c, y_out)) if code == OPTIMAL else float("nan")
    return code, obj, it
