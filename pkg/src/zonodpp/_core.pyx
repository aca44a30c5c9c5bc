# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: bounded-variable simplex and LU log-determinant.

Mirrors ``_core_py`` (same pivot rules, tie windows and status codes).
"""

from libc.math cimport fabs, log, INFINITY, isfinite
from libc.stdlib cimport malloc, free
from libc.string cimport memset, memcpy

import numpy as np

cdef enum:
    OPTIMAL = 0
    INFEASIBLE = 1
    UNBOUNDED = 2
    ITERATION_LIMIT = 3

cdef enum:
    AT_LOWER = 0
    AT_UPPER = 1
    BASIC = 2
    FREE_ZERO = 3

cdef double RATIO_TIE = 1e-12


cdef inline double _fmax(double a, double b) nogil:
    return a if a > b else b


cdef int _lu_inplace(double* U, double* R, int k, int nrhs, double tol) noexcept nogil:
    """Forward elimination with partial pivoting on k x k U and k x nrhs R.

    Returns 0 on success, -1 if a pivot magnitude is <= tol.
    """
    cdef int col, i, j, p
    cdef double piv, f, tmp, best
    for col in range(k):
        p = col
        best = fabs(U[col * k + col])
        for i in range(col + 1, k):
            if fabs(U[i * k + col]) > best:
                best = fabs(U[i * k + col])
                p = i
        piv = U[p * k + col]
        if fabs(piv) <= tol:
            return -1
        if p != col:
            for j in range(k):
                tmp = U[col * k + j]; U[col * k + j] = U[p * k + j]; U[p * k + j] = tmp
            for j in range(nrhs):
                tmp = R[col * nrhs + j]; R[col * nrhs + j] = R[p * nrhs + j]; R[p * nrhs + j] = tmp
        for i in range(col + 1, k):
            f = U[i * k + col] / piv
            if f != 0.0:
                for j in range(col + 1, k):
                    U[i * k + j] -= f * U[col * k + j]
                for j in range(nrhs):
                    R[i * nrhs + j] -= f * R[col * nrhs + j]
            U[i * k + col] = 0.0
    return 0


cdef void _back_substitute(double* U, double* R, int k, int nrhs) noexcept nogil:
    cdef int col, i, j
    for col in range(k - 1, -1, -1):
        for j in range(nrhs):
            for i in range(col + 1, k):
                R[col * nrhs + j] -= U[col * k + i] * R[i * nrhs + j]
            R[col * nrhs + j] /= U[col * k + col]


def lu_log_abs_det(S, double tol):
    """log|det S| by LU with partial pivoting; -inf if a pivot is <= tol."""
    cdef const double[:, ::1] Sv = np.ascontiguousarray(S, dtype=np.float64)
    cdef int k = Sv.shape[0]
    cdef int col, i, j, p
    cdef double piv, f, tmp, best, acc = 0.0
    if k == 0:
        return 0.0
    cdef double* U = <double*> malloc(k * k * sizeof(double))
    if U == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(k):
                for j in range(k):
                    U[i * k + j] = Sv[i, j]
            for col in range(k):
                p = col
                best = fabs(U[col * k + col])
                for i in range(col + 1, k):
                    if fabs(U[i * k + col]) > best:
                        best = fabs(U[i * k + col])
                        p = i
                piv = U[p * k + col]
                if fabs(piv) <= tol:
                    acc = -INFINITY
                    break
                if p != col:
                    for j in range(k):
                        tmp = U[col * k + j]; U[col * k + j] = U[p * k + j]; U[p * k + j] = tmp
                acc += log(fabs(piv))
                for i in range(col + 1, k):
                    f = U[i * k + col] / piv
                    if f != 0.0:
                        for j in range(col + 1, k):
                            U[i * k + j] -= f * U[col * k + j]
        return acc
    finally:
        free(U)


def lu_solve(S, rhs, double tol):
    """Solve ``S z = rhs`` by LU with partial pivoting; None if a pivot is <= tol."""
    cdef const double[:, ::1] Sv = np.ascontiguousarray(S, dtype=np.float64)
    R_arr = np.array(rhs, dtype=np.float64, copy=True, order="C")
    vec = R_arr.ndim == 1
    if vec:
        R_arr = R_arr.reshape(-1, 1)
    cdef double[:, ::1] Rv = R_arr
    cdef int k = Sv.shape[0]
    cdef int nrhs = Rv.shape[1]
    cdef int i, j, rc
    if k == 0:
        return R_arr.reshape(-1) if vec else R_arr
    cdef double* U = <double*> malloc(k * k * sizeof(double))
    if U == NULL:
        raise MemoryError()
    try:
        for i in range(k):
            for j in range(k):
                U[i * k + j] = Sv[i, j]
        rc = _lu_inplace(U, &Rv[0, 0], k, nrhs, tol)
        if rc != 0:
            return None
        _back_substitute(U, &Rv[0, 0], k, nrhs)
    finally:
        free(U)
    return R_arr.reshape(-1) if vec else R_arr


cdef struct Work:
    int r
    int m
    int N
    double* T        # r x N tableau
    double* beta     # r
    long* head       # r
    double* x        # N
    signed char* stat
    double* lo
    double* hi
    unsigned char* active
    double* cost
    double* d
    double* alpha    # r scratch
    double* t        # r scratch


cdef int _alloc(Work* w, int r, int m) noexcept nogil:
    w.r = r
    w.m = m
    w.N = m + r
    cdef int N = m + r
    w.T = <double*> malloc((r * N + 1) * sizeof(double))
    w.beta = <double*> malloc((r + 1) * sizeof(double))
    w.head = <long*> malloc((r + 1) * sizeof(long))
    w.x = <double*> malloc((N + 1) * sizeof(double))
    w.stat = <signed char*> malloc((N + 1) * sizeof(signed char))
    w.lo = <double*> malloc((N + 1) * sizeof(double))
    w.hi = <double*> malloc((N + 1) * sizeof(double))
    w.active = <unsigned char*> malloc((N + 1) * sizeof(unsigned char))
    w.cost = <double*> malloc((N + 1) * sizeof(double))
    w.d = <double*> malloc((N + 1) * sizeof(double))
    w.alpha = <double*> malloc((r + 1) * sizeof(double))
    w.t = <double*> malloc((r + 1) * sizeof(double))
    if (w.T == NULL or w.beta == NULL or w.head == NULL or w.x == NULL or w.stat == NULL
            or w.lo == NULL or w.hi == NULL or w.active == NULL or w.cost == NULL
            or w.d == NULL or w.alpha == NULL or w.t == NULL):
        return -1
    memset(w.T, 0, r * N * sizeof(double))
    memset(w.beta, 0, r * sizeof(double))
    memset(w.x, 0, N * sizeof(double))
    memset(w.stat, 0, N * sizeof(signed char))
    memset(w.cost, 0, N * sizeof(double))
    memset(w.d, 0, N * sizeof(double))
    cdef int j
    for j in range(N):
        w.active[j] = 1
    return 0


cdef void _release(Work* w) noexcept nogil:
    free(w.T); free(w.beta); free(w.head); free(w.x); free(w.stat)
    free(w.lo); free(w.hi); free(w.active); free(w.cost); free(w.d)
    free(w.alpha); free(w.t)


cdef void _reduced_costs(Work* w) noexcept nogil:
    cdef int i, j, N = w.N
    cdef double cb
    cdef double* row
    for j in range(N):
        w.d[j] = w.cost[j]
    for i in range(w.r):
        cb = w.cost[w.head[i]]
        if cb != 0.0:
            row = w.T + i * N
            for j in range(N):
                w.d[j] -= cb * row[j]


cdef void _cold_start(Work* w, const double[:, ::1] M, const double[::1] b) noexcept nogil:
    cdef int r = w.r, m = w.m, N = w.N, i, j
    cdef double s, res
    for j in range(m):
        if isfinite(w.lo[j]):
            w.x[j] = w.lo[j]
            w.stat[j] = AT_LOWER
        elif isfinite(w.hi[j]):
            w.x[j] = w.hi[j]
            w.stat[j] = AT_UPPER
        else:
            w.x[j] = 0.0
            w.stat[j] = FREE_ZERO
    for i in range(r):
        res = b[i]
        for j in range(m):
            if w.x[j] != 0.0:
                res -= M[i, j] * w.x[j]
        s = 1.0 if res >= 0.0 else -1.0
        for j in range(N):
            w.T[i * N + j] = 0.0
        for j in range(m):
            w.T[i * N + j] = s * M[i, j]
        w.T[i * N + m + i] = 1.0
        w.beta[i] = fabs(res)
        w.head[i] = m + i
        w.stat[m + i] = BASIC
        w.x[m + i] = 0.0


cdef int _warm_start(Work* w, const double[:, ::1] M, const double[::1] b,
                     const long[::1] hb, const signed char[::1] hs, double feas_tol, double piv_tol) noexcept nogil:
    cdef int r = w.r, m = w.m, N = w.N, i, j, k, rc
    cdef signed char s
    cdef double scale = 1.0, val
    if hb.shape[0] != r:
        return 0
    for j in range(m):
        w.stat[j] = -1
    for i in range(r):
        k = hb[i]
        if k < 0 or k >= m or w.stat[k] == BASIC:
            return 0
        w.stat[k] = BASIC
        w.x[k] = 0.0
    for j in range(m):
        if w.stat[j] == BASIC:
            continue
        s = hs[j]
        if s == AT_LOWER and isfinite(w.lo[j]):
            w.x[j] = w.lo[j]
        elif s == AT_UPPER and isfinite(w.hi[j]):
            w.x[j] = w.hi[j]
        elif s == FREE_ZERO and not isfinite(w.lo[j]) and not isfinite(w.hi[j]):
            w.x[j] = 0.0
        else:
            return 0
        w.stat[j] = s
    for i in range(r):
        for j in range(m):
            if fabs(M[i, j]) > scale:
                scale = fabs(M[i, j])
    # U = M[:, hb]; R = [M | res] laid out r x (m + 1)
    cdef double* U = <double*> malloc((r * r + 1) * sizeof(double))
    cdef double* R = <double*> malloc((r * (m + 1) + 1) * sizeof(double))
    if U == NULL or R == NULL:
        free(U); free(R)
        return 0
    for i in range(r):
        for k in range(r):
            U[i * r + k] = M[i, hb[k]]
        val = b[i]
        for j in range(m):
            R[i * (m + 1) + j] = M[i, j]
            if w.stat[j] != BASIC and w.x[j] != 0.0:
                val -= M[i, j] * w.x[j]
        R[i * (m + 1) + m] = val
    rc = _lu_inplace(U, R, r, m + 1, piv_tol * scale)
    if rc != 0:
        free(U); free(R)
        return 0
    _back_substitute(U, R, r, m + 1)
    for i in range(r):
        val = R[i * (m + 1) + m]
        k = hb[i]
        if val < w.lo[k] - feas_tol or val > w.hi[k] + feas_tol:
            free(U); free(R)
            return 0
    for i in range(r):
        for j in range(N):
            w.T[i * N + j] = 0.0
        for j in range(m):
            w.T[i * N + j] = R[i * (m + 1) + j]
        w.beta[i] = R[i * (m + 1) + m]
        w.head[i] = hb[i]
        w.stat[m + i] = AT_LOWER
        w.x[m + i] = 0.0
        w.hi[m + i] = 0.0
        w.active[m + i] = 0
    free(U); free(R)
    return 1


cdef void _pivot(Work* w, int row, int col) noexcept nogil:
    cdef int N = w.N, i, j
    cdef double* prow = w.T + row * N
    cdef double* tr
    cdef double inv = prow[col]
    cdef double a, dq
    for j in range(N):
        prow[j] = prow[j] / inv
    for i in range(w.r):
        if i == row:
            continue
        tr = w.T + i * N
        a = tr[col]
        if a != 0.0:
            for j in range(N):
                tr[j] -= a * prow[j]
    dq = w.d[col]
    if dq != 0.0:
        for j in range(N):
            w.d[j] -= dq * prow[j]
    w.d[col] = 0.0


cdef void _drive_out(Work* w, double piv_tol) noexcept nogil:
    cdef int r = w.r, m = w.m, N = w.N, i, j, best, art
    cdef double bestval, v
    for i in range(r):
        if w.head[i] < m:
            continue
        best = -1
        bestval = piv_tol
        for j in range(m):
            v = fabs(w.T[i * N + j])
            if w.stat[j] != BASIC and v > bestval:
                best = j
                bestval = v
        if best < 0:
            continue
        art = w.head[i]
        _pivot(w, i, best)
        w.beta[i] = w.x[best]
        w.stat[art] = AT_LOWER
        w.x[art] = 0.0
        w.head[i] = best
        w.stat[best] = BASIC


cdef int _iterate(Work* w, int* it, int bland_after, int max_iter,
                  double piv_tol, double opt_tol) noexcept nogil:
    cdef int r = w.r, N = w.N, i, j, q, leave, bland
    cdef double dj, best, direction, theta_flip, tmin, window, theta, x_new, a, ti
    cdef double lo_h, hi_h, bestabs
    cdef long h, besthead
    cdef signed char sj
    while True:
        if it[0] >= max_iter:
            return ITERATION_LIMIT
        bland = it[0] >= bland_after
        q = -1
        best = 0.0
        for j in range(N):
            if not w.active[j] or w.lo[j] == w.hi[j]:
                continue
            sj = w.stat[j]
            dj = w.d[j]
            if ((sj == AT_LOWER and dj < -opt_tol) or (sj == AT_UPPER and dj > opt_tol)
                    or (sj == FREE_ZERO and fabs(dj) > opt_tol)):
                if bland:
                    q = j
                    break
                if fabs(dj) > best:
                    best = fabs(dj)
                    q = j
        if q < 0:
            return OPTIMAL
        if w.stat[q] == AT_LOWER or (w.stat[q] == FREE_ZERO and w.d[q] < 0.0):
            direction = 1.0
        else:
            direction = -1.0

        theta_flip = w.hi[q] - w.lo[q]
        tmin = INFINITY
        for i in range(r):
            w.alpha[i] = w.T[i * N + q]
            a = direction * w.alpha[i]
            h = w.head[i]
            lo_h = w.lo[h]
            hi_h = w.hi[h]
            ti = INFINITY
            if a > piv_tol and isfinite(lo_h):
                ti = (w.beta[i] - lo_h) / a
            elif a < -piv_tol and isfinite(hi_h):
                ti = (hi_h - w.beta[i]) / (-a)
            if ti < 0.0:
                ti = 0.0
            w.t[i] = ti
            if ti < tmin:
                tmin = ti

        if theta_flip <= tmin:
            if not isfinite(theta_flip):
                return UNBOUNDED
            theta = theta_flip
            leave = -1
        else:
            window = tmin + RATIO_TIE * _fmax(1.0, tmin)
            leave = -1
            bestabs = -1.0
            besthead = 0
            for i in range(r):
                if w.t[i] <= window:
                    if bland:
                        if leave < 0 or w.head[i] < besthead:
                            leave = i
                            besthead = w.head[i]
                    else:
                        a = fabs(w.alpha[i])
                        if a > bestabs:
                            bestabs = a
                            leave = i
            theta = w.t[leave]

        x_new = w.x[q] + direction * theta
        if theta != 0.0:
            for i in range(r):
                w.beta[i] -= (direction * theta) * w.alpha[i]
        if leave < 0:
            if direction > 0:
                w.stat[q] = AT_UPPER
                w.x[q] = w.hi[q]
            else:
                w.stat[q] = AT_LOWER
                w.x[q] = w.lo[q]
        else:
            h = w.head[leave]
            if direction * w.alpha[leave] > 0.0:
                w.stat[h] = AT_LOWER
                w.x[h] = w.lo[h]
            else:
                w.stat[h] = AT_UPPER
                w.x[h] = w.hi[h]
            _pivot(w, leave, q)
            w.beta[leave] = x_new
            w.head[leave] = q
            w.stat[q] = BASIC
            w.x[q] = 0.0
        it[0] += 1


cdef void _finish(Work* w, const double[:, ::1] M, const double[::1] b, int code, double piv_tol,
                  double[::1] y_out, signed char[::1] status_out, long[::1] basis_out,
                  double[::1] d_out) noexcept nogil:
    cdef int r = w.r, m = w.m, i, j, k, all_structural = 1, rc
    cdef double scale = 1.0, val
    cdef double* U = NULL
    cdef double* R = NULL
    for j in range(m):
        y_out[j] = w.x[j]
    for i in range(r):
        if w.head[i] < m:
            y_out[w.head[i]] = w.beta[i]
        else:
            all_structural = 0
    if code == OPTIMAL and all_structural and r > 0:
        for i in range(r):
            for j in range(m):
                if fabs(M[i, j]) > scale:
                    scale = fabs(M[i, j])
        U = <double*> malloc((r * r + 1) * sizeof(double))
        R = <double*> malloc((r + 1) * sizeof(double))
        if U != NULL and R != NULL:
            for i in range(r):
                for k in range(r):
                    U[i * r + k] = M[i, w.head[k]]
                val = b[i]
                for j in range(m):
                    if w.stat[j] != BASIC:
                        val -= M[i, j] * y_out[j]
                R[i] = val
            rc = _lu_inplace(U, R, r, 1, piv_tol * scale)
            if rc == 0:
                _back_substitute(U, R, r, 1)
                for i in range(r):
                    y_out[w.head[i]] = R[i]
        free(U); free(R)
    for j in range(m):
        status_out[j] = w.stat[j]
        d_out[j] = w.d[j]
    for i in range(r):
        basis_out[i] = w.head[i]


def simplex_solve(const double[:, ::1] M, const double[::1] b, const double[::1] c,
                  const double[::1] lo, const double[::1] hi, bint phase1_only, hint_basis, hint_status,
                  int bland_after, int max_iter, double feas_tol, double piv_tol,
                  double opt_tol, double[::1] y_out, signed char[::1] status_out,
                  long[::1] basis_out, double[::1] d_out, verbose=False):
    """Bounded-variable primal simplex on ``min c.y, M y = b, lo <= y <= hi``.

    Writes the solution into the ``*_out`` buffers and returns
    ``(code, objective, iterations)``. ``verbose`` is accepted for signature
    parity with the Python kernel and ignored here.
    """
    cdef int r = M.shape[0], m = M.shape[1], i, j, code, warm = 0, infeasible
    cdef int it = 0
    cdef const long[::1] hb
    cdef const signed char[::1] hs
    cdef Work w
    cdef double obj
    if _alloc(&w, r, m) != 0:
        _release(&w)
        raise MemoryError()
    try:
        for j in range(m):
            w.lo[j] = lo[j]
            w.hi[j] = hi[j]
        for i in range(r):
            w.lo[m + i] = 0.0
            w.hi[m + i] = INFINITY
        if hint_basis is not None:
            hb = np.ascontiguousarray(hint_basis, dtype=np.int64)
            hs = np.ascontiguousarray(hint_status, dtype=np.int8)
            with nogil:
                warm = _warm_start(&w, M, b, hb, hs, feas_tol, piv_tol)
        with nogil:
            if not warm:
                _cold_start(&w, M, b)
                for i in range(r):
                    w.cost[m + i] = 1.0
                _reduced_costs(&w)
                code = _iterate(&w, &it, bland_after, max_iter, piv_tol, opt_tol)
                if code == OPTIMAL:
                    infeasible = 0
                    for i in range(r):
                        if w.head[i] >= m and w.beta[i] > feas_tol:
                            infeasible = 1
                    if infeasible:
                        code = INFEASIBLE
                    else:
                        _drive_out(&w, piv_tol)
                        for i in range(r):
                            w.hi[m + i] = 0.0
                            w.active[m + i] = 0
                        if not phase1_only:
                            code = -1
            else:
                code = -1
            if code == -1:
                for j in range(m):
                    w.cost[j] = c[j]
                for i in range(r):
                    w.cost[m + i] = 0.0
                _reduced_costs(&w)
                code = _iterate(&w, &it, bland_after, max_iter, piv_tol, opt_tol)
            _finish(&w, M, b, code, piv_tol, y_out, status_out, basis_out, d_out)
        if code == OPTIMAL:
            obj = 0.0
            for j in range(m):
                obj += c[j] * y_out[j]
        else:
            obj = float("nan")
        return code, obj, it
    finally:
        _release(&w)
