# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same contracts as ``_pykernels``; float64 only."""

import numpy as np

from libc.math cimport fabs, frexp, ldexp, NAN

cdef double _RESCALE_AT = 2.0 ** 300


def tridiag_solve(double[::1] a, double[::1] b, double[::1] c, double[::1] d):
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i
    cdef double piv, min_piv
    cp_arr = np.zeros(n)
    dp_arr = np.zeros(n)
    x_arr = np.empty(n)
    cdef double[::1] cp = cp_arr
    cdef double[::1] dp = dp_arr
    cdef double[::1] x = x_arr

    piv = b[0]
    min_piv = fabs(piv)
    if piv == 0.0:
        x_arr.fill(NAN)
        return x_arr, 0.0
    if n > 1:
        cp[0] = c[0] / piv
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = b[i] - a[i] * cp[i - 1]
        if fabs(piv) < min_piv:
            min_piv = fabs(piv)
        if piv == 0.0:
            x_arr.fill(NAN)
            return x_arr, 0.0
        if i < n - 1:
            cp[i] = c[i] / piv
        dp[i] = (d[i] - a[i] * dp[i - 1]) / piv
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x_arr, min_piv


def iterate_map(double z0, double psi0, double c, double E, Py_ssize_t steps, double bound):
    zs_arr = np.empty(steps + 1)
    ps_arr = np.empty(steps + 1)
    cdef double[::1] zs = zs_arr
    cdef double[::1] ps = ps_arr
    cdef double z = z0
    cdef double p = psi0
    cdef Py_ssize_t k
    zs[0] = z
    ps[0] = p
    if not (fabs(z) <= bound and fabs(p) <= bound):
        return zs_arr[:1], ps_arr[:1], 0
    for k in range(1, steps + 1):
        z = z - E * p - c * p * p * p
        p = p + z
        zs[k] = z
        ps[k] = p
        if not (fabs(z) <= bound and fabs(p) <= bound):
            return zs_arr[:k + 1], ps_arr[:k + 1], k
    return zs_arr, ps_arr, -1


def transfer_trace(psi, double c, double E):
    cdef double[::1] x = np.ascontiguousarray(psi, dtype=np.float64)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0
    cdef double t, n00, n01, big
    cdef int e
    cdef long exp2 = 0
    for i in range(n):
        t = 2.0 - E - 3.0 * c * x[i] * x[i]
        n00 = t * m00 - m10
        n01 = t * m01 - m11
        m10 = m00
        m11 = m01
        m00 = n00
        m01 = n01
        big = max(fabs(m00), fabs(m01), fabs(m10), fabs(m11))
        if big > _RESCALE_AT:
            frexp(big, &e)
            m00 = ldexp(m00, -e)
            m01 = ldexp(m01, -e)
            m10 = ldexp(m10, -e)
            m11 = ldexp(m11, -e)
            exp2 += e
    return m00 + m11, exp2


def greedy_cluster(points, double tol):
    cdef double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t n = pts.shape[0]
    labels_arr = np.empty(n, dtype=np.intp)
    sx_arr = np.empty(n)
    sy_arr = np.empty(n)
    cx_arr = np.empty(n)
    cy_arr = np.empty(n)
    cnt_arr = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] labels = labels_arr
    cdef double[::1] sx = sx_arr, sy = sy_arr, cx = cx_arr, cy = cy_arr
    cdef Py_ssize_t[::1] cnt = cnt_arr
    cdef Py_ssize_t i, j, k = 0
    cdef double x, y
    for i in range(n):
        x = pts[i, 0]
        y = pts[i, 1]
        for j in range(k):
            if fabs(cx[j] - x) <= tol and fabs(cy[j] - y) <= tol:
                sx[j] += x
                sy[j] += y
                cnt[j] += 1
                cx[j] = sx[j] / cnt[j]
                cy[j] = sy[j] / cnt[j]
                labels[i] = j
                break
        else:
            sx[k] = x
            sy[k] = y
            cx[k] = x
            cy[k] = y
            cnt[k] = 1
            labels[i] = k
            k += 1
    centers = np.column_stack([cx_arr[:k], cy_arr[:k]]) if k else np.empty((0, 2))
    return labels_arr, centers, cnt_arr[:k].copy()
